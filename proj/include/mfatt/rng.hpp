#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace mfatt {

/**
 * @brief Deterministic random stream with counter-based substream derivation.
 *
 * A stream is identified by a 64-bit key derived from a seed path
 * (scenario seed -> run index -> sensor channel). Substreams are derived
 * from the key, never from engine state, so the stream layout is
 * independent of draw order and worker count. Each instance is
 * single-owner; never share one across threads.
 */
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : key_(mix(seed ^ kRootSalt)), eng_(key_) {}

    /// Derive a child stream; deterministic in (key, label) only.
    RngStream substream(std::uint64_t label) const { return RngStream(key_, label); }

    std::uint64_t key() const { return key_; }

    std::uint64_t next_u64() { return eng_(); }

    /// Uniform on [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    /// Uniform on (0, 1]; safe as a log() argument.
    double uniform_pos() { return (static_cast<double>(eng_() >> 11) + 1.0) * 0x1.0p-53; }

    /// Standard normal deviate (Box-Muller; pairs cached).
    double gauss() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u = uniform_pos();
        const double v = uniform();
        const double r = std::sqrt(-2.0 * std::log(u));
        const double a = 6.283185307179586476925286766559 * v;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

private:
    RngStream(std::uint64_t parent_key, std::uint64_t label)
        : key_(mix(parent_key ^ mix(label + kChildSalt))), eng_(key_) {}

    // splitmix64 finalizer
    static std::uint64_t mix(std::uint64_t x) {
        x += 0x9e3779b97f4a7c15ull;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
        return x ^ (x >> 31);
    }

    static constexpr std::uint64_t kRootSalt = 0x6d666174745f726eull;
    static constexpr std::uint64_t kChildSalt = 0x7375627374726d21ull;

    std::uint64_t key_;
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace mfatt
