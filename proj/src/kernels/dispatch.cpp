#include "backends.hpp"

#include <cstdlib>
#include <cstring>

namespace mfatt::kernels {
namespace {

const Backend* best_supported() {
#ifdef MFATT_HAVE_AVX2
    if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma"))
        return &avx2_backend();
#endif
    return &scalar_backend();
}

} // namespace

const Backend* find(const char* name) {
    if (std::strcmp(name, "scalar") == 0) return &scalar_backend();
#ifdef MFATT_HAVE_AVX2
    if (std::strcmp(name, "avx2") == 0 &&
        __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma"))
        return &avx2_backend();
#endif
    return nullptr;
}

const Backend& active() {
    static const Backend* chosen = [] {
        if (const char* env = std::getenv("MFATT_KERNEL")) {
            if (const Backend* b = find(env)) return b;
        }
        return best_supported();
    }();
    return *chosen;
}

} // namespace mfatt::kernels
