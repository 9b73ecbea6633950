#include "mfatt/matrix_fisher.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <unordered_map>
#include <vector>

#include "mfatt/kernels/kernels.hpp"

namespace mfatt::mf {
namespace {

std::atomic<std::uint64_t> g_moment_clamps{0};
std::atomic<std::uint64_t> g_newton_failures{0};
std::atomic<std::uint64_t> g_belief_caps{0};

// 16-point Gauss-Legendre rule on [-1, 1].
constexpr int kGL = 16;
constexpr double kGLx[kGL / 2] = {
    0.09501250983763744019, 0.28160355077925891323, 0.45801677765722738634,
    0.61787624440264374845, 0.75540440835500303390, 0.86563120238783174388,
    0.94457502307323257608, 0.98940093499164993260};
constexpr double kGLw[kGL / 2] = {
    0.18945061045506849629, 0.18260341504492358887, 0.16915651939500253819,
    0.14959598881657673208, 0.12462897125553387205, 0.09515851168249278481,
    0.06225352393864789286, 0.02715245941175409485};

void fill_panel(double lo, double hi, double* u, double* w) {
    const double c = 0.5 * (lo + hi);
    const double h = 0.5 * (hi - lo);
    for (int i = 0; i < kGL / 2; ++i) {
        u[2 * i] = c - h * kGLx[i];
        u[2 * i + 1] = c + h * kGLx[i];
        w[2 * i] = w[2 * i + 1] = h * kGLw[i];
    }
}

void check_guard(const Vec3& s) {
    if (!s.allFinite() || s.cwiseAbs().maxCoeff() > kConcentrationGuard) {
        throw OverflowGuard("log_c: concentration outside guarded domain |s_i| <= 500");
    }
}

// One slot of the 1-D representation: with (i,j,k) a permutation of (1,2,3),
//   c(S) = int_{-1}^{1} (1/2) I0(a(1-u)) I0(b(1+u)) exp(s_k u) du,
//   a = |s_i - s_j|/2,  b = |s_i + s_j|/2,
// and dc/ds_k is the same integral weighted by u. The shifted integrand is
//   i0e(x1) i0e(x2) exp(lin0 + lin1 u) with a maximum of 1 at an endpoint;
// its log-derivative is monotone, so interior maxima cannot occur and
// panels seeded geometrically toward both endpoints are safe.
struct SlotResult {
    double log_c;
    double d;
};

SlotResult integrate_slot(double si, double sj, double sk, double rel_tol) {
    const kernels::Backend& kern = kernels::active();
    const double a = 0.5 * std::abs(si - sj);
    const double b = 0.5 * std::abs(si + sj);
    const double lin1 = b - a + sk;
    const double lin0 = -std::abs(lin1);
    const double shift = a + b + std::abs(lin1);

    const auto eval = [&](double lo, double hi) {
        double u[kGL], w[kGL];
        fill_panel(lo, hi, u, w);
        return kern.bessel_panel(u, w, kGL, a, b, lin0, lin1);
    };

    // Seed breakpoints, geometrically refined toward both endpoints. When
    // the opposite endpoint is suppressed by at least e^-60 it only needs
    // coverage, not refinement.
    const double scale = a + b + std::abs(sk) + 2.0;
    const bool refine_lo = lin1 <= 30.0;
    const bool refine_hi = lin1 >= -30.0;
    std::vector<double> breaks{-1.0, 0.0, 1.0};
    for (double wdt = std::min(0.5, 8.0 / scale); wdt < 0.49; wdt *= 4.0) {
        if (refine_hi) breaks.push_back(1.0 - wdt);
        if (refine_lo) breaks.push_back(-1.0 + wdt);
    }
    std::sort(breaks.begin(), breaks.end());

    struct Panel {
        double lo, hi;
        kernels::PanelSums coarse;
    };
    std::vector<Panel> stack;
    double seed_total = 0.0;
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
        Panel p{breaks[i], breaks[i + 1], eval(breaks[i], breaks[i + 1])};
        seed_total += p.coarse.f;
        stack.push_back(p);
    }
    // Flat per-panel budget; the machine floor stops refinement once panel
    // sums are rounding-limited. Total relative error ~ panel count * budget.
    const double tol_abs = std::max(seed_total, 1e-280) * std::max(rel_tol / 32.0, 1e-15);

    kernels::PanelSums total;
    while (!stack.empty()) {
        const Panel p = stack.back();
        stack.pop_back();
        if (p.coarse.f <= tol_abs) {  // negligible panel, below the error budget
            total.f += p.coarse.f;
            total.uf += p.coarse.uf;
            continue;
        }
        const double mid = 0.5 * (p.lo + p.hi);
        const kernels::PanelSums left = eval(p.lo, mid);
        const kernels::PanelSums right = eval(mid, p.hi);
        const double err = std::abs(left.f + right.f - p.coarse.f);
        if (err <= tol_abs || (p.hi - p.lo) < 1e-9) {
            total.f += left.f + right.f;
            total.uf += left.uf + right.uf;
        } else {
            stack.push_back(Panel{p.lo, mid, left});
            stack.push_back(Panel{mid, p.hi, right});
        }
    }

    return SlotResult{shift + std::log(0.5 * total.f), total.uf / total.f};
}

LogC log_c_full_uncached(const Vec3& s, double rel_tol) {
    double logc[3];
    double d[3];
    for (int k = 0; k < 3; ++k) {
        const int i = (k + 1) % 3;
        const int j = (k + 2) % 3;
        const SlotResult r = integrate_slot(s[i], s[j], s[k], rel_tol);
        logc[k] = r.log_c;
        d[k] = r.d;
    }
    // The three slots are independent evaluations of the same constant.
    LogC out;
    out.value = logc[0];
    out.moments = MomentDiagonal{d[0], d[1], d[2]};
    return out;
}

struct MemoKey {
    std::int64_t a, b, c;
    bool operator==(const MemoKey&) const = default;
};
struct MemoHash {
    std::size_t operator()(const MemoKey& k) const {
        std::uint64_t h = 0x9e3779b97f4a7c15ull;
        for (std::int64_t v : {k.a, k.b, k.c}) {
            h ^= static_cast<std::uint64_t>(v) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
        }
        return static_cast<std::size_t>(h);
    }
};

} // namespace

LogC log_c_full(const Vec3& s) {
    check_guard(s);
    thread_local std::unordered_map<MemoKey, LogC, MemoHash> memo;
    const MemoKey key{std::llround(s.x() * 1e12), std::llround(s.y() * 1e12),
                      std::llround(s.z() * 1e12)};
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    const LogC out = log_c_full_uncached(s, 1e-13);
    if (memo.size() >= 65536) memo.clear();
    memo.emplace(key, out);
    return out;
}

double log_c(const Vec3& s) { return log_c_full(s).value; }

MomentDiagonal dlog_c(const Vec3& s) { return log_c_full(s).moments; }

LogC log_c_quadrature(const Vec3& s, double rel_tol) {
    check_guard(s);
    const kernels::Backend& kern = kernels::active();
    const double shift = s.cwiseAbs().sum();

    const auto level = [&](int panels) {
        const int na = kGL * panels;            // alpha and gamma nodes
        const int nb = kGL * std::max(panels / 2, 2);
        std::vector<double> ca(na), sa(na), wa(na), cb(nb), sb(nb), wb(nb);
        const auto fill_circle = [&](std::vector<double>& cs, std::vector<double>& sn,
                                     std::vector<double>& wt, double span, int count) {
            const int pan = count / kGL;
            std::vector<double> u(kGL), w(kGL);
            for (int p = 0; p < pan; ++p) {
                fill_panel(span * p / pan, span * (p + 1) / pan, u.data(), w.data());
                for (int i = 0; i < kGL; ++i) {
                    cs[static_cast<std::size_t>(p * kGL + i)] = std::cos(u[i]);
                    sn[static_cast<std::size_t>(p * kGL + i)] = std::sin(u[i]);
                    wt[static_cast<std::size_t>(p * kGL + i)] = w[i];
                }
            }
        };
        fill_circle(ca, sa, wa, 2.0 * M_PI, na);
        fill_circle(cb, sb, wb, M_PI, nb);

        double s0 = 0.0, s11 = 0.0, s22 = 0.0, s33 = 0.0;
        for (int ib = 0; ib < nb; ++ib) {
            const double cbv = cb[static_cast<std::size_t>(ib)];
            const double haar = wb[static_cast<std::size_t>(ib)] * sb[static_cast<std::size_t>(ib)];
            for (int ia = 0; ia < na; ++ia) {
                const double cav = ca[static_cast<std::size_t>(ia)];
                const double sav = sa[static_cast<std::size_t>(ia)];
                kernels::EulerCoeffs c;
                c.ta = cav * (s.x() + s.y() * cbv);
                c.tb = -sav * (s.x() * cbv + s.y());
                c.tc = s.z() * cbv - shift;
                c.ca = cav;
                c.sacb = sav * cbv;
                c.cacb = cav * cbv;
                c.sa = sav;
                const kernels::EulerSums es =
                    kern.euler_sweep(ca.data(), sa.data(), wa.data(), na, c);
                const double wsl = haar * wa[static_cast<std::size_t>(ia)];
                s0 += wsl * es.f;
                s11 += wsl * es.f11;
                s22 += wsl * es.f22;
                s33 += wsl * cbv * es.f;
            }
        }
        LogC out;
        out.value = shift + std::log(s0 / (8.0 * M_PI * M_PI));
        out.moments = MomentDiagonal{s11 / s0, s22 / s0, s33 / s0};
        return out;
    };

    LogC prev = level(8);
    for (int panels = 16; panels <= 64; panels *= 2) {
        const LogC cur = level(panels);
        if (std::abs(cur.value - prev.value) <= rel_tol * std::max(1.0, std::abs(cur.value))) {
            return cur;
        }
        prev = cur;
    }
    throw NoConvergence("log_c_quadrature: panel doubling did not converge");
}

MatrixFisher::MatrixFisher() : MatrixFisher(Mat3::Zero().eval()) {}

MatrixFisher::MatrixFisher(const Mat3& f) : f_(f), svd_(so3::proper_svd(f)) {
    const LogC lc = log_c_full(svd_.s);
    log_c_ = lc.value;
    dlog_ = lc.moments;
}

MatrixFisher MatrixFisher::from_proper_svd(const Rotation& u, const Vec3& s, const Rotation& v) {
    MatrixFisher out;
    out.svd_ = ProperSVD{u, s, v};
    out.f_ = out.svd_.reconstruct();
    const LogC lc = log_c_full(s);
    out.log_c_ = lc.value;
    out.dlog_ = lc.moments;
    return out;
}

double MatrixFisher::log_density(const Rotation& r) const {
    return (f_.transpose() * r.matrix()).trace() - log_c_;
}

Mat3 MatrixFisher::first_moment() const {
    return svd_.u.matrix() * dlog_.vec().asDiagonal() * svd_.v.matrix().transpose();
}

Rotation MatrixFisher::mode() const {
    return Rotation::from_matrix_unchecked(svd_.u.matrix() * svd_.v.matrix().transpose());
}

bool MatrixFisher::mode_degenerate() const { return svd_.s.y() + svd_.s.z() <= 1e-9; }

MatrixFisher fit_from_moment(const Mat3& m, const FitOptions& opt) {
    const ProperSVD p = so3::proper_svd(m);
    Vec3 d = p.s;
    for (int i = 0; i < 3; ++i) {
        if (std::abs(d[i]) > 1.0 - 1e-6) {
            d[i] = std::copysign(1.0 - 1e-6, d[i]);
            g_moment_clamps.fetch_add(1, std::memory_order_relaxed);
        }
    }
    if (d.sum() <= -1.0 + 1e-12) {
        throw NonAttainableMoment("fit_from_moment: d1+d2+d3 <= -1 is not a rotation moment");
    }

    const auto clamp_box = [&](Vec3 s) {
        for (int i = 0; i < 3; ++i) s[i] = std::clamp(s[i], -opt.s_max, opt.s_max);
        return s;
    };

    Vec3 s = clamp_box(opt.hint ? *opt.hint : (3.0 * d).eval());
    Vec3 g = dlog_c(s).vec() - d;
    const double tol = opt.residual_tol;
    constexpr double kFdStep = 1e-5;
    bool converged = false;

    const auto fd_jacobian = [&](const Vec3& at) {
        Mat3 jac;
        for (int j = 0; j < 3; ++j) {
            Vec3 sp = at, sm = at;
            sp[j] += kFdStep;
            sm[j] -= kFdStep;
            jac.col(j) = (dlog_c(sp).vec() - dlog_c(sm).vec()) / (2.0 * kFdStep);
        }
        return jac;
    };

    Mat3 jac = Mat3::Zero();
    bool have_jac = false;
    bool jac_fresh = false;
    if (opt.jacobian_cache && opt.jacobian_cache->allFinite() &&
        opt.jacobian_cache->norm() > 0.0) {
        jac = *opt.jacobian_cache;
        have_jac = true;
    }
    double contraction = 0.0;

    for (int iter = 0; iter < 100; ++iter) {
        if (g.cwiseAbs().maxCoeff() <= tol) {
            converged = true;
            break;
        }
        if (!have_jac || (!jac_fresh && contraction > 0.35)) {
            jac = fd_jacobian(s);
            have_jac = true;
            jac_fresh = true;
        }
        const Vec3 step = jac.fullPivLu().solve(-g);
        if (!step.allFinite()) break;

        bool improved = false;
        double lambda = 1.0;
        for (int halving = 0; halving < 40; ++halving, lambda *= 0.5) {
            const Vec3 s_try = clamp_box(s + lambda * step);
            const Vec3 g_try = dlog_c(s_try).vec() - d;
            if (g_try.norm() < g.norm()) {
                contraction = g_try.norm() / std::max(g.norm(), 1e-300);
                s = s_try;
                g = g_try;
                improved = true;
                break;
            }
        }
        if (improved) {
            jac_fresh = false;
            continue;
        }
        if (!jac_fresh) {  // stale direction; retry once with a fresh Jacobian
            have_jac = false;
            continue;
        }
        break;  // stalled with a fresh Jacobian (typically pinned at the box)
    }
    if (opt.jacobian_cache && have_jac) *opt.jacobian_cache = jac;

    if (!converged && g.cwiseAbs().maxCoeff() > 100.0 * tol) {
        const bool pinned = (s.cwiseAbs().array() >= opt.s_max - 1e-9).any();
        if (opt.saturate_at_box && pinned) {
            g_belief_caps.fetch_add(1, std::memory_order_relaxed);
        } else {
            g_newton_failures.fetch_add(1, std::memory_order_relaxed);
            throw NoConvergence("fit_from_moment: Newton did not reach tolerance");
        }
    }
    return MatrixFisher::from_proper_svd(p.u, s, p.v);
}

Rotation sample(const MatrixFisher& mf, RngStream& rng) {
    const Vec3& s = mf.svd().s;
    const double bound = s.sum();
    if (bound > 40.0) {
        throw EfficiencyGuard("sample: s1+s2+s3 > 40, rejection rate too low");
    }
    const Mat3 ft = mf.parameter().transpose();
    for (;;) {
        const Rotation r = so3::sample_uniform(rng);
        const double log_acc = (ft * r.matrix()).trace() - bound;
        if (std::log(rng.uniform_pos()) <= log_acc) return r;
    }
}

Diagnostics diagnostics() {
    return Diagnostics{g_moment_clamps.load(), g_newton_failures.load(), g_belief_caps.load()};
}

void reset_diagnostics() {
    g_moment_clamps = 0;
    g_newton_failures = 0;
    g_belief_caps = 0;
}

} // namespace mfatt::mf
