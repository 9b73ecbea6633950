// AVX2+FMA kernel variants. Compiled with -mavx2 -mfma and executed only
// when runtime dispatch confirms CPU support.

#include "backends.hpp"

#include <immintrin.h>

#include <array>
#include <cmath>

namespace mfatt::kernels {
namespace {

constexpr int kSeriesTerms = 52;   // power series converged at x = 20
constexpr int kAsymTerms = 30;     // asymptotic series still decreasing at x = 20

struct Tables {
    std::array<double, kSeriesTerms + 1> inv_k2{};    // 1/k^2
    std::array<double, kAsymTerms + 1> odd2_k{};      // (2k-1)^2/k
    Tables() {
        for (int k = 1; k <= kSeriesTerms; ++k)
            inv_k2[static_cast<std::size_t>(k)] = 1.0 / (static_cast<double>(k) * k);
        for (int k = 1; k <= kAsymTerms; ++k) {
            const double odd = 2.0 * k - 1.0;
            odd2_k[static_cast<std::size_t>(k)] = odd * odd / static_cast<double>(k);
        }
    }
};
const Tables kTab;

inline __m256d exp4(__m256d x) {
    const __m256d hi_cut = _mm256_set1_pd(709.0);
    const __m256d lo_cut = _mm256_set1_pd(-746.0);
    const __m256d zero_mask = _mm256_cmp_pd(x, lo_cut, _CMP_LT_OQ);
    x = _mm256_min_pd(_mm256_max_pd(x, lo_cut), hi_cut);

    const __m256d log2e = _mm256_set1_pd(1.4426950408889634074);
    const __m256d ln2hi = _mm256_set1_pd(6.93147180369123816490e-01);
    const __m256d ln2lo = _mm256_set1_pd(1.90821492927058770002e-10);
    const __m256d n = _mm256_round_pd(_mm256_mul_pd(x, log2e),
                                      _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    __m256d r = _mm256_fnmadd_pd(n, ln2hi, x);
    r = _mm256_fnmadd_pd(n, ln2lo, r);

    // e^r by 13th-order Taylor polynomial, |r| <= ln(2)/2
    __m256d p = _mm256_set1_pd(1.0 / 6227020800.0);
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 479001600.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 39916800.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 3628800.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 362880.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 40320.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 5040.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 720.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 120.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 24.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 6.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(0.5));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0));

    // scale by 2^n in two factors so subnormal results underflow gradually
    const __m256d magic = _mm256_set1_pd(6755399441055744.0);  // 1.5 * 2^52
    const __m256i ni = _mm256_sub_epi64(_mm256_castpd_si256(_mm256_add_pd(n, magic)),
                                        _mm256_castpd_si256(magic));
    // arithmetic >>1 of small int64 values via 32-bit lanes (|n| < 2^31)
    const __m256i nh = _mm256_srai_epi32(ni, 1);
    const __m256i bias = _mm256_set1_epi64x(1023);
    const __m256d pow2a = _mm256_castsi256_pd(_mm256_slli_epi64(_mm256_add_epi64(nh, bias), 52));
    const __m256d pow2b = _mm256_castsi256_pd(
        _mm256_slli_epi64(_mm256_add_epi64(_mm256_sub_epi64(ni, nh), bias), 52));
    p = _mm256_mul_pd(_mm256_mul_pd(p, pow2a), pow2b);
    return _mm256_andnot_pd(zero_mask, p);
}

inline __m256d i0e4(__m256d x) {
    const __m256d one = _mm256_set1_pd(1.0);
    const __m256d big = _mm256_cmp_pd(x, _mm256_set1_pd(20.0), _CMP_GE_OQ);
    const int mb = _mm256_movemask_pd(big);

    const __m256d conv = _mm256_set1_pd(1e-18);
    __m256d small_v = _mm256_setzero_pd();
    if (mb != 0xF) {
        const __m256d q = _mm256_mul_pd(_mm256_mul_pd(x, x), _mm256_set1_pd(0.25));
        __m256d term = one;
        __m256d sum = one;
        for (int k = 1; k <= kSeriesTerms; ++k) {
            term = _mm256_mul_pd(term,
                                 _mm256_mul_pd(q, _mm256_set1_pd(kTab.inv_k2[static_cast<std::size_t>(k)])));
            sum = _mm256_add_pd(sum, term);
            if ((k & 3) == 0 &&
                _mm256_movemask_pd(_mm256_cmp_pd(term, _mm256_mul_pd(sum, conv), _CMP_LT_OQ)) == 0xF)
                break;
        }
        small_v = _mm256_mul_pd(sum, exp4(_mm256_sub_pd(_mm256_setzero_pd(), x)));
    }

    __m256d big_v = _mm256_setzero_pd();
    if (mb != 0x0) {
        const __m256d xg = _mm256_max_pd(x, one);  // keep masked-off lanes finite
        const __m256d z = _mm256_div_pd(one, _mm256_mul_pd(xg, _mm256_set1_pd(8.0)));
        __m256d term = one;
        __m256d sum = one;
        for (int k = 1; k <= kAsymTerms; ++k) {
            term = _mm256_mul_pd(term,
                                 _mm256_mul_pd(z, _mm256_set1_pd(kTab.odd2_k[static_cast<std::size_t>(k)])));
            sum = _mm256_add_pd(sum, term);
            if ((k & 3) == 0 &&
                _mm256_movemask_pd(_mm256_cmp_pd(term, _mm256_mul_pd(sum, conv), _CMP_LT_OQ)) == 0xF)
                break;
        }
        big_v = _mm256_div_pd(
            sum, _mm256_sqrt_pd(_mm256_mul_pd(xg, _mm256_set1_pd(2.0 * M_PI))));
    }
    return _mm256_blendv_pd(small_v, big_v, big);
}

inline double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

void exp_batch(const double* x, double* y, int n) {
    int i = 0;
    for (; i + 4 <= n; i += 4) _mm256_storeu_pd(y + i, exp4(_mm256_loadu_pd(x + i)));
    if (i < n) {
        alignas(32) double xin[4] = {0, 0, 0, 0};
        alignas(32) double yout[4];
        for (int j = i; j < n; ++j) xin[j - i] = x[j];
        _mm256_store_pd(yout, exp4(_mm256_load_pd(xin)));
        for (int j = i; j < n; ++j) y[j] = yout[j - i];
    }
}

double i0e1(double x) {
    alignas(32) double out[4];
    _mm256_store_pd(out, i0e4(_mm256_set1_pd(x)));
    return out[0];
}

PanelSums bessel_panel(const double* u, const double* w, int n,
                       double a, double b, double lin0, double lin1) {
    const __m256d one = _mm256_set1_pd(1.0);
    const __m256d av = _mm256_set1_pd(a);
    const __m256d bv = _mm256_set1_pd(b);
    const __m256d l0 = _mm256_set1_pd(lin0);
    const __m256d l1 = _mm256_set1_pd(lin1);
    __m256d accf = _mm256_setzero_pd();
    __m256d accuf = _mm256_setzero_pd();

    auto body = [&](__m256d ui, __m256d wi) {
        const __m256d x1 = _mm256_mul_pd(av, _mm256_sub_pd(one, ui));
        const __m256d x2 = _mm256_mul_pd(bv, _mm256_add_pd(one, ui));
        __m256d f = _mm256_mul_pd(i0e4(x1), i0e4(x2));
        f = _mm256_mul_pd(f, exp4(_mm256_fmadd_pd(l1, ui, l0)));
        accf = _mm256_fmadd_pd(wi, f, accf);
        accuf = _mm256_fmadd_pd(_mm256_mul_pd(wi, ui), f, accuf);
    };

    int i = 0;
    for (; i + 4 <= n; i += 4) body(_mm256_loadu_pd(u + i), _mm256_loadu_pd(w + i));
    if (i < n) {
        alignas(32) double up[4] = {0, 0, 0, 0};
        alignas(32) double wp[4] = {0, 0, 0, 0};  // zero weights: padded lanes contribute nothing
        for (int j = i; j < n; ++j) {
            up[j - i] = u[j];
            wp[j - i] = w[j];
        }
        body(_mm256_load_pd(up), _mm256_load_pd(wp));
    }
    return {hsum(accf), hsum(accuf)};
}

EulerSums euler_sweep(const double* cg, const double* sg, const double* w,
                      int n, const EulerCoeffs& c) {
    const __m256d ta = _mm256_set1_pd(c.ta);
    const __m256d tb = _mm256_set1_pd(c.tb);
    const __m256d tc = _mm256_set1_pd(c.tc);
    const __m256d ca = _mm256_set1_pd(c.ca);
    const __m256d sacb = _mm256_set1_pd(c.sacb);
    const __m256d cacb = _mm256_set1_pd(c.cacb);
    const __m256d sa = _mm256_set1_pd(c.sa);
    __m256d a0 = _mm256_setzero_pd();
    __m256d a1 = _mm256_setzero_pd();
    __m256d a2 = _mm256_setzero_pd();

    auto body = [&](__m256d cgi, __m256d sgi, __m256d wi) {
        const __m256d t = _mm256_fmadd_pd(ta, cgi, _mm256_fmadd_pd(tb, sgi, tc));
        const __m256d e = _mm256_mul_pd(wi, exp4(t));
        a0 = _mm256_add_pd(a0, e);
        a1 = _mm256_fmadd_pd(e, _mm256_fnmadd_pd(sacb, sgi, _mm256_mul_pd(ca, cgi)), a1);
        a2 = _mm256_fmadd_pd(e, _mm256_fnmadd_pd(sa, sgi, _mm256_mul_pd(cacb, cgi)), a2);
    };

    int i = 0;
    for (; i + 4 <= n; i += 4)
        body(_mm256_loadu_pd(cg + i), _mm256_loadu_pd(sg + i), _mm256_loadu_pd(w + i));
    if (i < n) {
        alignas(32) double cp[4] = {0, 0, 0, 0};
        alignas(32) double sp[4] = {0, 0, 0, 0};
        alignas(32) double wp[4] = {0, 0, 0, 0};
        for (int j = i; j < n; ++j) {
            cp[j - i] = cg[j];
            sp[j - i] = sg[j];
            wp[j - i] = w[j];
        }
        body(_mm256_load_pd(cp), _mm256_load_pd(sp), _mm256_load_pd(wp));
    }
    return {hsum(a0), hsum(a1), hsum(a2)};
}

} // namespace

const Backend& avx2_backend() {
    static const Backend b{"avx2", &exp_batch, &i0e1, &bessel_panel, &euler_sweep};
    return b;
}

} // namespace mfatt::kernels
