/**
 * @file kernels.hpp
 * @brief Data-parallel inner loops of the normalizing-constant quadratures,
 *        with scalar reference kernels and SIMD variants selected at runtime.
 *
 * Two reductions dominate the estimator's cost:
 *
 *  - bessel_panel: one Gauss-Legendre panel of the 1-D representation of
 *    c(S),  f(u) = i0e(a(1-u)) * i0e(b(1+u)) * exp(lin0 + lin1*u),
 *    accumulating (sum w f, sum w u f). The caller chooses lin0/lin1 so the
 *    exponent is <= 0 on the panel (log-domain shift).
 *
 *  - euler_sweep: the innermost gamma sweep of the 3-D Euler-angle
 *    quadrature of c(S) at fixed (alpha, beta),
 *    t = ta*cos(g) + tb*sin(g) + tc,  f = exp(t),
 *    accumulating (sum w f, sum w f r11, sum w f r22) with
 *    r11 = ca*cos(g) - sacb*sin(g),  r22 = cacb*cos(g) - sa*sin(g).
 *
 * Backends must agree to floating-point roundoff; an equivalence suite
 * checks every compiled lane against the scalar reference.
 */
#pragma once

namespace mfatt::kernels {

struct PanelSums {
    double f = 0.0;
    double uf = 0.0;
};

struct EulerSums {
    double f = 0.0;
    double f11 = 0.0;
    double f22 = 0.0;
};

struct EulerCoeffs {
    double ta, tb, tc;
    double ca, sacb, cacb, sa;
};

struct Backend {
    const char* name;

    /// y[i] = exp(x[i]); exact underflow to 0 below about -745.
    void (*exp_batch)(const double* x, double* y, int n);

    /// Scaled modified Bessel function e^{-x} I0(x) for x >= 0.
    double (*i0e)(double x);

    PanelSums (*bessel_panel)(const double* u, const double* w, int n,
                              double a, double b, double lin0, double lin1);

    EulerSums (*euler_sweep)(const double* cg, const double* sg, const double* w,
                             int n, const EulerCoeffs& c);
};

/// Backend used by the library: the widest lane the CPU supports, or the
/// one named in MFATT_KERNEL ("scalar", "avx2"). Resolved once.
const Backend& active();

/// Lookup by name; nullptr if not compiled in or not runnable on this CPU.
const Backend* find(const char* name);

const Backend& scalar_backend();

} // namespace mfatt::kernels
