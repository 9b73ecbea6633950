#include "mfatt/kernels/kernels.hpp"

#include <cmath>

namespace mfatt::kernels {
namespace {

void exp_batch(const double* x, double* y, int n) {
    for (int i = 0; i < n; ++i) y[i] = std::exp(x[i]);
}

// e^{-x} I0(x): power series below the crossover, asymptotic series above.
// Both converge to full double precision at x = 20.
double i0e(double x) {
    if (x < 20.0) {
        const double q = 0.25 * x * x;
        double term = 1.0;
        double sum = 1.0;
        for (int k = 1; k < 90; ++k) {
            term *= q / (static_cast<double>(k) * static_cast<double>(k));
            sum += term;
            if (term < sum * 1e-18) break;
        }
        return sum * std::exp(-x);
    }
    const double z = 1.0 / (8.0 * x);
    double term = 1.0;
    double sum = 1.0;
    for (int k = 1; k <= 40; ++k) {
        const double odd = 2.0 * static_cast<double>(k) - 1.0;
        const double next = term * odd * odd * z / static_cast<double>(k);
        if (next >= term) break;  // divergent tail
        term = next;
        sum += term;
        if (term < sum * 1e-18) break;
    }
    return sum / std::sqrt(2.0 * M_PI * x);
}

PanelSums bessel_panel(const double* u, const double* w, int n,
                       double a, double b, double lin0, double lin1) {
    PanelSums out;
    for (int i = 0; i < n; ++i) {
        const double ui = u[i];
        const double f = i0e(a * (1.0 - ui)) * i0e(b * (1.0 + ui)) *
                         std::exp(lin0 + lin1 * ui);
        out.f += w[i] * f;
        out.uf += w[i] * ui * f;
    }
    return out;
}

EulerSums euler_sweep(const double* cg, const double* sg, const double* w,
                      int n, const EulerCoeffs& c) {
    EulerSums out;
    for (int i = 0; i < n; ++i) {
        const double e = w[i] * std::exp(c.ta * cg[i] + c.tb * sg[i] + c.tc);
        out.f += e;
        out.f11 += e * (c.ca * cg[i] - c.sacb * sg[i]);
        out.f22 += e * (c.cacb * cg[i] - c.sa * sg[i]);
    }
    return out;
}

} // namespace

const Backend& scalar_backend() {
    static const Backend b{"scalar", &exp_batch, &i0e, &bessel_panel, &euler_sweep};
    return b;
}

} // namespace mfatt::kernels
