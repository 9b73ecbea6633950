#include "mfatt/measurements.hpp"

#include <cmath>

namespace mfatt::meas {
namespace {

Mat3 sqrt_spd(const Mat3& q) {
    Eigen::SelfAdjointEigenSolver<Mat3> eig(q);
    if (eig.eigenvalues().minCoeff() <= 0.0) {
        throw Error("noise covariance is not positive definite");
    }
    return eig.operatorSqrt();
}

} // namespace

void validate(const NoiseModel& noise) {
    std::visit(
        [](const auto& n) {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, IsotropicGaussian>) {
                if (!(n.sigma2 >= 0.0)) throw Error("sigma2 must be >= 0");
            } else if constexpr (std::is_same_v<T, Gaussian>) {
                if ((n.q - n.q.transpose()).norm() > 1e-12) {
                    throw Error("noise covariance must be symmetric");
                }
                Eigen::SelfAdjointEigenSolver<Mat3> eig(n.q);
                if (eig.eigenvalues().minCoeff() <= 0.0) {
                    throw Error("noise covariance must be positive definite");
                }
            } else {
                if (!(n.kappa > 0.0)) throw Error("vMF concentration must be > 0");
            }
        },
        noise);
}

Vec3 sample_vmf(const Vec3& mean_dir, double kappa, RngStream& rng) {
    // Polar cosine w about the mean via inverse CDF:
    //   w = 1 + log(u + (1-u) e^{-2k}) / k, written with log1p/expm1 so it
    // stays accurate for both tiny and large kappa.
    const double u = rng.uniform();
    const double w = 1.0 + std::log1p(-(1.0 - u) * (-std::expm1(-2.0 * kappa))) / kappa;
    const double r = std::sqrt(std::max(0.0, 1.0 - w * w));
    const double phi = 2.0 * M_PI * rng.uniform();

    // orthonormal frame around mean_dir
    const Vec3 e3 = mean_dir.normalized();
    const Vec3 pick = std::abs(e3.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
    const Vec3 e1 = e3.cross(pick).normalized();
    const Vec3 e2 = e3.cross(e1);
    return w * e3 + r * (std::cos(phi) * e1 + std::sin(phi) * e2);
}

VectorMeasurement simulate_vector(const Rotation& truth, const Vec3& reference,
                                  const NoiseModel& noise, RngStream& rng) {
    const Vec3 body = truth.matrix().transpose() * reference;
    Vec3 measured;
    if (const auto* iso = std::get_if<IsotropicGaussian>(&noise)) {
        const double sig = std::sqrt(iso->sigma2);
        measured = body + sig * Vec3(rng.gauss(), rng.gauss(), rng.gauss());
    } else if (const auto* g = std::get_if<Gaussian>(&noise)) {
        measured = body + sqrt_spd(g->q) * Vec3(rng.gauss(), rng.gauss(), rng.gauss());
    } else {
        const auto& vmf = std::get<VonMisesFisher>(noise);
        if (std::abs(reference.norm() - 1.0) > 1e-9) {
            throw Error("vMF measurement requires a unit reference vector");
        }
        measured = sample_vmf(body, vmf.kappa, rng);
    }
    return VectorMeasurement{reference, measured, noise};
}

std::pair<Vec3, double> vmf_from_gaussian(const Vec3& mu, const NoiseModel& noise) {
    const double n = mu.norm();
    if (n < 1e-12) throw ZeroMean("vmf_from_gaussian: zero mean direction");
    double kappa = 0.0;
    if (const auto* iso = std::get_if<IsotropicGaussian>(&noise)) {
        kappa = n * n / iso->sigma2;
    } else if (const auto* g = std::get_if<Gaussian>(&noise)) {
        kappa = 3.0 * n * n / g->q.trace();
    } else {
        throw IncompatibleNoiseModel("vmf_from_gaussian: input is already von Mises-Fisher");
    }
    return {mu / n, kappa};
}

Vec3 simulate_gyro(const Vec3& truth_omega, const Mat3& strength, double dt, RngStream& rng) {
    if (!(dt > 0.0)) throw Error("simulate_gyro: dt must be > 0");
    const Vec3 w(rng.gauss(), rng.gauss(), rng.gauss());
    return truth_omega + strength * w / std::sqrt(dt);
}

} // namespace mfatt::meas
