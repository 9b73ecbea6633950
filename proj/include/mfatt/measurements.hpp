/**
 * @file measurements.hpp
 * @brief Sensor models: additive-Gaussian and von Mises-Fisher vector
 *        measurements, the vMF approximation of normalized Gaussian
 *        vectors, and the gyro increment noise model.
 */
#pragma once

#include <utility>
#include <variant>

#include "mfatt/so3.hpp"

namespace mfatt::meas {

/// v ~ N(0, sigma2 * I3).
struct IsotropicGaussian {
    double sigma2;
};

/// v ~ N(0, q), q symmetric positive definite.
struct Gaussian {
    Mat3 q;
};

/// Unit vector on S^2 with density proportional to exp(kappa * mu^T x).
struct VonMisesFisher {
    double kappa;
};

using NoiseModel = std::variant<IsotropicGaussian, Gaussian, VonMisesFisher>;

/**
 * @brief One vector observation: reference in the inertial frame, measured
 *        value in the body frame, and its noise model.
 *
 * The vMF variant requires unit reference and measured vectors.
 */
struct VectorMeasurement {
    Vec3 reference;
    Vec3 measured;
    NoiseModel noise;
};

/// Rate-gyro reading over one step: measured rate, noise strength H
/// (increment noise covariance is dt * H H^T), and the step length.
struct GyroSample {
    Vec3 omega;
    Mat3 strength;
    double dt;
};

/// Throws on invalid noise parameters (non-SPD q, kappa <= 0, ...).
void validate(const NoiseModel& noise);

/**
 * @brief Draw one measurement of `reference` at attitude `truth`.
 *
 * Gaussian variants: measured = truth^T reference + v. The vMF variant
 * samples the unit sphere around truth^T reference (unit reference
 * required) by inverse-CDF in the polar cosine plus a uniform azimuth.
 */
VectorMeasurement simulate_vector(const Rotation& truth, const Vec3& reference,
                                  const NoiseModel& noise, RngStream& rng);

/// vMF sample around an arbitrary unit mean direction (test oracle hook).
Vec3 sample_vmf(const Vec3& mean_dir, double kappa, RngStream& rng);

/**
 * @brief vMF approximation of a normalized Gaussian vector x ~ N(mu, Sigma):
 *        kappa = |mu|^2/sigma^2 for isotropic noise, 3|mu|^2/tr(Sigma)
 *        otherwise. Returns (mu/|mu|, kappa).
 *
 * Throws ZeroMean when |mu| < 1e-12 and IncompatibleNoiseModel for a vMF
 * input.
 */
std::pair<Vec3, double> vmf_from_gaussian(const Vec3& mu, const NoiseModel& noise);

/**
 * @brief Measured rate: truth_omega + H w / sqrt(dt), w ~ N(0, I), so the
 *        implied per-step increment noise dt * (omega_meas - omega) has
 *        covariance dt * H H^T.
 */
Vec3 simulate_gyro(const Vec3& truth_omega, const Mat3& strength, double dt, RngStream& rng);

} // namespace mfatt::meas
