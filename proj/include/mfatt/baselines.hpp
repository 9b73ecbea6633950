/**
 * @file baselines.hpp
 * @brief Comparison estimators: a quaternion-free multiplicative EKF on the
 *        rotation matrix, and the measurement preprocessing that turns the
 *        proposed estimator into the normalized-measurement baseline.
 */
#pragma once

#include <span>
#include <vector>

#include "mfatt/matrix_fisher.hpp"
#include "mfatt/measurements.hpp"

namespace mfatt::baselines {

/// Reference attitude plus covariance of the right-multiplicative error
/// state delta (R = R_hat exp(delta^)), in rad^2.
struct MekfState {
    Rotation attitude;
    Mat3 p = Mat3::Identity();
};

/// Initialization from a matrix Fisher prior: attitude = mode,
/// P = diag[1/(s2+s3), 1/(s1+s3), 1/(s1+s2)].
MekfState mekf_init_from_prior(const mf::MatrixFisher& prior);

/// attitude <- attitude exp(h w^); P <- Phi P Phi^T + h G with
/// Phi = exp(-h w^) and G = H H^T.
MekfState mekf_propagate(const MekfState& state, const meas::GyroSample& gyro);

/**
 * @brief Sequential per-vector linearized updates with predicted
 *        measurement zhat = attitude^T r, sensitivity hat(zhat), Kalman
 *        gain from the innovation covariance, exp-map retraction, and
 *        Joseph-form covariance update.
 */
MekfState mekf_update(const MekfState& state,
                      std::span<const meas::VectorMeasurement> measurements);

/**
 * @brief NormBE preprocessing: normalize z and r to unit length and replace
 *        the Gaussian noise with the vMF approximation whose mean magnitude
 *        is the reference magnitude. Rejects measurements that are already
 *        vMF.
 */
std::vector<meas::VectorMeasurement>
norm_be_preprocess(std::span<const meas::VectorMeasurement> measurements);

} // namespace mfatt::baselines
