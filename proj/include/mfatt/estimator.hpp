/**
 * @file estimator.hpp
 * @brief Bayesian attitude estimator with the matrix Fisher distribution:
 *        first-moment propagation, conjugate correction for isotropic
 *        Gaussian and vMF measurements, the unscented likelihood
 *        approximation for non-isotropic Gaussian measurements, the
 *        Wahba/SVD point solver, and the per-step loop.
 */
#pragma once

#include <span>

#include "mfatt/matrix_fisher.hpp"
#include "mfatt/measurements.hpp"

namespace mfatt::est {

/// Unscented-transformation parameters. kappa > 0 keeps every weight
/// positive, so the approximated moment is a convex combination of
/// rotations and its singular values stay below 1.
struct UtConfig {
    double kappa = 1.0;
    int d = 3;
};

struct EstimatorState {
    mf::MatrixFisher belief;
    std::int64_t time_index = 0;
};

/// Mutable per-worker workspace: warm starts and Jacobian caches for the
/// moment fits. Optional everywhere; results do not depend on it beyond
/// solver round-off.
struct FitScratch {
    Mat3 propagate_jac = Mat3::Zero();
    Mat3 ut_jac = Mat3::Zero();
    Vec3 ut_hint = Vec3::Zero();
    bool has_ut_hint = false;
};

struct StepConfig {
    UtConfig ut;
    /// Cap on the belief parameter's singular values, applied after each
    /// correction. Long runs accumulate concentration toward the moment
    /// map's saturation region; the cap keeps every evaluation inside the
    /// guarded |s_i| <= 500 domain. 0 disables.
    double belief_cap = 480.0;
};

/**
 * @brief Uncertainty propagation along the gyro increment:
 *        E(R+) = E(R) {I + h/2 [G - tr(G) I]} exp(h Omega^), then refit F.
 */
EstimatorState propagate(const EstimatorState& state, const meas::GyroSample& gyro,
                         FitScratch* scratch = nullptr);

/**
 * @brief Conjugate Bayes update: F+ = F + sum sigma_i^-2 r_i z_i^T
 *        + sum kappa_i r_i z_i^T. Only isotropic-Gaussian and vMF noise
 *        models are admissible; order of measurements is irrelevant.
 *
 * belief_cap > 0 clamps the posterior parameter's singular values.
 */
EstimatorState correct_conjugate(const EstimatorState& state,
                                 std::span<const meas::VectorMeasurement> measurements,
                                 double belief_cap = 0.0);

/**
 * @brief Approximate first moment of attitude implied by Gaussian vector
 *        measurements: 2 d N + 1 sigma attitudes from per-measurement
 *        sigma points (columns of the symmetric square root of
 *        (N d + kappa) Q_i), each solved by the SVD method, combined with
 *        weights kappa/(kappa+Nd) and 1/(2(kappa+Nd)).
 */
Mat3 unscented_likelihood(std::span<const meas::VectorMeasurement> measurements,
                          const UtConfig& ut, bool allow_degenerate = false);

/**
 * @brief Full correction: non-isotropic Gaussian measurements go through
 *        the unscented likelihood (whose moment is refit and added to F);
 *        the remaining measurements apply the conjugate update.
 */
EstimatorState correct_full(const EstimatorState& state,
                            std::span<const meas::VectorMeasurement> measurements,
                            const UtConfig& ut, double belief_cap = 0.0,
                            FitScratch* scratch = nullptr);

/// Weighted Wahba problem solved by the SVD method: B = sum w_i r_i z_i^T,
/// R = U_B V_B^T. Invariant under positive scaling of the weights.
Rotation wahba_svd(std::span<const meas::VectorMeasurement> measurements,
                   std::span<const double> weights);

struct StepResult {
    EstimatorState state;
    Rotation estimate;  // mode of the current belief
};

/// One filter step: propagate, correct when measurements are present,
/// extract the mode.
StepResult step(const EstimatorState& state, const meas::GyroSample& gyro,
                std::span<const meas::VectorMeasurement> measurements,
                const StepConfig& cfg = {}, FitScratch* scratch = nullptr);

} // namespace mfatt::est
