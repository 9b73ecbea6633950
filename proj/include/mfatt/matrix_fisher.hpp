/**
 * @file matrix_fisher.hpp
 * @brief The matrix Fisher distribution M(F) on SO(3): density, normalizing
 *        constant and its derivatives, first moment, mode, moment-matched
 *        fitting and exact rejection sampling.
 *
 * Haar measure is normalized so that c(0) = 1 (the uniform density is 1).
 * c(S) depends on F only through the proper-SVD diagonal S; it is symmetric
 * under permutations and under sign flips of any two components.
 *
 * Two evaluation paths are provided:
 *  - log_c / dlog_c / log_c_full: 1-D integral representation whose
 *    integrand is a product of scaled Bessel functions I0; adaptive
 *    Gauss-Legendre panels in the log domain. This is the production path.
 *  - log_c_quadrature: direct 3-D quadrature over Euler angles with the
 *    Haar weight. Assumption-free; used as the cross-validation reference.
 */
#pragma once

#include <cstdint>
#include <optional>

#include "mfatt/so3.hpp"

namespace mfatt::mf {

/// Guarded concentration domain of the normalizing-constant evaluators.
inline constexpr double kConcentrationGuard = 500.0;

/// Components of (1/c) dc/ds_i; the singular values of the first moment.
struct MomentDiagonal {
    double d1 = 0.0, d2 = 0.0, d3 = 0.0;
    Vec3 vec() const { return Vec3(d1, d2, d3); }
};

struct LogC {
    double value = 0.0;
    MomentDiagonal moments;
};

/// log c(diag(s)). Throws OverflowGuard when any |s_i| > 500.
double log_c(const Vec3& s);

/// Derivatives of log c, computed by differentiating under the integral.
MomentDiagonal dlog_c(const Vec3& s);

/// Both at once (single quadrature pass; memoized at 1e-12 quantization).
LogC log_c_full(const Vec3& s);

/// Reference evaluation by 3-D Euler-angle quadrature, refined until two
/// consecutive panel doublings agree to rel_tol. Slow; test/oracle use.
LogC log_c_quadrature(const Vec3& s, double rel_tol = 1e-10);

class MatrixFisher {
public:
    /// F = 0: the uniform distribution.
    MatrixFisher();

    explicit MatrixFisher(const Mat3& f);

    /// Build from known proper-SVD factors (skips the SVD).
    static MatrixFisher from_proper_svd(const Rotation& u, const Vec3& s, const Rotation& v);

    const Mat3& parameter() const { return f_; }
    const ProperSVD& svd() const { return svd_; }
    double log_normalizer() const { return log_c_; }
    const MomentDiagonal& moment_diagonal() const { return dlog_; }

    /// tr(F^T R) - log c(F).
    double log_density(const Rotation& r) const;

    /// E(R) = U diag(dlog c) V^T. Not a rotation; singular values < 1.
    Mat3 first_moment() const;

    /// Density-maximizing attitude U V^T. Gauge representative when degenerate.
    Rotation mode() const;

    /// True when s2 + s3 <= 1e-9 and the mode is not unique.
    bool mode_degenerate() const;

private:
    Mat3 f_;
    ProperSVD svd_;
    double log_c_ = 0.0;
    MomentDiagonal dlog_;
};

struct FitOptions {
    /// Box limit on Newton iterates, kept inside the log_c guard domain.
    double s_max = 499.0;
    /// Accept a box-pinned solution instead of throwing NoConvergence;
    /// used by the estimator's belief-concentration cap.
    bool saturate_at_box = false;
    /// Warm start for S (must satisfy the box).
    std::optional<Vec3> hint;
    /// Optional cross-call Jacobian estimate (in/out). When set, the solver
    /// seeds from it and refreshes by finite differences only while
    /// progress is slow; convergence is still judged on the true residual.
    Mat3* jacobian_cache = nullptr;
    /// Newton residual target on the moment diagonal.
    double residual_tol = 1e-11;
};

/**
 * @brief Invert the moment map: find M(F) with first_moment == m.
 *
 * Damped Newton on g(S) = dlog_c(S) - D with D from the proper SVD of m;
 * initial guess S = 3 D, Jacobian by central finite differences (step 1e-5),
 * step halving until the residual decreases. Singular values of m are
 * clamped to <= 1 - 1e-6 first (counted in diagnostics).
 */
MatrixFisher fit_from_moment(const Mat3& m, const FitOptions& opt = {});

/**
 * @brief Exact rejection sampler: Haar proposals accepted with probability
 *        etr(F^T R - S), using tr(F^T R) <= s1 + s2 + s3.
 *
 * Throws EfficiencyGuard when s1 + s2 + s3 > 40.
 */
Rotation sample(const MatrixFisher& mf, RngStream& rng);

struct Diagnostics {
    std::uint64_t moment_clamps = 0;
    std::uint64_t newton_failures = 0;
    std::uint64_t belief_caps = 0;
};
Diagnostics diagnostics();
void reset_diagnostics();

} // namespace mfatt::mf
