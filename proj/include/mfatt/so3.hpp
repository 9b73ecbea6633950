/**
 * @file so3.hpp
 * @brief Rotation-group primitives: hat/vee, exp/log, proper SVD, geodesic
 *        metric and Haar-uniform sampling.
 */
#pragma once

#include <Eigen/Dense>

#include "mfatt/errors.hpp"
#include "mfatt/rng.hpp"

namespace mfatt {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

class Rotation;

namespace so3 {

/// Tolerance on ||R R^T - I||_F and |det R - 1| for a valid rotation.
inline constexpr double kRotationTol = 1e-9;

/// Series branch threshold for exp/log small-angle handling.
inline constexpr double kSmallAngle = 1e-8;

Mat3 hat(const Vec3& v);

/// Inverse of hat(). Throws NonSkewInput if the symmetry residual exceeds 1e-6.
Vec3 vee(const Mat3& m);

} // namespace so3

/**
 * @brief An element of SO(3), validated on construction.
 *
 * Hot paths that produce orthonormal matrices by construction (Rodrigues,
 * SVD factors, quaternion conversion) use the unchecked factory.
 */
class Rotation {
public:
    Rotation() : m_(Mat3::Identity()) {}

    /// Validates orthonormality and det = +1 within kRotationTol.
    explicit Rotation(const Mat3& m) : m_(m) {
        if (!is_valid(m)) throw Error("Rotation: matrix is not in SO(3) within tolerance");
    }

    static Rotation identity() { return Rotation(); }

    /// Unchecked wrap for matrices orthonormal by construction.
    static Rotation from_matrix_unchecked(const Mat3& m) {
        Rotation r;
        r.m_ = m;
        return r;
    }

    static bool is_valid(const Mat3& m) {
        return (m * m.transpose() - Mat3::Identity()).norm() <= so3::kRotationTol &&
               std::abs(m.determinant() - 1.0) <= so3::kRotationTol && m.allFinite();
    }

    const Mat3& matrix() const { return m_; }
    Rotation transpose() const { return from_matrix_unchecked(m_.transpose()); }

    Rotation operator*(const Rotation& rhs) const {
        return from_matrix_unchecked(m_ * rhs.m_);
    }
    Vec3 operator*(const Vec3& v) const { return m_ * v; }

private:
    Mat3 m_;
};

/**
 * @brief Proper singular value decomposition f = u * diag(s) * v^T with
 *        u, v in SO(3) and s1 >= s2 >= |s3|.
 *
 * When s2 == s3 the factors are not unique (gauge freedom); compare
 * u*diag(s)*v^T or u*v^T downstream, never u and v individually.
 */
struct ProperSVD {
    Rotation u;
    Vec3 s;
    Rotation v;

    Mat3 reconstruct() const {
        return u.matrix() * s.asDiagonal() * v.matrix().transpose();
    }
};

namespace so3 {

/// Rodrigues formula; 2nd-order series below kSmallAngle.
Rotation exp(const Vec3& v);

/// Logarithm with ||result|| in [0, pi]; the angle-pi branch extracts the
/// axis from the symmetric part.
Vec3 log(const Rotation& r);

/// Proper SVD of an arbitrary (possibly rank-deficient) 3x3 matrix.
ProperSVD proper_svd(const Mat3& f);

/// Rotation angle of a^T b in radians, in [0, pi].
double geodesic_angle(const Rotation& a, const Rotation& b);

/// Haar-uniform sample via a uniformly random unit quaternion.
Rotation sample_uniform(RngStream& rng);

/// Project a near-rotation back onto SO(3) (polar factor via proper SVD).
Rotation orthonormalize(const Mat3& m);

} // namespace so3
} // namespace mfatt
