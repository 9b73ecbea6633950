#include "mfatt/so3.hpp"

#include <cmath>

namespace mfatt::so3 {

Mat3 hat(const Vec3& v) {
    Mat3 m;
    // hat(x) y = x cross y
    m << 0.0, -v.z(), v.y(),
         v.z(), 0.0, -v.x(),
        -v.y(), v.x(), 0.0;
    return m;
}

Vec3 vee(const Mat3& m) {
    const double residual = (m + m.transpose()).norm();
    if (residual > 1e-6) {
        throw NonSkewInput("vee: symmetry residual " + std::to_string(residual));
    }
    return Vec3(0.5 * (m(2, 1) - m(1, 2)),
                0.5 * (m(0, 2) - m(2, 0)),
                0.5 * (m(1, 0) - m(0, 1)));
}

Rotation exp(const Vec3& v) {
    const double theta = v.norm();
    const Mat3 k = hat(v);
    if (theta < kSmallAngle) {
        return Rotation::from_matrix_unchecked(Mat3::Identity() + k + 0.5 * k * k);
    }
    const double a = std::sin(theta) / theta;
    const double b = (1.0 - std::cos(theta)) / (theta * theta);
    return Rotation::from_matrix_unchecked(Mat3::Identity() + a * k + b * k * k);
}

Vec3 log(const Rotation& r) {
    const Mat3& m = r.matrix();
    const double c = std::clamp(0.5 * (m.trace() - 1.0), -1.0, 1.0);
    const double theta = std::acos(c);
    const Vec3 w(0.5 * (m(2, 1) - m(1, 2)),
                 0.5 * (m(0, 2) - m(2, 0)),
                 0.5 * (m(1, 0) - m(0, 1)));  // = sin(theta) * axis

    if (theta < kSmallAngle) {
        return w;  // axis*sin(theta) ~ axis*theta to O(theta^3)
    }
    if (theta < M_PI - 1e-4) {
        return (theta / std::sin(theta)) * w;
    }
    // Near pi, sin(theta) is tiny; take the axis from the symmetric part
    // R + I = 2(cos(theta) I + (1 - cos) n n^T + sin * hat(n)) -> dominant n n^T.
    const Mat3 b = m + Mat3::Identity();
    int col = 0;
    b.colwise().norm().maxCoeff(&col);
    Vec3 axis = b.col(col).normalized();
    // w = sin(theta) * axis fixes the sign while sin(theta) is resolvable.
    const double s = axis.dot(w);
    if (std::abs(s) > 1e-12) axis *= (s < 0.0 ? -1.0 : 1.0);
    return theta * axis;
}

ProperSVD proper_svd(const Mat3& f) {
    Eigen::JacobiSVD<Mat3> svd(f, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Mat3 u = svd.matrixU();
    Mat3 v = svd.matrixV();
    Vec3 s = svd.singularValues();
    const double du = u.determinant();
    const double dv = v.determinant();
    u.col(2) *= du;
    v.col(2) *= dv;
    s.z() *= du * dv;
    return ProperSVD{Rotation::from_matrix_unchecked(u), s,
                     Rotation::from_matrix_unchecked(v)};
}

double geodesic_angle(const Rotation& a, const Rotation& b) {
    const double c = 0.5 * ((a.matrix().transpose() * b.matrix()).trace() - 1.0);
    return std::acos(std::clamp(c, -1.0, 1.0));
}

Rotation sample_uniform(RngStream& rng) {
    // Uniform unit quaternion from 4 normals.
    double q[4];
    double n2 = 0.0;
    do {
        n2 = 0.0;
        for (double& qi : q) {
            qi = rng.gauss();
            n2 += qi * qi;
        }
    } while (n2 < 1e-12);
    const double inv = 1.0 / std::sqrt(n2);
    const double w = q[0] * inv, x = q[1] * inv, y = q[2] * inv, z = q[3] * inv;
    Mat3 m;
    m << 1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y),
         2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x),
         2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y);
    return Rotation::from_matrix_unchecked(m);
}

Rotation orthonormalize(const Mat3& m) {
    const ProperSVD p = proper_svd(m);
    return Rotation::from_matrix_unchecked(p.u.matrix() * p.v.matrix().transpose());
}

} // namespace mfatt::so3
