#include "mfatt/baselines.hpp"

#include <cmath>

namespace mfatt::baselines {

MekfState mekf_init_from_prior(const mf::MatrixFisher& prior) {
    const Vec3& s = prior.svd().s;
    MekfState out;
    out.attitude = prior.mode();
    out.p = Vec3(1.0 / (s.y() + s.z()), 1.0 / (s.x() + s.z()), 1.0 / (s.x() + s.y()))
                .asDiagonal();
    return out;
}

MekfState mekf_propagate(const MekfState& state, const meas::GyroSample& gyro) {
    const Mat3 g = gyro.strength * gyro.strength.transpose();
    const Mat3 phi = so3::exp(-gyro.dt * gyro.omega).matrix();
    MekfState out;
    out.attitude = state.attitude * so3::exp(gyro.dt * gyro.omega);
    out.p = phi * state.p * phi.transpose() + gyro.dt * g;
    out.p = 0.5 * (out.p + out.p.transpose()).eval();
    return out;
}

MekfState mekf_update(const MekfState& state,
                      std::span<const meas::VectorMeasurement> measurements) {
    // Sequential vector-block updates of the error state against one
    // linearization point; the reference attitude is retracted (and the
    // error reset) once per update cycle.
    MekfState st = state;
    Vec3 delta = Vec3::Zero();
    for (const auto& m : measurements) {
        Mat3 q;
        if (const auto* iso = std::get_if<meas::IsotropicGaussian>(&m.noise)) {
            q = std::max(iso->sigma2, 1e-12) * Mat3::Identity();
        } else if (const auto* g = std::get_if<meas::Gaussian>(&m.noise)) {
            q = g->q;
        } else {
            throw IncompatibleNoiseModel("mekf_update: needs Gaussian noise");
        }

        const Vec3 zhat = state.attitude.matrix().transpose() * m.reference;
        const Mat3 h = so3::hat(zhat);  // z ~ zhat + hat(zhat) delta + v
        const Mat3 innov_cov = h * st.p * h.transpose() + q;
        const Eigen::LDLT<Mat3> ldlt(innov_cov);
        if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
            ldlt.vectorD().minCoeff() <= 1e-300) {
            throw SingularInnovation("mekf_update: innovation covariance singular");
        }
        const Mat3 gain = st.p * h.transpose() * ldlt.solve(Mat3::Identity());
        delta += gain * (m.measured - zhat - h * delta);

        const Mat3 ikh = Mat3::Identity() - gain * h;
        st.p = ikh * st.p * ikh.transpose() + gain * q * gain.transpose();
        st.p = 0.5 * (st.p + st.p.transpose()).eval();
    }
    st.attitude = state.attitude * so3::exp(delta);
    return st;
}

std::vector<meas::VectorMeasurement>
norm_be_preprocess(std::span<const meas::VectorMeasurement> measurements) {
    std::vector<meas::VectorMeasurement> out;
    out.reserve(measurements.size());
    for (const auto& m : measurements) {
        if (std::holds_alternative<meas::VonMisesFisher>(m.noise)) {
            throw IncompatibleNoiseModel("norm_be_preprocess: measurement is already vMF");
        }
        const auto [dir, kappa] = meas::vmf_from_gaussian(m.reference, m.noise);
        const double zn = m.measured.norm();
        if (zn < 1e-12) throw ZeroMean("norm_be_preprocess: zero measured vector");
        out.push_back(
            meas::VectorMeasurement{dir, m.measured / zn, meas::VonMisesFisher{kappa}});
    }
    return out;
}

} // namespace mfatt::baselines
