#include "mfatt/estimator.hpp"

#include <cmath>
#include <vector>

namespace mfatt::est {
namespace {

// Weight of one conjugate measurement in the rank-one update. sigma2 = 0 is
// a simulation-only limit; it saturates instead of dividing by zero.
double conjugate_weight(const meas::NoiseModel& noise) {
    if (const auto* iso = std::get_if<meas::IsotropicGaussian>(&noise)) {
        return 1.0 / std::max(iso->sigma2, 1e-12);
    }
    if (const auto* vmf = std::get_if<meas::VonMisesFisher>(&noise)) {
        return vmf->kappa;
    }
    throw IncompatibleNoiseModel(
        "correct_conjugate: non-isotropic Gaussian requires the unscented path");
}

Mat3 sym_sqrt(const Mat3& q) {
    Eigen::SelfAdjointEigenSolver<Mat3> eig(q);
    if (eig.eigenvalues().minCoeff() < 0.0) {
        throw Error("unscented_likelihood: measurement covariance not PSD");
    }
    return eig.operatorSqrt();
}

Rotation wahba_from_b(const Mat3& b, bool allow_degenerate) {
    const ProperSVD p = so3::proper_svd(b);
    if (!allow_degenerate &&
        p.s.y() + p.s.z() <= 1e-9 * std::max(1.0, p.s.x())) {
        throw CollinearReferences("Wahba problem is degenerate (attitude not unique)");
    }
    return Rotation::from_matrix_unchecked(p.u.matrix() * p.v.matrix().transpose());
}

// Build the posterior belief from a plain parameter matrix, clamping its
// singular values to the cap when one is configured.
mf::MatrixFisher make_belief(const Mat3& f, double cap) {
    if (cap > 0.0) {
        ProperSVD p = so3::proper_svd(f);
        if (p.s.x() > cap) {
            for (int i = 0; i < 3; ++i) p.s[i] = std::clamp(p.s[i], -cap, cap);
        }
        return mf::MatrixFisher::from_proper_svd(p.u, p.s, p.v);
    }
    return mf::MatrixFisher(f);
}

} // namespace

EstimatorState propagate(const EstimatorState& state, const meas::GyroSample& gyro,
                         FitScratch* scratch) {
    const Mat3 g = gyro.strength * gyro.strength.transpose();
    const double h = gyro.dt;
    if (!(h > 0.0)) throw Error("propagate: dt must be > 0");
    if (h * g.trace() >= 1.0) {
        throw Error("propagate: h tr(G) >= 1, step too large for the moment bracket");
    }

    const Mat3 bracket = Mat3::Identity() + 0.5 * h * (g - g.trace() * Mat3::Identity());
    const Mat3 moment =
        state.belief.first_moment() * bracket * so3::exp(h * gyro.omega).matrix();

    mf::FitOptions opt;
    opt.hint = state.belief.svd().s;
    if (scratch) opt.jacobian_cache = &scratch->propagate_jac;
    return EstimatorState{mf::fit_from_moment(moment, opt), state.time_index + 1};
}

EstimatorState correct_conjugate(const EstimatorState& state,
                                 std::span<const meas::VectorMeasurement> measurements,
                                 double belief_cap) {
    Mat3 f = state.belief.parameter();
    for (const auto& m : measurements) {
        f += conjugate_weight(m.noise) * m.reference * m.measured.transpose();
    }
    return EstimatorState{make_belief(f, belief_cap), state.time_index};
}

Mat3 unscented_likelihood(std::span<const meas::VectorMeasurement> measurements,
                          const UtConfig& ut, bool allow_degenerate) {
    const int n = static_cast<int>(measurements.size());
    if (n == 0) throw Error("unscented_likelihood: empty measurement list");
    if (!(ut.kappa > 0.0)) throw Error("unscented_likelihood: kappa must be > 0");

    const double nd = static_cast<double>(n) * ut.d;
    const double w0 = ut.kappa / (ut.kappa + nd);
    const double wi = 1.0 / (2.0 * (ut.kappa + nd));
    const double spread = nd + ut.kappa;

    Mat3 b0 = Mat3::Zero();
    for (const auto& m : measurements) b0 += m.reference * m.measured.transpose();

    Mat3 expected = w0 * wahba_from_b(b0, allow_degenerate).matrix();
    for (const auto& m : measurements) {
        Mat3 q;
        if (const auto* g = std::get_if<meas::Gaussian>(&m.noise)) {
            q = g->q;
        } else if (const auto* iso = std::get_if<meas::IsotropicGaussian>(&m.noise)) {
            q = iso->sigma2 * Mat3::Identity();
        } else {
            throw IncompatibleNoiseModel("unscented_likelihood: needs Gaussian noise");
        }
        const Mat3 root = sym_sqrt(spread * q);
        for (int j = 0; j < ut.d; ++j) {
            for (double sign : {1.0, -1.0}) {
                const Mat3 bij = b0 + m.reference * (sign * root.col(j)).transpose();
                expected += wi * wahba_from_b(bij, allow_degenerate).matrix();
            }
        }
    }
    return expected;
}

EstimatorState correct_full(const EstimatorState& state,
                            std::span<const meas::VectorMeasurement> measurements,
                            const UtConfig& ut, double belief_cap, FitScratch* scratch) {
    std::vector<meas::VectorMeasurement> non_iso;
    std::vector<meas::VectorMeasurement> conjugate;
    for (const auto& m : measurements) {
        if (std::holds_alternative<meas::Gaussian>(m.noise)) {
            non_iso.push_back(m);
        } else {
            conjugate.push_back(m);
        }
    }

    Mat3 f = state.belief.parameter();
    if (!non_iso.empty()) {
        const Mat3 expected = unscented_likelihood(non_iso, ut);
        mf::FitOptions opt;
        if (scratch) {
            if (scratch->has_ut_hint) opt.hint = scratch->ut_hint;
            opt.jacobian_cache = &scratch->ut_jac;
        }
        const mf::MatrixFisher likelihood = mf::fit_from_moment(expected, opt);
        if (scratch) {
            scratch->ut_hint = likelihood.svd().s;
            scratch->has_ut_hint = true;
        }
        f += likelihood.parameter();
    }
    for (const auto& m : conjugate) {
        f += conjugate_weight(m.noise) * m.reference * m.measured.transpose();
    }
    return EstimatorState{make_belief(f, belief_cap), state.time_index};
}

Rotation wahba_svd(std::span<const meas::VectorMeasurement> measurements,
                   std::span<const double> weights) {
    if (measurements.size() != weights.size() || measurements.empty()) {
        throw Error("wahba_svd: need matching, nonempty measurements and weights");
    }
    Mat3 b = Mat3::Zero();
    for (std::size_t i = 0; i < measurements.size(); ++i) {
        b += weights[i] * measurements[i].reference * measurements[i].measured.transpose();
    }
    return wahba_from_b(b, false);
}

StepResult step(const EstimatorState& state, const meas::GyroSample& gyro,
                std::span<const meas::VectorMeasurement> measurements,
                const StepConfig& cfg, FitScratch* scratch) {
    EstimatorState next = propagate(state, gyro, scratch);
    if (!measurements.empty()) {
        next = correct_full(next, measurements, cfg.ut, cfg.belief_cap, scratch);
    }
    return StepResult{next, next.belief.mode()};
}

} // namespace mfatt::est
