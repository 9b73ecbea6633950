#include "mfatt/sim.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <thread>

namespace mfatt::sim {
namespace {

constexpr double kDeg = 180.0 / M_PI;

Vec3 pendulum_accel(const Rotation& r, const Vec3& omega, const PendulumParams& p) {
    const Vec3 torque =
        p.mass_gravity_term.cross(r.matrix().transpose() * p.gravity_dir);
    return p.inertia.ldlt().solve((p.inertia * omega).cross(omega) + torque);
}

// Information-style weights for the measurement-only SVD estimate.
double wahba_weight(const meas::NoiseModel& noise) {
    if (const auto* iso = std::get_if<meas::IsotropicGaussian>(&noise)) {
        return 1.0 / std::max(iso->sigma2, 1e-12);
    }
    if (const auto* g = std::get_if<meas::Gaussian>(&noise)) {
        return 3.0 / g->q.trace();
    }
    return std::get<meas::VonMisesFisher>(noise).kappa;
}

class StopWatch {
public:
    void start() { t0_ = std::chrono::steady_clock::now(); }
    void stop() {
        total_ += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
    }
    double total() const { return total_; }

private:
    std::chrono::steady_clock::time_point t0_;
    double total_ = 0.0;
};

int env_workers() {
    if (const char* env = std::getenv("MFATT_WORKERS")) {
        const int v = std::atoi(env);
        if (v >= 1) return std::min(v, 256);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

} // namespace

const char* estimator_name(EstimatorKind kind) {
    switch (kind) {
        case EstimatorKind::BE: return "be";
        case EstimatorKind::NormBE: return "normbe";
        case EstimatorKind::MEKF: return "mekf";
        case EstimatorKind::MeasOnly: return "meas";
    }
    return "?";
}

int ScenarioConfig::steps() const {
    return static_cast<int>(std::llround(duration_s / dt_s));
}

int ScenarioConfig::vector_every() const {
    return static_cast<int>(std::llround(gyro_rate_hz / vector_rate_hz));
}

void ScenarioConfig::validate() const {
    if (!(duration_s > 0.0) || !(dt_s > 0.0)) throw ConfigError("duration and dt must be > 0");
    if (std::abs(gyro_rate_hz * dt_s - 1.0) > 1e-9) {
        throw ConfigError("gyro_rate_hz must equal 1/dt_s");
    }
    if (vector_rate_hz > gyro_rate_hz) throw ConfigError("vector rate must not exceed gyro rate");
    const double ratio = gyro_rate_hz / vector_rate_hz;
    if (std::abs(ratio - std::llround(ratio)) > 1e-9) {
        throw ConfigError("gyro rate must be an integer multiple of the vector rate");
    }
    if (mc_runs < 1) throw ConfigError("mc_runs must be >= 1");
    if (gyro_sigma_deg_sqrt_s < 0.0) throw ConfigError("gyro sigma must be >= 0");
    for (const auto& s : sensors) meas::validate(s.noise);
    if (!(ut.kappa > 0.0)) throw ConfigError("ut kappa must be > 0");
    const bool needs_sensors =
        std::any_of(estimators.begin(), estimators.end(),
                    [](EstimatorKind k) { return k != EstimatorKind::MEKF; });
    if (needs_sensors && sensors.size() < 2) {
        throw ConfigError("at least two vector sensors are required");
    }
}

std::pair<Rotation, Vec3> pendulum_step(const Rotation& r, const Vec3& omega,
                                        const PendulumParams& params, double dt) {
    // Substep so the per-substep attitude increment stays below ~0.01 rad.
    const int nsub = std::clamp(
        static_cast<int>(std::ceil(dt * (omega.norm() + 1.0) / 0.01)), 1, 256);
    const double h = dt / nsub;
    Rotation rr = r;
    Vec3 w = omega;
    for (int i = 0; i < nsub; ++i) {
        // explicit Lie-group midpoint (RK2-MK)
        const Vec3 k1 = pendulum_accel(rr, w, params);
        const Vec3 w_mid = w + 0.5 * h * k1;
        const Rotation r_mid = rr * so3::exp(0.5 * h * w);
        const Vec3 k2 = pendulum_accel(r_mid, w_mid, params);
        rr = rr * so3::exp(h * w_mid);
        w = w + h * k2;
    }
    return {rr, w};
}

RunTraces run_single(const ScenarioConfig& config, int run_index) {
    config.validate();
    const int n = config.steps();
    const int every = config.vector_every();
    const double h = config.dt_s;
    const double sigma_rad = config.gyro_sigma_deg_sqrt_s * M_PI / 180.0;
    const Mat3 gyro_strength = sigma_rad * Mat3::Identity();

    RngStream run_stream = RngStream(config.seed).substream(0x72756e00ull + static_cast<std::uint64_t>(run_index));
    RngStream gyro_stream = run_stream.substream(1);
    std::vector<RngStream> sensor_streams;
    for (std::size_t i = 0; i < config.sensors.size(); ++i) {
        sensor_streams.push_back(run_stream.substream(100 + i));
    }

    // Truth trajectory and the per-step average rate the gyro integrates.
    std::vector<Rotation> truth(static_cast<std::size_t>(n) + 1);
    std::vector<Vec3> avg_rate(static_cast<std::size_t>(n));
    truth[0] = config.r0;
    Vec3 w = config.omega0;
    for (int k = 0; k < n; ++k) {
        auto [rn, wn] = pendulum_step(truth[static_cast<std::size_t>(k)], w, config.pendulum, h);
        truth[static_cast<std::size_t>(k) + 1] = rn;
        avg_rate[static_cast<std::size_t>(k)] =
            so3::log(truth[static_cast<std::size_t>(k)].transpose() * rn) / h;
        w = wn;
    }

    const std::size_t n_est = config.estimators.size();
    RunTraces out;
    out.names.resize(n_est);
    out.err_deg.assign(n_est, std::vector<double>(static_cast<std::size_t>(n),
                                                  std::numeric_limits<double>::quiet_NaN()));
    out.uncertainty = out.err_deg;
    out.avg_err_deg.assign(n_est, 0.0);
    out.wall_s.assign(n_est, 0.0);

    // Estimator states
    const mf::MatrixFisher prior(config.f0);
    est::EstimatorState be_state{prior, 0};
    est::EstimatorState norm_state{prior, 0};
    est::FitScratch be_scratch, norm_scratch;
    baselines::MekfState mekf_state = baselines::mekf_init_from_prior(prior);
    Rotation meas_only;
    bool meas_only_valid = false;
    const est::StepConfig step_cfg{config.ut, config.belief_cap};

    std::vector<StopWatch> watches(n_est);
    std::vector<meas::VectorMeasurement> epoch_meas;
    std::vector<double> epoch_weights;

    for (int k = 1; k <= n; ++k) {
        const Rotation& rt = truth[static_cast<std::size_t>(k)];
        const meas::GyroSample gyro{
            meas::simulate_gyro(avg_rate[static_cast<std::size_t>(k) - 1], gyro_strength, h,
                                gyro_stream),
            gyro_strength, h};

        const bool epoch = (k % every) == 0;
        epoch_meas.clear();
        epoch_weights.clear();
        if (epoch) {
            for (std::size_t i = 0; i < config.sensors.size(); ++i) {
                epoch_meas.push_back(meas::simulate_vector(
                    rt, config.sensors[i].reference, config.sensors[i].noise, sensor_streams[i]));
                epoch_weights.push_back(wahba_weight(config.sensors[i].noise));
            }
        }
        const std::span<const meas::VectorMeasurement> meas_span(epoch_meas);

        for (std::size_t e = 0; e < n_est; ++e) {
            const EstimatorKind kind = config.estimators[e];
            out.names[e] = estimator_name(kind);
            double err = std::numeric_limits<double>::quiet_NaN();
            double unc = std::numeric_limits<double>::quiet_NaN();
            StopWatch& watch = watches[e];
            switch (kind) {
                case EstimatorKind::BE: {
                    watch.start();
                    const est::StepResult r = est::step(be_state, gyro, meas_span, step_cfg, &be_scratch);
                    watch.stop();
                    be_state = r.state;
                    err = so3::geodesic_angle(r.estimate, rt) * kDeg;
                    unc = be_state.belief.svd().s.sum();
                    break;
                }
                case EstimatorKind::NormBE: {
                    watch.start();
                    std::vector<meas::VectorMeasurement> converted;
                    if (epoch) converted = baselines::norm_be_preprocess(meas_span);
                    const est::StepResult r =
                        est::step(norm_state, gyro, converted, step_cfg, &norm_scratch);
                    watch.stop();
                    norm_state = r.state;
                    err = so3::geodesic_angle(r.estimate, rt) * kDeg;
                    unc = norm_state.belief.svd().s.sum();
                    break;
                }
                case EstimatorKind::MEKF: {
                    watch.start();
                    mekf_state = baselines::mekf_propagate(mekf_state, gyro);
                    if (epoch) mekf_state = baselines::mekf_update(mekf_state, meas_span);
                    watch.stop();
                    err = so3::geodesic_angle(mekf_state.attitude, rt) * kDeg;
                    unc = mekf_state.p.trace();
                    break;
                }
                case EstimatorKind::MeasOnly: {
                    if (epoch) {
                        watch.start();
                        meas_only = est::wahba_svd(meas_span, epoch_weights);
                        watch.stop();
                        meas_only_valid = true;
                    }
                    if (meas_only_valid) err = so3::geodesic_angle(meas_only, rt) * kDeg;
                    break;
                }
            }
            out.err_deg[e][static_cast<std::size_t>(k) - 1] = err;
            out.uncertainty[e][static_cast<std::size_t>(k) - 1] = unc;
        }
    }

    for (std::size_t e = 0; e < n_est; ++e) {
        // Time average over the estimator's own estimate epochs in (0, T].
        double sum = 0.0;
        int count = 0;
        const bool epochs_only = config.estimators[e] == EstimatorKind::MeasOnly;
        for (int k = 1; k <= n; ++k) {
            if (epochs_only && (k % every) != 0) continue;
            const double v = out.err_deg[e][static_cast<std::size_t>(k) - 1];
            if (std::isfinite(v)) {
                sum += v;
                ++count;
            }
        }
        out.avg_err_deg[e] = count > 0 ? sum / count : std::numeric_limits<double>::quiet_NaN();
        out.wall_s[e] = watches[e].total();
    }
    return out;
}

double quantile(std::vector<double> values, double p) {
    if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(values.begin(), values.end());
    const double pos = p * (static_cast<double>(values.size()) - 1.0);
    const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

MCSummary summarize(const ScenarioConfig& config, const std::vector<RunTraces>& runs) {
    MCSummary out;
    const int n = config.steps();
    out.t_s.resize(static_cast<std::size_t>(n));
    for (int k = 1; k <= n; ++k) out.t_s[static_cast<std::size_t>(k) - 1] = k * config.dt_s;

    for (std::size_t e = 0; e < config.estimators.size(); ++e) {
        EstimatorSummary s;
        s.name = estimator_name(config.estimators[e]);
        s.mean_err_deg.resize(static_cast<std::size_t>(n));
        s.p2_5_err_deg.resize(static_cast<std::size_t>(n));
        s.p97_5_err_deg.resize(static_cast<std::size_t>(n));
        s.mean_uncertainty.resize(static_cast<std::size_t>(n));

        std::vector<double> column;
        for (std::size_t k = 0; k < static_cast<std::size_t>(n); ++k) {
            column.clear();
            double mean = 0.0, munc = 0.0;
            bool any_nan = false;
            for (const auto& run : runs) {
                const double v = run.err_deg[e][k];
                if (!std::isfinite(v)) {
                    any_nan = true;
                    break;
                }
                column.push_back(v);
                mean += v;
                munc += run.uncertainty[e][k];
            }
            if (any_nan || column.empty()) {
                const double nan = std::numeric_limits<double>::quiet_NaN();
                s.mean_err_deg[k] = s.p2_5_err_deg[k] = s.p97_5_err_deg[k] = nan;
                s.mean_uncertainty[k] = nan;
                continue;
            }
            const double cnt = static_cast<double>(column.size());
            s.mean_err_deg[k] = mean / cnt;
            s.mean_uncertainty[k] = munc / cnt;
            s.p2_5_err_deg[k] = quantile(column, 0.025);
            s.p97_5_err_deg[k] = quantile(column, 0.975);
        }

        double avg = 0.0, wall = 0.0;
        for (const auto& run : runs) {
            avg += run.avg_err_deg[e];
            wall += run.wall_s[e];
        }
        s.avg_err_deg = avg / static_cast<double>(runs.size());
        s.wall_s = wall;
        out.estimators.push_back(std::move(s));
    }
    return out;
}

MCSummary run_monte_carlo(const ScenarioConfig& config) {
    config.validate();
    std::vector<RunTraces> runs(static_cast<std::size_t>(config.mc_runs));
    const int workers = std::min(env_workers(), config.mc_runs);
    if (workers <= 1) {
        for (int i = 0; i < config.mc_runs; ++i) {
            runs[static_cast<std::size_t>(i)] = run_single(config, i);
        }
    } else {
        std::atomic<int> next{0};
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int t = 0; t < workers; ++t) {
            pool.emplace_back([&] {
                for (;;) {
                    const int i = next.fetch_add(1);
                    if (i >= config.mc_runs) return;
                    runs[static_cast<std::size_t>(i)] = run_single(config, i);
                }
            });
        }
        for (auto& th : pool) th.join();
    }
    return summarize(config, runs);
}

} // namespace mfatt::sim
