#include "mfatt/cli.hpp"

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "mfatt/kernels/kernels.hpp"

namespace mfatt::cli {
namespace {

std::string fmt(double v, const char* spec = "%.17g") {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

std::vector<std::string> tokenize(const std::string& line) {
    std::istringstream in(line);
    std::vector<std::string> out;
    std::string tok;
    while (in >> tok) {
        if (tok.front() == '#') break;
        out.push_back(tok);
    }
    return out;
}

double num(const std::string& s, const std::string& ctx) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("scenario: bad number '" + s + "' in " + ctx);
    }
}

Vec3 vec3_at(const std::vector<std::string>& tok, std::size_t i, const std::string& ctx) {
    if (tok.size() < i + 3) throw ConfigError("scenario: expected 3 numbers in " + ctx);
    return Vec3(num(tok[i], ctx), num(tok[i + 1], ctx), num(tok[i + 2], ctx));
}

Mat3 mat3_at(const std::vector<std::string>& tok, std::size_t i, const std::string& ctx) {
    if (tok.size() < i + 9) throw ConfigError("scenario: expected 9 numbers in " + ctx);
    Mat3 m;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) m(r, c) = num(tok[i + static_cast<std::size_t>(3 * r + c)], ctx);
    return m;
}

sim::EstimatorKind estimator_from_name(const std::string& name) {
    if (name == "be") return sim::EstimatorKind::BE;
    if (name == "normbe") return sim::EstimatorKind::NormBE;
    if (name == "mekf") return sim::EstimatorKind::MEKF;
    if (name == "meas") return sim::EstimatorKind::MeasOnly;
    throw ConfigError("unknown estimator '" + name + "' (expected be,normbe,mekf,meas)");
}

std::vector<sim::EstimatorKind> estimators_from_csv(const std::string& csv) {
    std::vector<sim::EstimatorKind> out;
    std::stringstream in(csv);
    std::string item;
    while (std::getline(in, item, ',')) {
        if (!item.empty()) out.push_back(estimator_from_name(item));
    }
    return out;
}

int used_workers(int mc_runs) {
    int workers = 0;
    if (const char* env = std::getenv("MFATT_WORKERS")) workers = std::atoi(env);
    if (workers < 1) {
        const unsigned hw = std::thread::hardware_concurrency();
        workers = hw == 0 ? 1 : static_cast<int>(hw);
    }
    return std::min(workers, std::max(mc_runs, 1));
}

} // namespace

sim::ScenarioConfig preset(const std::string& case_id) {
    sim::ScenarioConfig c;
    c.duration_s = 60.0;
    c.dt_s = 0.02;
    c.gyro_rate_hz = 50.0;
    c.vector_rate_hz = 10.0;
    c.gyro_sigma_deg_sqrt_s = 1.0;
    c.mc_runs = 50;
    c.seed = 2025;
    c.ut = est::UtConfig{};
    c.belief_cap = 480.0;
    c.estimators = {sim::EstimatorKind::MeasOnly, sim::EstimatorKind::MEKF,
                    sim::EstimatorKind::BE, sim::EstimatorKind::NormBE};
    c.f0 = so3::exp(Vec3(M_PI, 0.0, 0.0)).matrix();
    c.r0 = Rotation::identity();
    c.omega0 = 4.14 * Vec3(1.0, 1.0, 1.0);
    c.pendulum = sim::PendulumParams{};

    meas::NoiseModel noise;
    if (case_id == "I") {
        noise = meas::IsotropicGaussian{0.08};
    } else if (case_id == "II") {
        noise = meas::Gaussian{Vec3(0.01, 0.01, 0.30).asDiagonal()};
    } else if (case_id == "III") {
        c.gyro_sigma_deg_sqrt_s = 10.0;
        noise = meas::IsotropicGaussian{0.24};
    } else {
        throw ConfigError("unknown case '" + case_id + "' (expected I, II or III)");
    }
    c.sensors = {{Vec3::UnitX(), noise}, {Vec3::UnitY(), noise}, {Vec3::UnitZ(), noise}};
    return c;
}

std::string serialize_scenario(const sim::ScenarioConfig& c) {
    std::ostringstream out;
    out << "# mfatt scenario\n";
    out << "duration_s " << fmt(c.duration_s) << "\n";
    out << "dt_s " << fmt(c.dt_s) << "\n";
    out << "gyro_rate_hz " << fmt(c.gyro_rate_hz) << "\n";
    out << "vector_rate_hz " << fmt(c.vector_rate_hz) << "\n";
    out << "gyro_sigma_deg_per_sqrt_s " << fmt(c.gyro_sigma_deg_sqrt_s) << "\n";
    out << "mc_runs " << c.mc_runs << "\n";
    out << "seed " << c.seed << "\n";
    out << "ut_kappa " << fmt(c.ut.kappa) << "\n";
    out << "belief_cap " << fmt(c.belief_cap) << "\n";
    out << "estimators ";
    for (std::size_t i = 0; i < c.estimators.size(); ++i) {
        out << (i ? "," : "") << sim::estimator_name(c.estimators[i]);
    }
    out << "\n";
    out << "f0 matrix";
    for (int r = 0; r < 3; ++r)
        for (int col = 0; col < 3; ++col) out << " " << fmt(c.f0(r, col));
    out << "\n";
    out << "initial_attitude matrix";
    for (int r = 0; r < 3; ++r)
        for (int col = 0; col < 3; ++col) out << " " << fmt(c.r0.matrix()(r, col));
    out << "\n";
    out << "initial_omega_rad_s " << fmt(c.omega0.x()) << " " << fmt(c.omega0.y()) << " "
        << fmt(c.omega0.z()) << "\n";
    const Vec3 jd = c.pendulum.inertia.diagonal();
    out << "pendulum_inertia_diag_kg_m2 " << fmt(jd.x()) << " " << fmt(jd.y()) << " "
        << fmt(jd.z()) << "\n";
    out << "pendulum_mgr_n_m " << fmt(c.pendulum.mass_gravity_term.x()) << " "
        << fmt(c.pendulum.mass_gravity_term.y()) << " " << fmt(c.pendulum.mass_gravity_term.z())
        << "\n";
    out << "pendulum_gravity_dir " << fmt(c.pendulum.gravity_dir.x()) << " "
        << fmt(c.pendulum.gravity_dir.y()) << " " << fmt(c.pendulum.gravity_dir.z()) << "\n";
    for (const auto& s : c.sensors) {
        out << "sensor ref " << fmt(s.reference.x()) << " " << fmt(s.reference.y()) << " "
            << fmt(s.reference.z());
        if (const auto* iso = std::get_if<meas::IsotropicGaussian>(&s.noise)) {
            out << " iso_var " << fmt(iso->sigma2);
        } else if (const auto* g = std::get_if<meas::Gaussian>(&s.noise)) {
            out << " gauss_cov";
            for (int r = 0; r < 3; ++r)
                for (int col = 0; col < 3; ++col) out << " " << fmt(g->q(r, col));
        } else {
            out << " vmf_kappa " << fmt(std::get<meas::VonMisesFisher>(s.noise).kappa);
        }
        out << "\n";
    }
    return out.str();
}

sim::ScenarioConfig parse_scenario(const std::string& text) {
    sim::ScenarioConfig c;
    c.sensors.clear();
    c.estimators.clear();

    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto tok = tokenize(line);
        if (tok.empty()) continue;
        const std::string& key = tok[0];
        const std::string ctx = key + " (line " + std::to_string(line_no) + ")";
        const auto one = [&]() -> const std::string& {
            if (tok.size() < 2) throw ConfigError("scenario: missing value in " + ctx);
            return tok[1];
        };

        if (key == "duration_s") c.duration_s = num(one(), ctx);
        else if (key == "dt_s") c.dt_s = num(one(), ctx);
        else if (key == "gyro_rate_hz") c.gyro_rate_hz = num(one(), ctx);
        else if (key == "vector_rate_hz") c.vector_rate_hz = num(one(), ctx);
        else if (key == "gyro_sigma_deg_per_sqrt_s") c.gyro_sigma_deg_sqrt_s = num(one(), ctx);
        else if (key == "mc_runs") c.mc_runs = static_cast<int>(num(one(), ctx));
        else if (key == "seed") c.seed = static_cast<std::uint64_t>(std::stoull(one()));
        else if (key == "ut_kappa") c.ut.kappa = num(one(), ctx);
        else if (key == "belief_cap") c.belief_cap = num(one(), ctx);
        else if (key == "estimators") c.estimators = estimators_from_csv(one());
        else if (key == "f0") {
            if (one() == "matrix") c.f0 = mat3_at(tok, 2, ctx);
            else if (tok[1] == "rotvec") c.f0 = so3::exp(vec3_at(tok, 2, ctx)).matrix();
            else if (tok[1] == "zero") c.f0 = Mat3::Zero();
            else throw ConfigError("scenario: f0 expects matrix|rotvec|zero in " + ctx);
        } else if (key == "initial_attitude") {
            if (one() == "identity") c.r0 = Rotation::identity();
            else if (tok[1] == "rotvec") c.r0 = so3::exp(vec3_at(tok, 2, ctx));
            else if (tok[1] == "matrix") c.r0 = Rotation(mat3_at(tok, 2, ctx));
            else throw ConfigError("scenario: initial_attitude expects identity|rotvec|matrix");
        } else if (key == "initial_omega_rad_s") c.omega0 = vec3_at(tok, 1, ctx);
        else if (key == "pendulum_inertia_diag_kg_m2")
            c.pendulum.inertia = vec3_at(tok, 1, ctx).asDiagonal();
        else if (key == "pendulum_mgr_n_m") c.pendulum.mass_gravity_term = vec3_at(tok, 1, ctx);
        else if (key == "pendulum_gravity_dir") c.pendulum.gravity_dir = vec3_at(tok, 1, ctx);
        else if (key == "sensor") {
            if (tok.size() < 6 || tok[1] != "ref")
                throw ConfigError("scenario: sensor line must start 'sensor ref x y z' in " + ctx);
            sim::SensorSpec spec;
            spec.reference = vec3_at(tok, 2, ctx);
            const std::string& kind = tok.size() > 5 ? tok[5] : tok[0];
            if (kind == "iso_var") {
                if (tok.size() < 7) throw ConfigError("scenario: iso_var needs a value in " + ctx);
                spec.noise = meas::IsotropicGaussian{num(tok[6], ctx)};
            } else if (kind == "gauss_var_diag") {
                spec.noise = meas::Gaussian{vec3_at(tok, 6, ctx).asDiagonal()};
            } else if (kind == "gauss_cov") {
                spec.noise = meas::Gaussian{mat3_at(tok, 6, ctx)};
            } else if (kind == "vmf_kappa") {
                if (tok.size() < 7) throw ConfigError("scenario: vmf_kappa needs a value in " + ctx);
                spec.noise = meas::VonMisesFisher{num(tok[6], ctx)};
            } else {
                throw ConfigError("scenario: unknown sensor noise '" + kind + "' in " + ctx);
            }
            c.sensors.push_back(spec);
        } else {
            throw ConfigError("scenario: unknown key '" + key + "' (line " +
                              std::to_string(line_no) + ")");
        }
    }
    return c;
}

std::string apply_overrides(const std::string& text,
                            const std::vector<std::string>& overrides) {
    std::vector<std::pair<std::string, std::string>> kv;
    for (const auto& o : overrides) {
        const auto eq = o.find('=');
        if (eq == std::string::npos || eq == 0) {
            throw ConfigError("override must be key=value, got '" + o + "'");
        }
        kv.emplace_back(o.substr(0, eq), o.substr(eq + 1));
    }

    std::istringstream in(text);
    std::ostringstream out;
    std::string line;
    std::vector<bool> used(kv.size(), false);
    while (std::getline(in, line)) {
        const auto tok = tokenize(line);
        bool replaced = false;
        if (!tok.empty()) {
            for (std::size_t i = 0; i < kv.size(); ++i) {
                if (tok[0] == kv[i].first) {
                    out << kv[i].first << " " << kv[i].second << "\n";
                    used[i] = true;
                    replaced = true;
                    break;
                }
            }
        }
        if (!replaced) out << line << "\n";
    }
    for (std::size_t i = 0; i < kv.size(); ++i) {
        if (!used[i]) out << kv[i].first << " " << kv[i].second << "\n";
    }
    return out.str();
}

std::string summary_csv(const sim::MCSummary& summary) {
    std::ostringstream out;
    out << "t_s";
    for (const auto& e : summary.estimators) {
        out << "," << e.name << "_err_deg_mean"
            << "," << e.name << "_err_deg_p2_5"
            << "," << e.name << "_err_deg_p97_5"
            << "," << e.name << "_uncertainty";
    }
    out << "\n";
    for (std::size_t k = 0; k < summary.t_s.size(); ++k) {
        out << fmt(summary.t_s[k], "%.10g");
        for (const auto& e : summary.estimators) {
            out << "," << fmt(e.mean_err_deg[k], "%.10g") << "," << fmt(e.p2_5_err_deg[k], "%.10g")
                << "," << fmt(e.p97_5_err_deg[k], "%.10g")
                << "," << fmt(e.mean_uncertainty[k], "%.10g");
        }
        out << "\n";
    }
    return out.str();
}

std::string summary_table(const sim::MCSummary& summary) {
    const auto label = [](const std::string& n) -> std::string {
        if (n == "meas") return "Mea.";
        if (n == "mekf") return "MEKF";
        if (n == "be") return "BE";
        if (n == "normbe") return "NormBE";
        return n;
    };
    std::ostringstream out;
    char buf[64];
    out << "                ";
    for (const auto& e : summary.estimators) {
        std::snprintf(buf, sizeof buf, "%10s", label(e.name).c_str());
        out << buf;
    }
    out << "\n" << "est. err.(deg)  ";
    for (const auto& e : summary.estimators) {
        std::snprintf(buf, sizeof buf, "%10.2f", e.avg_err_deg);
        out << buf;
    }
    out << "\n" << "time(s)         ";
    for (const auto& e : summary.estimators) {
        std::snprintf(buf, sizeof buf, "%10.2f", e.wall_s);
        out << buf;
    }
    out << "\n";
    return out.str();
}

std::string manifest_json(const RunManifest& m) {
    nlohmann::json j;
    j["case"] = m.case_id;
    j["version"] = m.version;
    j["seed"] = m.seed;
    j["workers"] = m.workers;
    j["kernel_backend"] = m.kernel_backend;
    j["scenario"] = m.scenario_text;
    nlohmann::json est = nlohmann::json::object();
    for (const auto& e : m.estimators) {
        est[e.name] = {{"avg_err_deg", e.avg_err_deg}, {"wall_s", e.wall_s}};
    }
    j["estimators"] = est;
    j["diagnostics"] = {{"moment_clamps", m.diagnostics.moment_clamps},
                        {"newton_failures", m.diagnostics.newton_failures},
                        {"belief_caps", m.diagnostics.belief_caps}};
    nlohmann::json outs = nlohmann::json::object();
    for (const auto& [k, v] : m.outputs) outs[k] = v;
    j["outputs"] = outs;
    return j.dump(2) + "\n";
}

void emit_outputs(const sim::MCSummary& summary, RunManifest& manifest,
                  const std::string& out_dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw Error("emit_outputs: cannot create '" + out_dir + "': " + ec.message());

    const auto write_file = [&](const std::string& name, const std::string& payload) {
        const fs::path path = fs::path(out_dir) / name;
        std::ofstream f(path, std::ios::binary | std::ios::trunc);
        if (!f) throw Error("emit_outputs: cannot open '" + path.string() + "' for writing");
        f << payload;
        if (!f.good()) throw Error("emit_outputs: short write to '" + path.string() + "'");
        manifest.outputs[name] = path.string();
    };

    if (!summary.estimators.empty()) {
        write_file("summary.csv", summary_csv(summary));
        write_file("table.txt", summary_table(summary));
    }
    write_file("scenario.txt", manifest.scenario_text);
    write_file("manifest.json", manifest_json(manifest));
}

RunManifest run_case(const std::string& selector,
                     const std::vector<std::string>& overrides,
                     const std::string& out_dir) {
    std::string text;
    std::string case_id = selector;
    if (selector == "I" || selector == "II" || selector == "III") {
        text = serialize_scenario(preset(selector));
    } else {
        std::ifstream f(selector, std::ios::binary);
        if (!f) throw ConfigError("cannot open scenario file '" + selector + "'");
        std::ostringstream buf;
        buf << f.rdbuf();
        text = buf.str();
        case_id = "scenario:" + selector;
        if (!text.empty() && text.front() == '{') {  // a manifest; use its echo
            const auto j = nlohmann::json::parse(text, nullptr, false);
            if (j.is_discarded() || !j.contains("scenario")) {
                throw ConfigError("'" + selector + "' is not a manifest with a scenario echo");
            }
            text = j["scenario"].get<std::string>();
        }
    }
    text = apply_overrides(text, overrides);
    const sim::ScenarioConfig config = parse_scenario(text);
    config.validate();

    mf::reset_diagnostics();
    const sim::MCSummary summary = sim::run_monte_carlo(config);

    RunManifest manifest;
    manifest.case_id = case_id;
    manifest.version = kVersionTag;
    manifest.seed = config.seed;
    manifest.workers = used_workers(config.mc_runs);
    manifest.kernel_backend = kernels::active().name;
    manifest.scenario_text = serialize_scenario(config);
    for (const auto& e : summary.estimators) {
        manifest.estimators.push_back(EstimatorReport{e.name, e.avg_err_deg, e.wall_s});
    }
    manifest.diagnostics = mf::diagnostics();
    if (!out_dir.empty()) emit_outputs(summary, manifest, out_dir);
    return manifest;
}

} // namespace mfatt::cli
