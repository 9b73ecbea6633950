/**
 * @file cli.hpp
 * @brief Scenario presets for Cases I-III, the scenario text format,
 *        Monte-Carlo case execution and CSV/JSON/table emission.
 */
#pragma once

#include <map>
#include <string>
#include <vector>

#include "mfatt/matrix_fisher.hpp"
#include "mfatt/sim.hpp"

namespace mfatt::cli {

inline constexpr const char* kVersionTag = "mfatt 0.1.0";

/// Case presets "I", "II", "III" (isotropic / non-isotropic / strong
/// gyro interference).
sim::ScenarioConfig preset(const std::string& case_id);

/// Parse the key/value scenario text format (units in key names).
/// Throws ConfigError with line context.
sim::ScenarioConfig parse_scenario(const std::string& text);

/// Canonical text form; parse(serialize(c)) reproduces c bit-for-bit.
std::string serialize_scenario(const sim::ScenarioConfig& config);

/// Replace scalar keys in scenario text with "key=value" overrides.
std::string apply_overrides(const std::string& text,
                            const std::vector<std::string>& overrides);

struct EstimatorReport {
    std::string name;
    double avg_err_deg = 0.0;
    double wall_s = 0.0;
};

/// Everything needed to reproduce and audit one case run.
struct RunManifest {
    std::string case_id;
    std::string version;
    std::uint64_t seed = 0;
    int workers = 1;
    std::string kernel_backend;
    std::string scenario_text;  // exact config echo; rerunning it reproduces the CSV
    std::vector<EstimatorReport> estimators;
    mf::Diagnostics diagnostics;
    std::map<std::string, std::string> outputs;  // logical name -> path
};

/// The summary.csv payload: one row per step with
/// t_s, <est>_err_deg_mean, <est>_err_deg_p2_5, <est>_err_deg_p97_5,
/// <est>_uncertainty per enabled estimator.
std::string summary_csv(const sim::MCSummary& summary);

/// Paper-style console table (Mea. / MEKF / BE / NormBE rows present as enabled).
std::string summary_table(const sim::MCSummary& summary);

std::string manifest_json(const RunManifest& manifest);

/// Write summary.csv, table.txt, scenario.txt and manifest.json under
/// out_dir (created if missing); overwrites idempotently. Fills
/// manifest.outputs. Empty estimator set writes the manifest only.
void emit_outputs(const sim::MCSummary& summary, RunManifest& manifest,
                  const std::string& out_dir);

/**
 * @brief Execute one case: `selector` is "I"/"II"/"III" or a path to a
 *        scenario file (a manifest.json is accepted too; its scenario echo
 *        is extracted). Overrides are "key=value" pairs for scalar keys.
 *        Writes outputs under out_dir unless it is empty.
 */
RunManifest run_case(const std::string& selector,
                     const std::vector<std::string>& overrides,
                     const std::string& out_dir);

} // namespace mfatt::cli
