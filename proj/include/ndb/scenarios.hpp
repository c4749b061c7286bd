#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "ndb/config.hpp"
#include "ndb/spectral.hpp"

namespace ndb {

struct OutputFile {
    std::string name;  // relative to the run directory
    std::string content;
};

struct ScenarioResult {
    std::string scenario;
    nlohmann::json summary = nlohmann::json::object();
    std::vector<OutputFile> files;
    bool checks_passed = true;  // only `validate` can fail its checks
};

const std::vector<std::string>& scenario_names();

// Defaults plus the scenario's frozen protocol. Throws UnknownScenario.
RunConfig scenario_config(const std::string& name);

// Runs cfg.scenario with cfg as given (protocol already applied).
ScenarioResult run_scenario(const RunConfig& cfg);

// E0, omega, omega_xi, omega_eta, inertias, polarizabilities and friends.
nlohmann::json derived_quantities(const ExperimentConfig& resolved);

std::string crc32_hex(const std::string& data);
std::string code_version();

nlohmann::json make_manifest(const RunConfig& cfg, const ScenarioResult& result, double wall_seconds);

// Writes <dir>/<scenario>/<UTC timestamp>/{manifest.json, files}.
std::filesystem::path write_run(const RunConfig& cfg, const ScenarioResult& result, double wall_seconds);

// Scenario protocol plus every key recorded in the manifest.
RunConfig config_from_manifest(const nlohmann::json& manifest);

// Output files whose checksum differs from the manifest (empty: identical).
std::vector<std::string> compare_checksums(const nlohmann::json& manifest, const ScenarioResult& rerun);

// --- pieces shared with the acceptance suite ---

struct Check {
    std::string name;
    double value = 0.0;
    double limit = 0.0;
    bool pass = false;
};

// Conservation, gradient, reproducibility and scalar checks.
std::vector<Check> invariant_checks(const RunConfig& cfg);

// Measured tip signal for a PSD (p45, optionally Gouy-attenuated).
std::vector<double> detector_series(const std::vector<TrajectorySample>& window, double gain = 1.0);

// Tallest PSD value on each side of the midpoint between w- and w+.
struct ModePeakHeights {
    double minus = 0.0;
    double plus = 0.0;
    double omega_minus = 0.0;  // where they sit, rad/s
    double omega_plus = 0.0;
};
ModePeakHeights mode_peak_heights(const PsdResult& psd, double omega_minus, double omega_plus);

// Peaks near the libration frequency no lower than `fraction` of the tallest.
std::vector<Peak> surviving_peaks(const PsdResult& psd, double omega, double fraction = 1e-3);

// -d ln(eps)/dt by least squares over samples with t in [t0, t1).
double log_decay_rate(const std::vector<TrajectorySample>& samples, double t0, double t1);

std::string psd_csv(const PsdResult& psd);
std::string histogram_csv(const Histogram& h);
nlohmann::json fit_json(const MaxwellBoltzmannFit& f);

}  // namespace ndb
