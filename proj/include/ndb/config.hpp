#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ndb/ensemble.hpp"

namespace ndb {

// Material inputs; the particle constants are built from these.
struct ParticleInputs {
    double radius = 85e-9;
    double total_mass = 1.029e-17;
    double refractive_index = 1.458;
    double density = 2000.0;
    double alpha_bar = 0.59;
    std::optional<double> alpha_x;  // SI overrides of the spheroid model
    std::optional<double> alpha_z;

    ParticleParams build() const;
};

struct OutputConfig {
    std::string dir = "out";
    std::size_t psd_segment = 8192;
    std::size_t bins = 40;
    bool gouy = false;  // attenuate homodyne signals by z_d / z_R
};

struct RunConfig {
    std::string scenario = "custom";
    ParticleInputs particle;
    ExperimentConfig experiment;  // particle inside is rebuilt by resolve()
    OutputConfig output;

    // Copy of the experiment with the particle built and the setup prepared.
    // Throws ValidationError.
    ExperimentConfig resolve() const;
    void validate() const { (void)resolve(); }
};

// One `key = value` line of a config file.
struct ConfigEntry {
    std::string key;  // section.name
    std::string value;
    int line = 0;     // 0 when not from a file
};

// Every accepted dotted key, in a stable order.
const std::vector<std::string>& config_keys();

// Sets one dotted key. Unknown key or unparsable value -> ParseError.
void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value, int line = 0);
std::string get_config_value(const RunConfig& cfg, const std::string& key);

// "section.key=value" as given on the command line.
ConfigEntry parse_override(const std::string& text);

// INI text -> entries; syntax errors and unknown keys -> ParseError.
std::vector<ConfigEntry> read_config_entries(const std::string& text);
std::vector<ConfigEntry> read_config_file(const std::filesystem::path& path);

void apply_entries(RunConfig& cfg, const std::vector<ConfigEntry>& entries);

// Defaults, then the file. Validates the result.
RunConfig parse_config(const std::filesystem::path& path);
RunConfig parse_config_string(const std::string& text);

// Flat dotted-key map of the whole config (values round-trip exactly).
std::map<std::string, std::string> config_map(const RunConfig& cfg);
std::string format_number(double v);

}  // namespace ndb
