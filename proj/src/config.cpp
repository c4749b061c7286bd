#include "ndb/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace ndb {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

// Value errors carry the key (and line when known).
[[noreturn]] void bad_value(const std::string& key, const std::string& value, int line, const std::string& what) {
    std::string msg = "config";
    if (line > 0) msg += " line " + std::to_string(line);
    msg += ": " + key + " = '" + value + "': " + what;
    throw ParseError(msg);
}

struct Ctx {
    const std::string& key;
    const std::string& value;
    int line;
};

double to_double(const Ctx& c) {
    const std::string v = trim(c.value);
    double out = 0.0;
    const auto* end = v.data() + v.size();
    const auto r = std::from_chars(v.data(), end, out);
    if (v.empty() || r.ec != std::errc() || r.ptr != end) bad_value(c.key, c.value, c.line, "expected a number");
    return out;
}

std::uint64_t to_u64(const Ctx& c) {
    const std::string v = trim(c.value);
    std::uint64_t out = 0;
    const auto* end = v.data() + v.size();
    const auto r = std::from_chars(v.data(), end, out);
    if (v.empty() || r.ec != std::errc() || r.ptr != end) {
        bad_value(c.key, c.value, c.line, "expected a non-negative integer");
    }
    return out;
}

int to_int(const Ctx& c) {
    const std::string v = trim(c.value);
    int out = 0;
    const auto* end = v.data() + v.size();
    const auto r = std::from_chars(v.data(), end, out);
    if (v.empty() || r.ec != std::errc() || r.ptr != end) bad_value(c.key, c.value, c.line, "expected an integer");
    return out;
}

bool to_bool(const Ctx& c) {
    const std::string v = lower(trim(c.value));
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    bad_value(c.key, c.value, c.line, "expected true/false");
}

std::optional<double> to_optional(const Ctx& c) {
    const std::string v = lower(trim(c.value));
    if (v.empty() || v == "auto" || v == "none") return std::nullopt;
    return to_double(c);
}

std::string opt_str(const std::optional<double>& v) { return v ? format_number(*v) : "auto"; }
std::string bool_str(bool b) { return b ? "true" : "false"; }

// "none", "staged" or "t:mult,t:mult,..."
std::vector<ChiStep> to_schedule(const Ctx& c) {
    const std::string v = lower(trim(c.value));
    if (v.empty() || v == "none") return {};
    if (v == "staged") return FeedbackConfig::staged_schedule();
    std::vector<ChiStep> out;
    std::stringstream ss(v);
    for (std::string item; std::getline(ss, item, ',');) {
        const auto colon = item.find(':');
        if (colon == std::string::npos) bad_value(c.key, c.value, c.line, "schedule items are t:multiplier");
        const std::string t = item.substr(0, colon), m = item.substr(colon + 1);
        out.push_back({to_double({c.key, t, c.line}), to_double({c.key, m, c.line})});
    }
    return out;
}

std::string schedule_str(const std::vector<ChiStep>& s) {
    if (s.empty()) return "none";
    std::string out;
    for (const auto& step : s) {
        if (!out.empty()) out += ",";
        out += format_number(step.t_start) + ":" + format_number(step.multiplier);
    }
    return out;
}

struct KeyDef {
    std::string name;
    std::function<void(RunConfig&, const Ctx&)> set;
    std::function<std::string(const RunConfig&)> get;
};

#define NDB_DOUBLE(key, field)                                                        \
    KeyDef {                                                                          \
        key, [](RunConfig& r, const Ctx& c) { r.field = to_double(c); },             \
            [](const RunConfig& r) { return format_number(r.field); }                 \
    }
#define NDB_BOOL(key, field)                                                          \
    KeyDef {                                                                          \
        key, [](RunConfig& r, const Ctx& c) { r.field = to_bool(c); },               \
            [](const RunConfig& r) { return bool_str(r.field); }                      \
    }
#define NDB_U64(key, field)                                                           \
    KeyDef {                                                                          \
        key, [](RunConfig& r, const Ctx& c) { r.field = to_u64(c); },                \
            [](const RunConfig& r) { return std::to_string(r.field); }                \
    }
#define NDB_OPT(key, field)                                                           \
    KeyDef {                                                                          \
        key, [](RunConfig& r, const Ctx& c) { r.field = to_optional(c); },           \
            [](const RunConfig& r) { return opt_str(r.field); }                       \
    }

const std::vector<KeyDef>& registry() {
    static const std::vector<KeyDef> keys = {
        NDB_DOUBLE("particle.radius", particle.radius),
        NDB_DOUBLE("particle.mass", particle.total_mass),
        NDB_DOUBLE("particle.refractive_index", particle.refractive_index),
        NDB_DOUBLE("particle.density", particle.density),
        NDB_DOUBLE("particle.alpha_bar", particle.alpha_bar),
        NDB_OPT("particle.alpha_x", particle.alpha_x),
        NDB_OPT("particle.alpha_z", particle.alpha_z),

        NDB_DOUBLE("trap.wavelength", experiment.setup.trap.wavelength),
        NDB_DOUBLE("trap.power", experiment.setup.trap.power),
        NDB_DOUBLE("trap.na", experiment.setup.trap.numerical_aperture),
        NDB_DOUBLE("trap.theta", experiment.setup.trap.ellipticity),
        KeyDef{"trap.field_mode",
               [](RunConfig& r, const Ctx& c) {
                   const std::string v = lower(trim(c.value));
                   auto& m = r.experiment.setup.trap.field_mode;
                   if (v == "calibrated") m = FieldMode::calibrated;
                   else if (v == "derived") m = FieldMode::derived;
                   else if (v == "direct") m = FieldMode::direct;
                   else bad_value(c.key, c.value, c.line, "expected calibrated, derived or direct");
               },
               [](const RunConfig& r) -> std::string {
                   switch (r.experiment.setup.trap.field_mode) {
                   case FieldMode::calibrated: return "calibrated";
                   case FieldMode::derived: return "derived";
                   case FieldMode::direct: return "direct";
                   }
                   return "calibrated";
               }},
        NDB_DOUBLE("trap.target_frequency", experiment.setup.trap.target_frequency),
        KeyDef{"trap.frequency_convention",
               [](RunConfig& r, const Ctx& c) {
                   const std::string v = lower(trim(c.value));
                   auto& m = r.experiment.setup.trap.convention;
                   if (v == "angular") m = FrequencyConvention::angular;
                   else if (v == "cyclic") m = FrequencyConvention::cyclic;
                   else bad_value(c.key, c.value, c.line, "expected angular or cyclic");
               },
               [](const RunConfig& r) -> std::string {
                   return r.experiment.setup.trap.convention == FrequencyConvention::angular ? "angular" : "cyclic";
               }},
        NDB_DOUBLE("trap.e0", experiment.setup.trap.field_amplitude),

        KeyDef{"feedback.signal",
               [](RunConfig& r, const Ctx& c) {
                   try {
                       r.experiment.setup.feedback.signal = parse_feedback_signal(trim(c.value));
                   } catch (const ValidationError& e) {
                       bad_value(c.key, c.value, c.line, e.what());
                   }
               },
               [](const RunConfig& r) -> std::string { return to_string(r.experiment.setup.feedback.signal); }},
        NDB_DOUBLE("feedback.chi", experiment.setup.feedback.chi),
        KeyDef{"feedback.schedule",
               [](RunConfig& r, const Ctx& c) { r.experiment.setup.feedback.schedule = to_schedule(c); },
               [](const RunConfig& r) { return schedule_str(r.experiment.setup.feedback.schedule); }},
        NDB_DOUBLE("feedback.measurement_noise", experiment.setup.feedback.measurement_noise),

        NDB_BOOL("noise.gas", experiment.setup.noise.gas),
        NDB_BOOL("noise.shot", experiment.setup.noise.shot),
        NDB_DOUBLE("noise.pressure", experiment.setup.noise.pressure),
        NDB_DOUBLE("noise.gas_temperature", experiment.setup.noise.gas_temperature),
        NDB_OPT("noise.gamma_alpha_beta", experiment.setup.noise.gamma_alpha_beta),
        NDB_OPT("noise.gamma_spin", experiment.setup.noise.gamma_spin),
        NDB_DOUBLE("noise.shot_rate", experiment.setup.noise.shot_rate),
        NDB_DOUBLE("noise.shot_kick_rms", experiment.setup.noise.shot_kick_rms),

        KeyDef{"integrator.method",
               [](RunConfig& r, const Ctx& c) {
                   const std::string v = lower(trim(c.value));
                   auto& m = r.experiment.setup.integrator.method;
                   if (v == "rk4" || v == "rk4_doubling") m = StepMethod::rk4_doubling;
                   else if (v == "dopri" || v == "dormand_prince") m = StepMethod::dormand_prince;
                   else bad_value(c.key, c.value, c.line, "expected rk4 or dopri");
               },
               [](const RunConfig& r) -> std::string {
                   return r.experiment.setup.integrator.method == StepMethod::rk4_doubling ? "rk4" : "dopri";
               }},
        NDB_DOUBLE("integrator.rel_tol", experiment.setup.integrator.rel_tol),
        NDB_DOUBLE("integrator.abs_tol", experiment.setup.integrator.abs_tol),
        NDB_DOUBLE("integrator.dt_init", experiment.setup.integrator.dt_init),
        NDB_DOUBLE("integrator.dt_min", experiment.setup.integrator.dt_min),
        NDB_DOUBLE("integrator.dt_max", experiment.setup.integrator.dt_max),
        NDB_U64("integrator.max_steps", experiment.setup.integrator.max_steps),

        KeyDef{"ensemble.n", [](RunConfig& r, const Ctx& c) { r.experiment.n = to_u64(c); },
               [](const RunConfig& r) { return std::to_string(r.experiment.n); }},
        NDB_DOUBLE("ensemble.temperature", experiment.thermal.temperature),
        NDB_U64("ensemble.seed", experiment.thermal.seed),
        NDB_U64("ensemble.rejection_cap", experiment.thermal.rejection_cap),
        NDB_BOOL("ensemble.literal_density", experiment.thermal.literal_eq26),
        KeyDef{"ensemble.threads", [](RunConfig& r, const Ctx& c) { r.experiment.threads = to_int(c); },
               [](const RunConfig& r) { return std::to_string(r.experiment.threads); }},
        NDB_DOUBLE("ensemble.duration", experiment.setup.duration),
        NDB_DOUBLE("ensemble.sample_dt", experiment.setup.sample_dt),
        NDB_DOUBLE("ensemble.tail_duration", experiment.setup.tail_duration),
        NDB_DOUBLE("ensemble.tail_dt", experiment.setup.tail_dt),
        NDB_BOOL("ensemble.analyze_final_modes", experiment.analyze_final_modes),
        NDB_BOOL("ensemble.keep_records", experiment.keep_records),

        KeyDef{"output.dir", [](RunConfig& r, const Ctx& c) { r.output.dir = trim(c.value); },
               [](const RunConfig& r) { return r.output.dir; }},
        KeyDef{"output.psd_segment", [](RunConfig& r, const Ctx& c) { r.output.psd_segment = to_u64(c); },
               [](const RunConfig& r) { return std::to_string(r.output.psd_segment); }},
        KeyDef{"output.bins", [](RunConfig& r, const Ctx& c) { r.output.bins = to_u64(c); },
               [](const RunConfig& r) { return std::to_string(r.output.bins); }},
        NDB_BOOL("output.gouy", output.gouy),
    };
    return keys;
}

#undef NDB_DOUBLE
#undef NDB_BOOL
#undef NDB_U64
#undef NDB_OPT

const KeyDef* find_key(const std::string& key) {
    for (const auto& k : registry()) {
        if (k.name == key) return &k;
    }
    return nullptr;
}

// property_tree drops line numbers; recover them from the text.
int line_of(const std::string& text, const std::string& section, const std::string& name) {
    std::stringstream ss(text);
    std::string current;
    int n = 0;
    for (std::string line; std::getline(ss, line);) {
        ++n;
        const std::string t = trim(line);
        if (t.empty() || t[0] == ';' || t[0] == '#') continue;
        if (t.front() == '[' && t.back() == ']') {
            current = trim(t.substr(1, t.size() - 2));
        } else if (current == section && trim(t.substr(0, t.find('='))) == name) {
            return n;
        }
    }
    return 0;
}

}  // namespace

std::string format_number(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

ParticleParams ParticleInputs::build() const {
    std::optional<Polarizabilities> alpha;
    if (alpha_x || alpha_z) {
        if (!(alpha_x && alpha_z)) throw ValidationError("particle.alpha_x and particle.alpha_z go together");
        alpha = Polarizabilities{*alpha_x, *alpha_z};
    }
    return ParticleParams::from_geometry(radius, total_mass, refractive_index, density, alpha_bar, alpha);
}

ExperimentConfig RunConfig::resolve() const {
    ExperimentConfig c = experiment;
    c.scenario = scenario;
    c.setup.particle = particle.build();
    c.setup.prepare();
    c.validate();
    if (output.psd_segment < 16) throw ValidationError("output.psd_segment must be at least 16");
    if (output.bins == 0) throw ValidationError("output.bins must be positive");
    if (output.dir.empty()) throw ValidationError("output.dir must not be empty");
    return c;
}

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> v;
        for (const auto& k : registry()) v.push_back(k.name);
        return v;
    }();
    return names;
}

void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value, int line) {
    const KeyDef* k = find_key(key);
    if (!k) {
        std::string msg = "config";
        if (line > 0) msg += " line " + std::to_string(line);
        throw ParseError(msg + ": unknown key '" + key + "'");
    }
    k->set(cfg, Ctx{key, value, line});
}

std::string get_config_value(const RunConfig& cfg, const std::string& key) {
    const KeyDef* k = find_key(key);
    if (!k) throw ParseError("unknown key '" + key + "'");
    return k->get(cfg);
}

ConfigEntry parse_override(const std::string& text) {
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw ParseError("override '" + text + "' is not key=value");
    ConfigEntry e{trim(text.substr(0, eq)), trim(text.substr(eq + 1)), 0};
    if (!find_key(e.key)) throw ParseError("unknown key '" + e.key + "'");
    return e;
}

// "value   ; note" -> "value"; a comment marker must follow whitespace
static std::string strip_inline_comment(const std::string& v) {
    for (std::size_t i = 1; i < v.size(); ++i) {
        if ((v[i] == ';' || v[i] == '#') && std::isspace(static_cast<unsigned char>(v[i - 1]))) {
            std::size_t end = i;
            while (end > 0 && std::isspace(static_cast<unsigned char>(v[end - 1]))) --end;
            return v.substr(0, end);
        }
    }
    return v;
}

std::vector<ConfigEntry> read_config_entries(const std::string& text) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    std::istringstream in(text);
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ParseError("config line " + std::to_string(e.line()) + ": " + e.message());
    }
    std::vector<ConfigEntry> out;
    for (const auto& [section, body] : tree) {
        if (const int top = line_of(text, "", section); top > 0 && body.empty()) {
            throw ParseError("config line " + std::to_string(top) + ": key '" + section + "' outside a section");
        }
        static const std::vector<std::string> sections = {"particle", "trap",     "feedback", "noise",
                                                          "integrator", "ensemble", "output"};
        if (std::find(sections.begin(), sections.end(), section) == sections.end()) {
            throw ParseError("config: unknown section [" + section + "]");
        }
        for (const auto& [name, node] : body) {
            const std::string key = section + "." + name;
            const int line = line_of(text, section, name);
            if (!find_key(key)) {
                throw ParseError("config line " + std::to_string(line) + ": unknown key '" + key + "'");
            }
            out.push_back({key, strip_inline_comment(node.data()), line});
        }
    }
    return out;
}

std::vector<ConfigEntry> read_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open config file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return read_config_entries(ss.str());
}

void apply_entries(RunConfig& cfg, const std::vector<ConfigEntry>& entries) {
    for (const auto& e : entries) set_config_value(cfg, e.key, e.value, e.line);
}

RunConfig parse_config_string(const std::string& text) {
    RunConfig cfg;
    apply_entries(cfg, read_config_entries(text));
    cfg.validate();
    return cfg;
}

RunConfig parse_config(const std::filesystem::path& path) {
    RunConfig cfg;
    apply_entries(cfg, read_config_file(path));
    cfg.validate();
    return cfg;
}

std::map<std::string, std::string> config_map(const RunConfig& cfg) {
    std::map<std::string, std::string> m;
    for (const auto& k : registry()) m[k.name] = k.get(cfg);
    return m;
}

}  // namespace ndb
