#include "ndb/scenarios.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <random>
#include <sstream>

#include <boost/crc.hpp>

#include "ndb/constants.hpp"

#ifndef NDB_VERSION
#define NDB_VERSION "0.0.0"
#endif
#ifndef NDB_GIT_REVISION
#define NDB_GIT_REVISION "unknown"
#endif

namespace ndb {

using nlohmann::json;
using std::numbers::pi;

namespace {

constexpr double kFigWindow = 2e-3;  // PSD window length

std::string num(double v) { return format_number(v); }

std::string hex32(std::uint32_t v) {
    std::ostringstream os;
    os << std::hex << std::setw(8) << std::setfill('0') << v;
    return os.str();
}

// Ensemble runs are compared at DP 1e-8; single trajectories too unless noted.
void ensemble_integrator(RunConfig& c) {
    c.experiment.setup.integrator.method = StepMethod::dormand_prince;
    c.experiment.setup.integrator.rel_tol = 1e-8;
}

double thermal_omega_c(const ExperimentConfig& e) {
    const double w3 = std::sqrt(constants::boltzmann * e.thermal.temperature / e.setup.particle.inertia_z);
    return coupling_frequency(e.setup.particle, w3);
}

std::pair<TrajectoryOutcome, TrajectoryRecord> single(const ExperimentConfig& e) {
    TrajectoryRecord rec;
    TrajectoryOutcome o = run_trajectory(e, 0, &rec);
    if (o.setup_failed) throw ExperimentFailed("initial state could not be sampled: " + o.message);
    if (!o.ok()) throw ExperimentFailed("trajectory ended early: " + o.message);
    return {std::move(o), std::move(rec)};
}

double gain(const RunConfig& cfg, const ExperimentConfig& e) {
    return cfg.output.gouy ? gouy_attenuation(e.setup.particle, e.setup.trap) : 1.0;
}

std::string tip_csv(const std::vector<TrajectorySample>& s) {
    std::ostringstream os;
    os << "t_s,Y_over_2R,Z_over_2R,xi,eta,eps_K\r\n";
    for (const auto& x : s) {
        const EulerState st = x.state();
        const SmallAngleState q = tip_coordinates(st);
        os << num(x.t) << ',' << num(std::sin(st.beta) * std::sin(st.alpha)) << ',' << num(std::cos(st.beta)) << ','
           << num(q.xi) << ',' << num(q.eta) << ',' << num(x.energy_K) << "\r\n";
    }
    return os.str();
}

std::string energy_csv(const std::vector<TrajectorySample>& s, const FeedbackConfig& fb) {
    std::ostringstream os;
    os << "t_s,eps_K,chi\r\n";
    for (const auto& x : s) os << num(x.t) << ',' << num(x.energy_K) << ',' << num(chi_at(x.t, fb)) << "\r\n";
    return os.str();
}

std::string outcomes_csv(const std::vector<TrajectoryOutcome>& outs) {
    std::ostringstream os;
    os << "index,status,initial_K,final_K,late_trend,q24_drift,amplitude_ratio\r\n";
    for (const auto& o : outs) {
        os << o.index << ',' << (o.setup_failed ? "setup_failed" : to_string(o.reason)) << ','
           << num(o.initial_energy_K) << ',' << num(o.final_energy_K) << ',' << num(o.late_trend) << ','
           << num(o.q24_drift) << ',';
        if (o.final_modes) os << num(o.final_modes->amplitude_ratio());
        os << "\r\n";
    }
    return os.str();
}

json peaks_json(const std::vector<Peak>& peaks) {
    json a = json::array();
    for (const auto& p : peaks) {
        a.push_back({{"f_Hz", p.frequency_hz},
                     {"omega_rad_s", 2 * pi * p.frequency_hz},
                     {"height", p.height},
                     {"width_Hz", p.width_hz}});
    }
    return a;
}

json modes_json(const ModeDecomposition& m) {
    return {{"omega_plus", m.omega_plus}, {"omega_minus", m.omega_minus}, {"A_plus", m.A_plus},
            {"A_minus", m.A_minus},       {"kappa1", m.kappa1},           {"kappa2", m.kappa2},
            {"amplitude_ratio", m.amplitude_ratio()}};
}

// Ensemble statistics plus the automatic check of the initial ensemble.
json ensemble_json(const ExperimentConfig& e, const ExperimentResult& r) {
    const EnsembleStats& s = r.stats;
    json j = {{"n", e.n},
              {"completed", s.completed},
              {"escaped", s.escaped},
              {"failed", s.failed},
              {"mean_K", s.mean},
              {"sem_K", s.sem},
              {"initial_mean_K", s.initial_mean},
              {"acceptance_rate", s.acceptance_rate},
              {"digest", hex32(s.digest)},
              {"trajectory_seconds", r.wall_seconds}};
    json fits = json::object();
    if (s.fit_n0) fits["n0"] = fit_json(*s.fit_n0);
    if (s.fit_n1) fits["n1"] = fit_json(*s.fit_n1);
    if (s.fit_free) fits["free"] = fit_json(*s.fit_free);
    j["fits"] = fits;

    const double two_t = 2.0 * e.thermal.temperature;
    const double n = static_cast<double>(s.initial_energies.size());
    const double sem = n > 0 ? std::sqrt(2.0) * e.thermal.temperature / std::sqrt(n) : 0.0;
    json init = {{"mean_K", s.initial_mean}, {"expected_K", two_t}, {"sem_K", sem}};
    // 5% at desk scale, never tighter than 3 SEM for small ensembles
    init["pass"] = std::abs(s.initial_mean - two_t) <= std::max(0.05 * two_t, 3.0 * sem);
    try {
        const auto f1 = fit_maxwell_boltzmann(s.initial_energies, 1.0);
        init["fit_n1"] = fit_json(f1);
    } catch (const FitDegenerate& err) {
        init["fit_n1_error"] = err.what();
    }
    j["initial_check"] = init;
    return j;
}

void add_ensemble_files(ScenarioResult& out, const RunConfig& cfg, const ExperimentResult& r) {
    out.files.push_back({"histogram.csv", histogram_csv(r.stats.histogram)});
    Histogram init = make_histogram(r.stats.initial_energies, cfg.output.bins);
    out.files.push_back({"initial_histogram.csv", histogram_csv(init)});
    out.files.push_back({"trajectories.csv", outcomes_csv(r.outcomes)});
}

ExperimentResult run_ensemble(const ExperimentConfig& e, std::size_t bins) {
    ExperimentResult r = run_experiment(e);
    if (bins != 40) {
        std::vector<TrajectoryOutcome> outs = r.outcomes;
        const double w = r.wall_seconds;
        r.stats = summarize(outs, bins);
        r.wall_seconds = w;
    }
    return r;
}

ScenarioResult fig2a(const RunConfig& cfg) {
    const ExperimentConfig e = cfg.resolve();
    auto [o, rec] = single(e);
    ScenarioResult out;
    out.files.push_back({"trajectory.csv", tip_csv(rec.tail)});
    const PsdResult psd = estimate_psd(detector_series(rec.tail, gain(cfg, e)), e.setup.tail_dt, cfg.output.psd_segment);
    out.files.push_back({"psd.csv", psd_csv(psd)});
    const double w = libration_frequencies(e.setup.trap, e.setup.particle).omega();
    const double wc = coupling_frequency(e.setup.particle, o.initial.omega3);
    const LinearModes lm = normal_modes_linear(w, wc);
    out.summary["omega3"] = o.initial.omega3;
    out.summary["omega_c"] = wc;
    out.summary["analytic"] = {{"omega_plus", lm.omega_plus}, {"omega_minus", lm.omega_minus}};
    out.summary["initial_eps_K"] = o.initial_energy_K;
    const double band_lo = 0.8 * lm.omega_minus / (2 * pi), band_hi = 1.2 * lm.omega_plus / (2 * pi);
    try {
        auto peaks = find_peaks(psd, 2, std::make_pair(band_lo, band_hi));
        out.summary["peaks"] = peaks_json(peaks);
        if (peaks.size() == 2) {
            std::sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) { return a.frequency_hz > b.frequency_hz; });
            out.summary["peak_error_plus"] = 2 * pi * peaks[0].frequency_hz / lm.omega_plus - 1.0;
            out.summary["peak_error_minus"] = 2 * pi * peaks[1].frequency_hz / lm.omega_minus - 1.0;
        }
    } catch (const PeaksNotFound& err) {
        out.summary["peaks_error"] = err.what();
    }
    return out;
}

ScenarioResult fig2b(const RunConfig& cfg) {
    const ExperimentConfig e = cfg.resolve();
    auto [o, rec] = single(e);
    ScenarioResult out;
    out.files.push_back({"trajectory_final.csv", tip_csv(rec.tail)});
    out.files.push_back({"energy.csv", energy_csv(rec.samples, e.setup.feedback)});
    out.summary["initial_eps_K"] = o.initial_energy_K;
    out.summary["final_eps_K"] = o.final_energy_K;
    out.summary["q24_drift"] = o.q24_drift;
    if (o.final_modes) out.summary["final_modes"] = modes_json(*o.final_modes);
    if (!o.fit_error.empty()) out.summary["fit_error"] = o.fit_error;
    return out;
}

ScenarioResult ensemble_scenario(const RunConfig& cfg) {
    const ExperimentConfig e = cfg.resolve();
    const ExperimentResult r = run_ensemble(e, cfg.output.bins);
    ScenarioResult out;
    out.summary = ensemble_json(e, r);
    if (e.analyze_final_modes) {
        std::size_t fitted = 0, single_mode = 0;
        double worst_q24 = 0.0;
        for (const auto& o : r.outcomes) {
            if (!o.ok()) continue;
            worst_q24 = std::max(worst_q24, o.q24_drift);
            if (o.final_modes) {
                ++fitted;
                single_mode += o.final_modes->amplitude_ratio() < 1e-3;
            }
        }
        out.summary["final_modes"] = {{"fitted", fitted},
                                      {"ratio_below_1e-3", single_mode},
                                      {"fraction", r.stats.completed ? double(single_mode) / double(r.stats.completed) : 0.0},
                                      {"max_q24_drift", worst_q24}};
    }
    std::size_t rising = 0;
    // an escape is the end point of a rising energy
    for (const auto& o : r.outcomes) {
        const bool escaped = o.reason == Termination::escaped || o.reason == Termination::singularity;
        rising += !o.setup_failed && (escaped || (o.ok() && o.late_trend > 1.0));
    }
    out.summary["late_trend_rising"] = rising;
    add_ensemble_files(out, cfg, r);
    return out;
}

ScenarioResult fig4a(const RunConfig& cfg) {
    const ExperimentConfig e = cfg.resolve();
    auto [o, rec] = single(e);
    // constant-chi reference over the schedule and one ms past it
    ExperimentConfig fixed = e;
    fixed.setup.feedback.schedule.clear();
    double t_last = 0.0;
    for (const auto& step : e.setup.feedback.schedule) t_last = std::max(t_last, step.t_start);
    fixed.setup.duration = std::min(e.setup.duration, t_last + 2e-3);
    auto [of, recf] = single(fixed);

    // full resolution through the schedule, thinned to 1 ms afterwards
    std::vector<TrajectorySample> trace;
    for (const auto& x : rec.samples) {
        const double k = x.t / 1e-3;
        if (x.t <= t_last + 2e-3 || std::abs(k - std::round(k)) < 1e-6 || &x == &rec.samples.back()) trace.push_back(x);
    }
    ScenarioResult out;
    out.files.push_back({"energy.csv", energy_csv(trace, e.setup.feedback)});
    out.files.push_back({"energy_fixed_chi.csv", energy_csv(recf.samples, fixed.setup.feedback)});
    double min_eps = o.initial_energy_K;
    for (const auto& s : rec.samples) min_eps = std::min(min_eps, s.energy_K);
    out.summary["initial_eps_K"] = o.initial_energy_K;
    out.summary["final_eps_K"] = o.final_energy_K;
    out.summary["min_eps_K"] = min_eps;
    out.summary["final_eps_fixed_chi_K"] = of.final_energy_K;
    out.summary["fixed_chi_duration_s"] = fixed.setup.duration;
    double t_reach = -1.0;
    for (const auto& x : rec.samples) {
        if (x.energy_K <= 1e-6) {
            t_reach = x.t;
            break;
        }
    }
    out.summary["t_reach_1e-6_K_s"] = t_reach;

    json bounds = json::array();
    const double w = 0.5e-3;
    auto window_mean = [](const std::vector<TrajectorySample>& s, double t0, double t1) {
        double acc = 0.0;
        int n = 0;
        for (const auto& x : s) {
            if (x.t >= t0 && x.t < t1) {
                acc += x.energy_K;
                ++n;
            }
        }
        return n ? acc / n : 0.0;
    };
    for (const auto& step : e.setup.feedback.schedule) {
        const double tb = step.t_start;
        if (tb - w < 0.0 || tb + w > e.setup.duration) continue;
        const double before = log_decay_rate(rec.samples, tb - w, tb);
        const double after = log_decay_rate(rec.samples, tb, tb + w);
        const double t_cmp = std::min(tb + 1e-3, e.setup.duration);
        bounds.push_back({{"t_s", tb},
                          {"chi", chi_at(tb, e.setup.feedback)},
                          {"rate_before", before},
                          {"rate_after", after},
                          {"eps_staged_K", window_mean(rec.samples, t_cmp - 1e-4, t_cmp)},
                          {"eps_fixed_K", window_mean(recf.samples, t_cmp - 1e-4, t_cmp)}});
    }
    out.summary["boundaries"] = bounds;
    return out;
}

ScenarioResult fig4b(const RunConfig& cfg) {
    const ExperimentConfig e = cfg.resolve();
    std::vector<double> thetas;
    for (int k = 0; k < 8; ++k) thetas.push_back(k * pi / 32);
    const auto pts = theta_sweep(e, thetas, e.n);
    ScenarioResult out;
    std::ostringstream os;
    os << "k,theta,mean_K,sem_K,completed\r\n";
    json arr = json::array();
    for (std::size_t k = 0; k < pts.size(); ++k) {
        os << k << ',' << num(pts[k].theta) << ',' << num(pts[k].mean) << ',' << num(pts[k].sem) << ','
           << pts[k].completed << "\r\n";
        arr.push_back({{"theta", pts[k].theta}, {"mean_K", pts[k].mean}, {"sem_K", pts[k].sem},
                       {"completed", pts[k].completed}});
    }
    out.files.push_back({"sweep.csv", os.str()});
    out.summary["points"] = arr;
    return out;
}

// PSD windows: the first and last for fig5a, a spread for fig5b.
std::vector<std::pair<double, double>> fig5_windows(const RunConfig& cfg) {
    const double d = cfg.experiment.setup.duration;
    std::vector<double> starts = {0.0};
    if (cfg.scenario == "fig5b") {
        for (double f : {1.0 / 16, 1.0 / 8, 1.0 / 4, 1.0 / 2}) starts.push_back(f * d);
    }
    std::vector<std::pair<double, double>> w;
    for (double s : starts) {
        if (s + kFigWindow <= d - kFigWindow) w.emplace_back(s, s + kFigWindow);
    }
    return w;
}

ScenarioResult fig5(const RunConfig& cfg) {
    RunConfig c = cfg;
    c.experiment.setup.dense_windows = fig5_windows(cfg);
    c.experiment.setup.tail_duration = kFigWindow;
    const ExperimentConfig e = c.resolve();
    auto [o, rec] = single(e);
    auto windows = rec.windows;
    windows.push_back(rec.tail);
    std::vector<double> starts;
    for (const auto& w : e.setup.dense_windows) starts.push_back(w.first);
    starts.push_back(e.setup.duration - e.setup.tail_duration);

    const auto f = libration_frequencies(e.setup.trap, e.setup.particle);
    const double wc = coupling_frequency(e.setup.particle, o.initial.omega3);
    const ModeDecomposition nm = normal_modes_elliptical(f.omega_xi(), f.omega_eta(), wc);

    ScenarioResult out;
    out.summary["omega3"] = o.initial.omega3;
    out.summary["omega_c"] = wc;
    out.summary["analytic"] = {{"omega_plus", nm.omega_plus}, {"omega_minus", nm.omega_minus}};
    out.summary["initial_eps_K"] = o.initial_energy_K;
    out.summary["final_eps_K"] = o.final_energy_K;
    json arr = json::array();
    for (std::size_t k = 0; k < windows.size(); ++k) {
        const PsdResult psd = estimate_psd(detector_series(windows[k], gain(cfg, e)), e.setup.tail_dt, cfg.output.psd_segment);
        const std::string name = cfg.scenario == "fig5a" ? (k == 0 ? "psd_before.csv" : "psd_after.csv")
                                                          : "psd_window" + std::to_string(k) + ".csv";
        out.files.push_back({name, psd_csv(psd)});
        const ModePeakHeights h = mode_peak_heights(psd, nm.omega_minus, nm.omega_plus);
        const auto surv = surviving_peaks(psd, f.omega(), 1e-2);
        double mean_eps = 0.0;
        for (const auto& s : windows[k]) mean_eps += s.energy_K;
        mean_eps /= std::max<std::size_t>(1, windows[k].size());
        arr.push_back({{"file", name},
                       {"t_start_s", starts[k]},
                       {"mean_eps_K", mean_eps},
                       {"height_minus", h.minus},
                       {"height_plus", h.plus},
                       {"omega_minus_peak", h.omega_minus},
                       {"omega_plus_peak", h.omega_plus},
                       {"surviving_peaks", peaks_json(surv)}});
    }
    out.summary["windows"] = arr;
    return out;
}

ScenarioResult validate_scenario(const RunConfig& cfg) {
    const auto checks = invariant_checks(cfg);
    ScenarioResult out;
    std::ostringstream os;
    os << "check,value,limit,pass\r\n";
    json arr = json::array();
    for (const auto& c : checks) {
        os << c.name << ',' << num(c.value) << ',' << num(c.limit) << ',' << (c.pass ? "true" : "false") << "\r\n";
        arr.push_back({{"check", c.name}, {"value", c.value}, {"limit", c.limit}, {"pass", c.pass}});
        out.checks_passed = out.checks_passed && c.pass;
    }
    out.files.push_back({"checks.csv", os.str()});
    out.summary["checks"] = arr;
    out.summary["all_pass"] = out.checks_passed;
    return out;
}

}  // namespace

const std::vector<std::string>& scenario_names() {
    static const std::vector<std::string> names = {"fig2a", "fig2b", "fig3b", "fig3c", "fig3d",
                                                   "fig4a", "fig4b", "fig5a", "fig5b", "validate"};
    return names;
}

RunConfig scenario_config(const std::string& name) {
    const auto& names = scenario_names();
    if (std::find(names.begin(), names.end(), name) == names.end()) {
        throw UnknownScenario("unknown scenario '" + name + "'");
    }
    RunConfig c;
    c.scenario = name;
    auto& s = c.experiment.setup;
    s.feedback.signal = FeedbackSignal::sum;
    s.feedback.chi = 1e7;
    s.duration = 80e-3;
    if (name == "validate") {
        // thermal amplitudes need this to hold K + U to 1e-8 over 1 ms
        s.integrator.rel_tol = 1e-12;
        s.integrator.abs_tol = 1e-15;
        return c;
    }
    ensemble_integrator(c);
    if (name == "fig2a") {
        s.feedback.signal = FeedbackSignal::off;
        s.duration = 2e-3;
        s.tail_duration = 2e-3;
        c.experiment.n = 1;
    } else if (name == "fig2b") {
        s.tail_duration = 2e-4;
        c.experiment.n = 1;
        c.experiment.analyze_final_modes = true;
    } else if (name == "fig3b") {
        s.duration = 0.0;
        c.experiment.n = 1000;
    } else if (name == "fig3c") {
        s.tail_duration = 2e-4;
        c.experiment.n = 500;
        c.experiment.analyze_final_modes = true;
    } else if (name == "fig3d") {
        s.trap.ellipticity = 4 * pi / 32;
        c.experiment.n = 200;
    } else if (name == "fig4a") {
        s.trap.ellipticity = 4 * pi / 32;
        s.feedback.schedule = FeedbackConfig::staged_schedule();
        // at 1e12 the energy falls only as 1/t: ~4 s to reach 1e-6 K
        s.duration = 4.5;
        s.integrator.rel_tol = 1e-9;
        s.integrator.abs_tol = 1e-13;
        c.experiment.n = 1;
    } else if (name == "fig4b") {
        c.experiment.n = 200;
    } else if (name == "fig5a") {
        c.experiment.n = 1;
    } else if (name == "fig5b") {
        s.trap.ellipticity = 4 * pi / 32;
        c.experiment.n = 1;
    }
    return c;
}

ScenarioResult run_scenario(const RunConfig& cfg) {
    const std::string& name = cfg.scenario;
    ScenarioResult r;
    if (name == "fig2a") r = fig2a(cfg);
    else if (name == "fig2b") r = fig2b(cfg);
    else if (name == "fig3b" || name == "fig3c" || name == "fig3d") r = ensemble_scenario(cfg);
    else if (name == "fig4a") r = fig4a(cfg);
    else if (name == "fig4b") r = fig4b(cfg);
    else if (name == "fig5a" || name == "fig5b") r = fig5(cfg);
    else if (name == "validate") r = validate_scenario(cfg);
    else throw UnknownScenario("unknown scenario '" + name + "'");
    r.scenario = name;
    return r;
}

json derived_quantities(const ExperimentConfig& e) {
    const auto& p = e.setup.particle;
    const auto& t = e.setup.trap;
    const auto f = libration_frequencies(t, p);
    const RotorModel m(p, t);
    const double wc = thermal_omega_c(e);
    const LinearModes lin = normal_modes_linear(f.omega(), wc);
    json d = {{"E0_V_per_m", t.field_amplitude},
              {"omega", f.omega()},
              {"omega_xi", f.omega_xi()},
              {"omega_eta", f.omega_eta()},
              {"omega_eta_over_omega_xi", f.omega_eta() / f.omega_xi()},
              {"inertia_x", p.inertia_x},
              {"inertia_z", p.inertia_z},
              {"alpha_x", p.polarizability_x},
              {"alpha_z", p.polarizability_z},
              {"depth_K", m.depth / constants::boltzmann},
              {"barrier_K", barrier_kelvin(m)},
              {"omega_c_thermal", wc},
              {"z_d_over_z_R", axial_displacement_ratio(p, t)},
              {"linear_modes_thermal", {{"omega_plus", lin.omega_plus}, {"omega_minus", lin.omega_minus}}}};
    try {
        const ModeDecomposition em = normal_modes_elliptical(f.omega_xi(), f.omega_eta(), wc);
        d["elliptical_modes_thermal"] = {{"omega_plus", em.omega_plus}, {"omega_minus", em.omega_minus},
                                         {"kappa1", em.kappa1},         {"kappa2", em.kappa2},
                                         {"Q", em.Q}};
        const CoolingCoefficients cc =
            cooling_coefficients({f.omega_xi(), f.omega_eta(), wc, e.setup.feedback.chi, p.radius, p.inertia_x});
        d["cooling_coefficients"] = {{"y1", cc.y1}, {"y2", cc.y2}, {"y3", cc.y3},
                                     {"z1", cc.z1}, {"z2", cc.z2}, {"z3", cc.z3}};
    } catch (const Error& err) {
        d["elliptical_modes_error"] = err.what();
    }
    return d;
}

std::string crc32_hex(const std::string& data) {
    boost::crc_32_type crc;
    crc.process_bytes(data.data(), data.size());
    return hex32(crc.checksum());
}

std::string code_version() { return std::string(NDB_VERSION) + "+" + NDB_GIT_REVISION; }

json make_manifest(const RunConfig& cfg, const ScenarioResult& result, double wall_seconds) {
    json m;
    m["scenario"] = result.scenario;
    m["code_version"] = code_version();
    const std::time_t now = std::time(nullptr);
    std::ostringstream ts;
    ts << std::put_time(std::gmtime(&now), "%Y-%m-%dT%H:%M:%SZ");
    m["created_utc"] = ts.str();
    m["seeds"] = {{"master", cfg.experiment.thermal.seed}, {"streams", "per trajectory index"}};
    json conf = json::object();
    for (const auto& [k, v] : config_map(cfg)) conf[k] = v;
    m["config"] = conf;
    try {
        m["derived"] = derived_quantities(cfg.resolve());
    } catch (const Error& err) {
        m["derived_error"] = err.what();
    }
    m["summary"] = result.summary;
    json outs = json::array();
    for (const auto& f : result.files) {
        outs.push_back({{"file", f.name}, {"crc32", crc32_hex(f.content)}, {"bytes", f.content.size()}});
    }
    m["outputs"] = outs;
    m["wall_clock_s"] = wall_seconds;
    m["checks_passed"] = result.checks_passed;
    return m;
}

std::filesystem::path write_run(const RunConfig& cfg, const ScenarioResult& result, double wall_seconds) {
    namespace fs = std::filesystem;
    const std::time_t now = std::time(nullptr);
    std::ostringstream ts;
    ts << std::put_time(std::gmtime(&now), "%Y%m%dT%H%M%SZ");
    const fs::path base = fs::path(cfg.output.dir) / result.scenario;
    fs::path dir = base / ts.str();
    for (int k = 1; fs::exists(dir); ++k) dir = base / (ts.str() + "-" + std::to_string(k));
    fs::create_directories(dir);
    for (const auto& f : result.files) {
        std::ofstream os(dir / f.name, std::ios::binary);
        os << f.content;
        if (!os) throw Error("cannot write " + (dir / f.name).string());
    }
    std::ofstream mf(dir / "manifest.json");
    mf << make_manifest(cfg, result, wall_seconds).dump(2) << "\n";
    if (!mf) throw Error("cannot write manifest in " + dir.string());
    return dir;
}

RunConfig config_from_manifest(const json& manifest) {
    if (!manifest.contains("scenario") || !manifest.contains("config")) {
        throw ParseError("manifest lacks scenario or config");
    }
    RunConfig c = scenario_config(manifest.at("scenario").get<std::string>());
    for (const auto& [k, v] : manifest.at("config").items()) set_config_value(c, k, v.get<std::string>());
    return c;
}

std::vector<std::string> compare_checksums(const json& manifest, const ScenarioResult& rerun) {
    std::vector<std::string> bad;
    std::map<std::string, std::string> fresh;
    for (const auto& f : rerun.files) fresh[f.name] = crc32_hex(f.content);
    for (const auto& o : manifest.at("outputs")) {
        const std::string name = o.at("file").get<std::string>();
        const auto it = fresh.find(name);
        if (it == fresh.end() || it->second != o.at("crc32").get<std::string>()) bad.push_back(name);
    }
    if (fresh.size() != manifest.at("outputs").size()) bad.push_back("(file count)");
    return bad;
}

std::vector<Check> invariant_checks(const RunConfig& cfg) {
    std::vector<Check> out;
    auto add = [&](std::string name, double value, double limit) {
        out.push_back({std::move(name), value, limit, value <= limit});
    };
    const ExperimentConfig base = cfg.resolve();
    const auto& p = base.setup.particle;
    const RotorModel model(p, base.setup.trap);

    // analytic gradient vs central differences
    {
        std::mt19937_64 rng(base.thermal.seed);
        std::uniform_real_distribution<double> ua(-pi, pi), ub(0.05, pi - 0.05);
        double worst = 0.0;
        const double h = 1e-6;
        for (int i = 0; i < 500; ++i) {
            const double a = ua(rng), b = ub(rng);
            const PotentialGradient g = model.gradient(a, b);
            const double fa = (model.potential(a + h, b) - model.potential(a - h, b)) / (2 * h);
            const double fb = (model.potential(a, b + h) - model.potential(a, b - h)) / (2 * h);
            const double scale = std::max({std::abs(g.d_alpha), std::abs(g.d_beta), 1e-3 * model.depth});
            worst = std::max({worst, std::abs(g.d_alpha - fa) / scale, std::abs(g.d_beta - fb) / scale});
        }
        add("gradient_vs_finite_difference", worst, 1e-6);
    }

    // noiseless free rotor, 1 ms at the default integrator
    {
        ExperimentConfig e = base;
        e.setup.feedback.signal = FeedbackSignal::off;
        e.setup.noise = NoiseConfig{};
        e.setup.duration = 1e-3;
        e.setup.tail_duration = 0.0;
        e.setup.dense_windows.clear();
        e.setup.integrator = base.setup.integrator;
        TrajectoryRecord rec;
        const TrajectoryOutcome o = run_trajectory(e, 0, &rec);
        double w3 = 0.0, en = 0.0;
        for (const auto& s : rec.samples) {
            w3 = std::max(w3, std::abs(s.omega3_drift));
            en = std::max(en, std::abs(s.energy_drift));
        }
        add("free_omega3_drift", o.ok() ? w3 : 1.0, 1e-8);
        add("free_energy_drift", o.ok() ? en : 1.0, 1e-8);
    }

    // linear polarization with feedback keeps the precession quantity
    {
        ExperimentConfig e = base;
        e.setup.trap.ellipticity = 0.0;
        e.setup.feedback.signal = FeedbackSignal::sum;
        e.setup.feedback.chi = 1e9;
        e.setup.feedback.schedule.clear();
        e.setup.feedback.measurement_noise = 0.0;
        e.setup.noise = NoiseConfig{};
        e.setup.duration = 1e-3;
        e.setup.tail_duration = 0.0;
        e.setup.dense_windows.clear();
        e.setup.integrator = base.setup.integrator;
        e.setup.prepare();
        const TrajectoryOutcome o = run_trajectory(e, 0);
        add("feedback_q24_drift", o.ok() ? o.q24_drift : 1.0, 1e-8);
        add("feedback_cools", o.ok() && o.final_energy_K < o.initial_energy_K ? 0.0 : 1.0, 0.0);
    }

    // worker count does not change results
    {
        ExperimentConfig e = base;
        e.n = 4;
        e.setup.duration = 2e-4;
        e.setup.tail_duration = 0.0;
        e.setup.dense_windows.clear();
        e.threads = 1;
        const auto a = run_experiment_serial(e);
        e.threads = 3;
        const auto b = run_experiment(e);
        add("digest_serial_vs_parallel", a.stats.digest == b.stats.digest ? 0.0 : 1.0, 0.0);
    }

    // initial ensemble: four quadratic degrees of freedom
    {
        ExperimentConfig e = base;
        e.n = 1000;
        e.setup.duration = 0.0;
        e.setup.tail_duration = 0.0;
        e.setup.dense_windows.clear();
        const auto r = run_experiment(e);
        const double t = e.thermal.temperature;
        add("thermal_mean_vs_2T", std::abs(r.stats.initial_mean / (2 * t) - 1.0), 0.05);
        const auto f1 = fit_maxwell_boltzmann(r.stats.initial_energies, 1.0);
        add("thermal_fit_n1_T", std::abs(f1.temperature / t - 1.0), 0.05);
    }

    // scalars of the default particle
    {
        const auto dflt = ParticleParams::paper_default();
        TrapParams trap;
        trap = resolve_field(trap, dflt);
        add("inertia_x_vs_1.041e-31", std::abs(dflt.inertia_x / 1.041e-31 - 1.0), 0.005);
        add("inertia_z_vs_2.974e-32", std::abs(dflt.inertia_z / 2.974e-32 - 1.0), 0.005);
        add("zd_over_zR_vs_0.159", std::abs(axial_displacement_ratio(dflt, trap) / 0.159 - 1.0), 0.2);
        const double w3 = std::sqrt(constants::boltzmann * 300.0 / dflt.inertia_z);
        add("thermal_omega_c_vs_1.1e5", std::abs(coupling_frequency(dflt, w3) / 1.1e5 - 1.0), 0.1);
        add("omega_vs_2.19e6", std::abs(libration_frequencies(trap, dflt).omega() / 2.19e6 - 1.0), 1e-9);
    }
    return out;
}

std::vector<double> detector_series(const std::vector<TrajectorySample>& window, double g) {
    std::vector<double> x;
    x.reserve(window.size());
    for (const auto& s : window) x.push_back(g * signal_p45(s.state()));
    return x;
}

ModePeakHeights mode_peak_heights(const PsdResult& psd, double omega_minus, double omega_plus) {
    ModePeakHeights h;
    const double mid = 0.5 * (omega_minus + omega_plus);
    const double pad = std::max(omega_plus - omega_minus, 0.02 * omega_plus);
    for (std::size_t k = 0; k < psd.psd.size(); ++k) {
        const double w = 2 * pi * psd.frequency_hz[k];
        if (w >= omega_minus - pad && w < mid && psd.psd[k] > h.minus) {
            h.minus = psd.psd[k];
            h.omega_minus = w;
        } else if (w >= mid && w <= omega_plus + pad && psd.psd[k] > h.plus) {
            h.plus = psd.psd[k];
            h.omega_plus = w;
        }
    }
    return h;
}

std::vector<Peak> surviving_peaks(const PsdResult& psd, double omega, double fraction) {
    const double f = omega / (2 * pi);
    auto peaks = local_peaks(psd, std::make_pair(0.8 * f, 1.2 * f));
    if (peaks.empty()) return peaks;
    const double top = peaks.front().height;
    std::erase_if(peaks, [&](const Peak& p) { return p.height < fraction * top; });
    return peaks;
}

double log_decay_rate(const std::vector<TrajectorySample>& samples, double t0, double t1) {
    double st = 0, sy = 0, stt = 0, sty = 0;
    int n = 0;
    for (const auto& s : samples) {
        if (s.t < t0 || s.t >= t1 || !(s.energy_K > 0.0)) continue;
        const double y = std::log(s.energy_K);
        st += s.t;
        sy += y;
        stt += s.t * s.t;
        sty += s.t * y;
        ++n;
    }
    if (n < 3) throw InsufficientData("fewer than three energy samples in the window");
    const double den = n * stt - st * st;
    return -(n * sty - st * sy) / den;
}

std::string psd_csv(const PsdResult& psd) {
    std::ostringstream os;
    os << "f_Hz,omega_rad_s,psd\r\n";
    for (std::size_t k = 0; k < psd.psd.size(); ++k) {
        os << num(psd.frequency_hz[k]) << ',' << num(2 * pi * psd.frequency_hz[k]) << ',' << num(psd.psd[k]) << "\r\n";
    }
    return os.str();
}

std::string histogram_csv(const Histogram& h) {
    std::ostringstream os;
    os << "eps_lo_K,eps_hi_K,density_per_K\r\n";
    for (std::size_t k = 0; k < h.density.size(); ++k) {
        os << num(h.edges[k]) << ',' << num(h.edges[k + 1]) << ',' << num(h.density[k]) << "\r\n";
    }
    return os.str();
}

json fit_json(const MaxwellBoltzmannFit& f) {
    return {{"n", f.n}, {"temperature_K", f.temperature}, {"amplitude", f.amplitude}, {"residual", f.residual}};
}

}  // namespace ndb
