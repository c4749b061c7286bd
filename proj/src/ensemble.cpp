#include "ndb/ensemble.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include <boost/crc.hpp>
#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>
#include <omp.h>

#include "ndb/constants.hpp"
#include "ndb/errors.hpp"

namespace ndb {

namespace {

double mean_of(const std::vector<TrajectorySample>& s, std::size_t from, std::size_t to) {
    double acc = 0.0;
    for (std::size_t i = from; i < to; ++i) acc += s[i].energy_K;
    return acc / static_cast<double>(to - from);
}

// (Omega / 2)(A+^2 + A-^2) at the initial state, the natural size of q24.
double q24_scale(const EulerState& s, const SimulationSetup& setup) {
    const auto f = libration_frequencies(setup.trap, setup.particle);
    const double wc = coupling_frequency(setup.particle, s.omega3);
    const ModeDecomposition freq = normal_modes_elliptical(f.omega_xi(), f.omega_eta(), wc);
    const ModeDecomposition m = project_modes(tip_coordinates(s), freq);
    const double big_omega = m.omega_plus + m.omega_minus;
    return 0.5 * big_omega * (m.A_plus * m.A_plus + m.A_minus * m.A_minus);
}

ExperimentResult finish(const ExperimentConfig& cfg, std::vector<TrajectoryOutcome> outcomes,
                        std::vector<TrajectoryRecord> records, double seconds) {
    ExperimentResult r;
    r.stats = summarize(outcomes);
    r.outcomes = std::move(outcomes);
    r.records = std::move(records);
    r.wall_seconds = seconds;
    if (cfg.n > 0 && static_cast<double>(r.stats.failed) > 0.1 * static_cast<double>(cfg.n)) {
        throw ExperimentFailed(std::to_string(r.stats.failed) + " of " + std::to_string(cfg.n) +
                               " trajectories failed");
    }
    return r;
}

ExperimentConfig prepared(const ExperimentConfig& cfg) {
    ExperimentConfig c = cfg;
    c.setup.prepare();
    c.validate();
    return c;
}

}  // namespace

void ExperimentConfig::validate() const {
    if (n < 1) throw ValidationError("ensemble.n must be >= 1");
    thermal.validate();
}

TrajectoryOutcome run_trajectory(const ExperimentConfig& cfg, std::size_t index, TrajectoryRecord* keep) {
    TrajectoryOutcome out;
    out.index = index;
    Rng rng = make_stream(cfg.master_seed(), index);
    const RotorModel model(cfg.setup.particle, cfg.setup.trap);
    try {
        out.initial = sample_state(cfg.thermal, model, rng, &out.proposals);
    } catch (const Error& e) {
        out.setup_failed = true;
        out.message = e.what();
        return out;
    }
    TrajectoryRecord rec = simulate(cfg.setup, out.initial, rng);
    out.reason = rec.reason;
    out.message = rec.message;
    out.final_state = rec.final_state;
    out.initial_energy_K = rec.initial_energy_K;
    out.final_energy_K = rec.final_energy_K;
    out.steps = rec.steps;
    for (const auto& s : rec.samples) {
        out.max_omega3_drift = std::max(out.max_omega3_drift, std::abs(s.omega3_drift));
    }
    if (rec.samples.size() >= 2) {
        const double scale = q24_scale(out.initial, cfg.setup);
        const double dq = rec.samples.back().q24 - rec.samples.front().q24;
        out.q24_drift = scale > 0.0 ? std::abs(dq) / scale : std::abs(dq);
    }
    if (rec.samples.size() >= 20) {
        const std::size_t n = rec.samples.size();
        const std::size_t w = n / 10;
        const double late = mean_of(rec.samples, n - w, n);
        const double before = mean_of(rec.samples, n - 2 * w, n - w);
        out.late_trend = before > 0.0 ? late / before : 0.0;
    }
    if (cfg.analyze_final_modes && out.ok()) {
        try {
            out.final_modes = analyze_final_window(rec.tail, cfg.setup);
        } catch (const Error& e) {
            out.fit_error = e.what();
        }
    }
    if (keep) {
        *keep = std::move(rec);
    }
    return out;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
    const ExperimentConfig cfg = prepared(config);
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<TrajectoryOutcome> outcomes(cfg.n);
    std::vector<TrajectoryRecord> records(cfg.keep_records ? cfg.n : 0);
    const long n = static_cast<long>(cfg.n);
    const int threads = cfg.threads > 0 ? cfg.threads : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
    for (long i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        outcomes[k] = run_trajectory(cfg, k, cfg.keep_records ? &records[k] : nullptr);
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return finish(cfg, std::move(outcomes), std::move(records), secs);
}

ExperimentResult run_experiment_serial(const ExperimentConfig& config) {
    const ExperimentConfig cfg = prepared(config);
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<TrajectoryOutcome> outcomes(cfg.n);
    std::vector<TrajectoryRecord> records(cfg.keep_records ? cfg.n : 0);
    for (std::size_t k = 0; k < cfg.n; ++k) {
        outcomes[k] = run_trajectory(cfg, k, cfg.keep_records ? &records[k] : nullptr);
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return finish(cfg, std::move(outcomes), std::move(records), secs);
}

Histogram make_histogram(const std::vector<double>& values, std::size_t bins) {
    Histogram h;
    if (values.empty() || bins == 0) {
        return h;
    }
    const double hi = *std::max_element(values.begin(), values.end());
    const double width = hi > 0.0 ? hi * (1.0 + 1e-12) / static_cast<double>(bins) : 1.0;
    h.edges.resize(bins + 1);
    for (std::size_t i = 0; i <= bins; ++i) h.edges[i] = width * static_cast<double>(i);
    h.density.assign(bins, 0.0);
    for (double v : values) {
        const auto k = std::min(bins - 1, static_cast<std::size_t>(std::max(0.0, v) / width));
        h.density[k] += 1.0;
    }
    for (double& d : h.density) d /= static_cast<double>(values.size()) * width;
    return h;
}

EnsembleStats summarize(const std::vector<TrajectoryOutcome>& outcomes, std::size_t bins) {
    EnsembleStats st;
    std::uint64_t proposals = 0, accepted = 0;
    boost::crc_32_type crc;
    for (const auto& o : outcomes) {
        crc.process_bytes(&o.final_energy_K, sizeof(double));
        if (o.setup_failed) {
            ++st.failed;
            continue;
        }
        proposals += o.proposals;
        ++accepted;
        st.initial_energies.push_back(o.initial_energy_K);
        if (o.ok()) {
            ++st.completed;
            st.final_energies.push_back(o.final_energy_K);
        } else if (o.reason == Termination::escaped || o.reason == Termination::singularity) {
            ++st.escaped;  // physics, not an error
        } else {
            ++st.failed;
        }
    }
    st.digest = crc.checksum();
    st.acceptance_rate = proposals > 0 ? static_cast<double>(accepted) / static_cast<double>(proposals) : 0.0;
    const auto& e = st.final_energies;
    if (!st.initial_energies.empty()) {
        st.initial_mean = std::accumulate(st.initial_energies.begin(), st.initial_energies.end(), 0.0) /
                          static_cast<double>(st.initial_energies.size());
    }
    if (!e.empty()) {
        st.mean = std::accumulate(e.begin(), e.end(), 0.0) / static_cast<double>(e.size());
        double ss = 0.0;
        for (double v : e) ss += (v - st.mean) * (v - st.mean);
        if (e.size() > 1) {
            st.sem = std::sqrt(ss / static_cast<double>(e.size() - 1) / static_cast<double>(e.size()));
        }
        st.histogram = make_histogram(e, bins);
        auto attempt = [&](std::optional<double> n) -> std::optional<MaxwellBoltzmannFit> {
            try {
                return fit_maxwell_boltzmann(e, n);
            } catch (const FitDegenerate&) {
                return std::nullopt;
            }
        };
        st.fit_n0 = attempt(0.0);
        st.fit_n1 = attempt(1.0);
        st.fit_free = attempt(std::nullopt);
    }
    return st;
}

MaxwellBoltzmannFit fit_maxwell_boltzmann(const std::vector<double>& energies, std::optional<double> n) {
    if (energies.size() < 100) {
        throw FitDegenerate("Maxwell-Boltzmann fit needs at least 100 energies");
    }
    const double count = static_cast<double>(energies.size());
    double mean = 0.0, log_mean = 0.0;
    for (double v : energies) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw FitDegenerate("Maxwell-Boltzmann fit needs positive finite energies");
        }
        mean += v;
        log_mean += std::log(v);
    }
    mean /= count;
    log_mean /= count;
    double var = 0.0;
    for (double v : energies) var += (v - mean) * (v - mean);
    var /= count;
    if (!(var > 1e-20 * mean * mean)) {
        throw FitDegenerate("energies have near-zero variance");
    }
    double shape = 0.0;
    if (n) {
        shape = *n + 1.0;
    } else {
        // ML gamma shape: ln k - digamma(k) = ln(mean) - <ln x>
        const double s = std::log(mean) - log_mean;
        if (!(s > 0.0)) {
            throw FitDegenerate("log-moment condition violated");
        }
        shape = (3.0 - s + std::sqrt((s - 3.0) * (s - 3.0) + 24.0 * s)) / (12.0 * s);
        for (int it = 0; it < 100; ++it) {
            const double f = std::log(shape) - boost::math::digamma(shape) - s;
            const double df = 1.0 / shape - boost::math::trigamma(shape);
            const double next = shape - f / df;
            const double safe = next > 0.0 ? next : 0.5 * shape;
            if (std::abs(safe - shape) < 1e-14 * shape) {
                shape = safe;
                break;
            }
            shape = safe;
        }
    }
    MaxwellBoltzmannFit fit;
    fit.n = shape - 1.0;
    fit.temperature = mean / shape;
    fit.amplitude = std::exp(-shape * std::log(fit.temperature) - std::lgamma(shape));
    std::vector<double> sorted = energies;
    std::sort(sorted.begin(), sorted.end());
    double d = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const double cdf = boost::math::gamma_p(shape, sorted[i] / fit.temperature);
        d = std::max({d, std::abs(cdf - static_cast<double>(i) / count),
                      std::abs(cdf - static_cast<double>(i + 1) / count)});
    }
    fit.residual = d;
    return fit;
}

ModeDecomposition analyze_final_window(const std::vector<TrajectorySample>& tail, const SimulationSetup& setup) {
    if (tail.size() < 8) {
        throw FitDegenerate("final window has too few samples");
    }
    std::vector<SmallAngleState> tip;
    tip.reserve(tail.size());
    double cos_psi = 0.0;
    for (const auto& s : tail) {
        const SmallAngleState q = tip_coordinates(s.state());
        cos_psi += std::sqrt(std::max(0.0, 1.0 - q.xi * q.xi - q.eta * q.eta));
        tip.push_back(q);
    }
    cos_psi /= static_cast<double>(tail.size());
    const auto f = libration_frequencies(setup.trap, setup.particle);
    const double wc = coupling_frequency(setup.particle, tail.back().y[5]);
    ModeDecomposition freq;
    if (setup.trap.ellipticity == 0.0) {
        freq = normal_modes_elliptical(f.omega(), f.omega(), wc / cos_psi);
    } else {
        freq = normal_modes_elliptical(f.omega_xi(), f.omega_eta(), wc);
    }
    return fit_modes(tip, freq);
}

std::vector<SweepPoint> theta_sweep(const ExperimentConfig& base, const std::vector<double>& thetas, std::size_t n) {
    std::vector<SweepPoint> out;
    for (double theta : thetas) {
        ExperimentConfig cfg = base;
        cfg.setup.trap.ellipticity = theta;
        cfg.n = n;
        const ExperimentResult r = run_experiment(cfg);
        out.push_back({theta, r.stats.mean, r.stats.sem, r.stats.completed});
    }
    return out;
}

TrajectoryRecord staged_chi_run(const ExperimentConfig& config) {
    const ExperimentConfig cfg = prepared(config);
    TrajectoryRecord rec;
    const TrajectoryOutcome o = run_trajectory(cfg, 0, &rec);
    if (o.setup_failed) {
        throw ExperimentFailed("initial state could not be sampled: " + o.message);
    }
    return rec;
}

}  // namespace ndb
