#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ndb/analytics.hpp"
#include "ndb/simulation.hpp"
#include "ndb/thermal.hpp"

namespace ndb {

struct ExperimentConfig {
    SimulationSetup setup;
    ThermalConfig thermal;
    std::size_t n = 1000;
    std::string scenario = "custom";
    bool keep_records = false;
    // Fit the final tail window to a normal-mode pair (needs tail samples).
    bool analyze_final_modes = false;
    int threads = 0;  // 0: OpenMP default

    std::uint64_t master_seed() const { return thermal.seed; }
    void validate() const;
};

struct TrajectoryOutcome {
    std::size_t index = 0;
    Termination reason = Termination::completed;
    std::string message;
    EulerState initial;
    EulerState final_state;
    double initial_energy_K = 0.0;
    double final_energy_K = 0.0;
    std::uint64_t proposals = 0;
    std::uint64_t steps = 0;
    double max_omega3_drift = 0.0;
    double q24_drift = 0.0;        // |q24(end) - q24(0)| relative to the initial mode scale
    double late_trend = 0.0;       // mean eps over last 10% / mean over the 10% before
    std::optional<ModeDecomposition> final_modes;
    std::string fit_error;
    bool setup_failed = false;  // initial-state sampling threw

    bool ok() const { return !setup_failed && reason == Termination::completed; }
};

struct Histogram {
    std::vector<double> edges;
    std::vector<double> density;  // integrates to 1
};

struct MaxwellBoltzmannFit {
    double n = 0.0;            // exponent of eps
    double temperature = 0.0;  // K
    double amplitude = 0.0;    // 1 / (T^(n+1) Gamma(n+1))
    double residual = 0.0;     // Kolmogorov-Smirnov distance
};

struct EnsembleStats {
    std::vector<double> final_energies;  // completed trajectories, index order
    std::vector<double> initial_energies;
    double mean = 0.0;
    double sem = 0.0;
    double initial_mean = 0.0;
    Histogram histogram;
    std::optional<MaxwellBoltzmannFit> fit_n0;
    std::optional<MaxwellBoltzmannFit> fit_n1;
    std::optional<MaxwellBoltzmannFit> fit_free;
    std::size_t completed = 0;
    std::size_t escaped = 0;  // left the trap (barrier or pole guard)
    std::size_t failed = 0;   // sampling or integration errors
    double acceptance_rate = 0.0;  // orientation sampler
    std::uint32_t digest = 0;      // CRC-32 of the final energies
};

struct ExperimentResult {
    EnsembleStats stats;
    std::vector<TrajectoryOutcome> outcomes;
    std::vector<TrajectoryRecord> records;  // when keep_records
    double wall_seconds = 0.0;
};

// Builds per-trajectory outcomes into `outcomes[index]`; pure given the
// config and index.
TrajectoryOutcome run_trajectory(const ExperimentConfig& cfg, std::size_t index, TrajectoryRecord* keep = nullptr);

// OpenMP across trajectories. Throws ExperimentFailed if more than 10% fail;
// escapes are counted but never fatal.
ExperimentResult run_experiment(const ExperimentConfig& cfg);
// Same result, one thread, plain loop (reference for tests and benchmarks).
ExperimentResult run_experiment_serial(const ExperimentConfig& cfg);

EnsembleStats summarize(const std::vector<TrajectoryOutcome>& outcomes, std::size_t bins = 40);

// Fits D(eps) = A eps^n exp(-eps / T). With `n` given, T = mean / (n + 1);
// otherwise n and T by maximum likelihood. Throws FitDegenerate.
MaxwellBoltzmannFit fit_maxwell_boltzmann(const std::vector<double>& energies, std::optional<double> n = {});

Histogram make_histogram(const std::vector<double>& values, std::size_t bins);

// Mode content of a dense final window, fitted in tip coordinates with the
// steady-precession frequencies at the window's mean cone angle.
ModeDecomposition analyze_final_window(const std::vector<TrajectorySample>& tail, const SimulationSetup& setup);

struct SweepPoint {
    double theta = 0.0;
    double mean = 0.0;
    double sem = 0.0;
    std::size_t completed = 0;
};

std::vector<SweepPoint> theta_sweep(const ExperimentConfig& base, const std::vector<double>& thetas, std::size_t n);

// Single thermal trajectory (index 0 of the master seed) under a chi schedule.
TrajectoryRecord staged_chi_run(const ExperimentConfig& cfg);

}  // namespace ndb
