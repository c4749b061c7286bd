#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "ndb/feedback.hpp"
#include "ndb/integrator.hpp"
#include "ndb/noise.hpp"
#include "ndb/physics.hpp"
#include "ndb/thermal.hpp"

namespace ndb {

struct SimulationSetup {
    ParticleParams particle = ParticleParams::paper_default();
    TrapParams trap;  // field resolved by `prepare`
    FeedbackConfig feedback;
    NoiseConfig noise;
    IntegratorConfig integrator;
    double duration = 80e-3;   // s
    double sample_dt = 1e-5;   // coarse output grid
    double tail_duration = 0.0;  // dense record over the final stretch
    double tail_dt = 5e-8;
    // extra dense records [start, end) at tail_dt, e.g. PSD windows
    std::vector<std::pair<double, double>> dense_windows;

    // Resolves E0, syncs the feedback radius and validates everything.
    void prepare();
};

struct TrajectorySample {
    double t = 0.0;
    EulerVector y{};
    double energy_K = 0.0;      // shifted energy
    double omega3_drift = 0.0;  // (w3 - w3_0) / |w3_0|
    double energy_drift = 0.0;  // relative change of K + U - U_min
    double q24 = 0.0;           // (s L_x - I_z w3) / I_x

    EulerState state() const { return from_vector(y, t); }
};

struct TrajectoryRecord {
    std::vector<TrajectorySample> samples;  // uniform at sample_dt
    std::vector<TrajectorySample> tail;     // uniform at tail_dt
    std::vector<std::vector<TrajectorySample>> windows;  // one per dense window
    Termination reason = Termination::completed;
    std::string message;
    std::uint64_t steps = 0;
    std::uint64_t rejected = 0;
    EulerState initial;
    EulerState final_state;
    double initial_energy_K = 0.0;
    double final_energy_K = 0.0;

    bool ok() const { return reason == Termination::completed; }

    static const char* csv_header();
    void write_csv(std::ostream& os, bool tail_only = false) const;
    void write_binary(std::ostream& os) const;
    static TrajectoryRecord read_binary(std::istream& is);
};

// Right-hand side of the full equations with the feedback evaluated from the
// instantaneous state.
struct FeedbackSystem {
    RotorModel model;
    FeedbackSignal signal = FeedbackSignal::off;
    double chi_r2 = 0.0;  // chi R^2 of the current schedule segment
    double xi_offset = 0.0;
    double eta_offset = 0.0;

    EulerVector operator()(double, const EulerVector& y) const {
        const double m = signal == FeedbackSignal::off
                             ? 1.0
                             : 1.0 + chi_r2 * feedback_signal(y, signal, xi_offset, eta_offset);
        return euler_derivative_vector(model, y, m);
    }
};

// Integrates one trajectory from `initial`. Noise and measurement errors
// draw from `rng`. Physics failures end the run and set `reason`.
TrajectoryRecord simulate(const SimulationSetup& setup, const EulerState& initial, Rng& rng);

// Shifted energy above which the particle can cross the potential barrier.
double barrier_kelvin(const RotorModel& model);

}  // namespace ndb
