#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "ndb/analytics.hpp"
#include "ndb/constants.hpp"
#include "ndb/ensemble.hpp"

using namespace ndb;
using std::numbers::pi;

namespace {

ExperimentConfig quick(std::size_t n, double duration) {
    ExperimentConfig c;
    c.n = n;
    c.setup.duration = duration;
    c.setup.sample_dt = 1e-5;
    c.setup.integrator.method = StepMethod::dormand_prince;
    c.setup.integrator.rel_tol = 1e-8;
    return c;
}

SimulationSetup prepared_setup(double theta = 0.0) {
    SimulationSetup s;
    s.trap.ellipticity = theta;
    s.duration = 1e-3;
    s.feedback.signal = FeedbackSignal::off;
    s.prepare();
    return s;
}

std::vector<double> gamma_draws(double shape, double temperature, std::size_t n, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::gamma_distribution<double> g(shape, temperature);
    std::vector<double> v(n);
    for (double& x : v) x = g(rng);
    return v;
}

}  // namespace

TEST_CASE("free trajectory keeps its energy, spin and precession invariant") {
    const SimulationSetup setup = prepared_setup();
    const RotorModel m(setup.particle, setup.trap);
    Rng rng = make_stream(41, 0);
    const EulerState s0 = sample_state(ThermalConfig{}, m, rng);
    const TrajectoryRecord r = simulate(setup, s0, rng);
    REQUIRE(r.ok());
    CHECK(r.samples.size() == 101);
    CHECK(r.samples.back().t == doctest::Approx(1e-3));
    CHECK(r.final_energy_K == doctest::Approx(r.initial_energy_K).epsilon(1e-6));
    double q_drift = 0.0;
    for (const auto& s : r.samples) {
        CHECK(std::abs(s.omega3_drift) < 1e-15);  // dense output rounding only
        q_drift = std::max(q_drift, std::abs(s.q24 - r.samples.front().q24));
    }
    // exact at theta = 0; scale by the typical size of q24 (w A^2)
    CHECK(q_drift < 1e-7 * 2.19e6 * 0.1 * 0.1);
}

TEST_CASE("grid, tail and termination reporting") {
    SimulationSetup setup = prepared_setup();
    setup.tail_duration = 2e-5;
    setup.tail_dt = 1e-7;
    const RotorModel m(setup.particle, setup.trap);
    EulerState s0;
    s0.alpha = 0.01;
    s0.beta = pi / 2;
    s0.omega3 = 1e5;
    Rng rng = make_stream(42, 0);
    const TrajectoryRecord r = simulate(setup, s0, rng);
    CHECK(r.samples.size() == 101);
    CHECK(r.tail.size() == 201);
    CHECK(r.tail.front().t == doctest::Approx(setup.duration - setup.tail_duration));
    CHECK(r.tail.back().t == doctest::Approx(setup.duration));
    for (std::size_t i = 1; i < r.tail.size(); ++i) {
        CHECK(r.tail[i].t - r.tail[i - 1].t == doctest::Approx(1e-7).epsilon(1e-6));
    }

    // dense windows ride along without moving the coarse grid
    SimulationSetup win = setup;
    win.dense_windows = {{0.0, 1e-5}, {5e-4, 5.2e-4}};
    const TrajectoryRecord w = simulate(win, s0, rng);
    REQUIRE(w.windows.size() == 2);
    CHECK(w.windows[0].size() == 101);
    CHECK(w.windows[1].size() == 201);
    CHECK(w.windows[1].front().t == doctest::Approx(5e-4));
    CHECK(w.samples.size() == 101);
    CHECK(w.samples[50].y[0] == doctest::Approx(r.samples[50].y[0]).epsilon(1e-6));
    win.dense_windows = {{5e-4, 4e-4}};
    CHECK_THROWS_AS(win.prepare(), ValidationError);

    // above the barrier the run stops as escaped
    EulerState hot = s0;
    hot.alpha_dot = 3e6;
    const TrajectoryRecord e = simulate(setup, hot, rng);
    CHECK(e.reason == Termination::escaped);
    CHECK(e.final_state.t < setup.duration);
    CHECK(barrier_kelvin(m) == doctest::Approx(m.depth / constants::boltzmann));
}

TEST_CASE("trajectory files round-trip") {
    SimulationSetup setup = prepared_setup();
    setup.duration = 1e-4;
    setup.tail_duration = 1e-5;
    EulerState s0;
    s0.alpha = 0.02;
    s0.beta = pi / 2 - 0.01;
    s0.omega3 = 2e4;
    Rng rng = make_stream(43, 0);
    const TrajectoryRecord r = simulate(setup, s0, rng);
    std::stringstream bin;
    r.write_binary(bin);
    const TrajectoryRecord back = TrajectoryRecord::read_binary(bin);
    REQUIRE(back.samples.size() == r.samples.size());
    REQUIRE(back.tail.size() == r.tail.size());
    CHECK(back.windows.size() == r.windows.size());
    CHECK(back.samples[5].y[1] == r.samples[5].y[1]);
    CHECK(back.tail.back().q24 == r.tail.back().q24);
    CHECK(back.final_state.alpha == r.final_state.alpha);
    CHECK(back.final_state.t == r.final_state.t);
    CHECK(back.steps == r.steps);

    std::stringstream bad("NOTATRAJ");
    CHECK_THROWS_AS(TrajectoryRecord::read_binary(bad), ParseError);

    std::stringstream csv;
    r.write_csv(csv);
    std::string header;
    std::getline(csv, header);
    CHECK(header == TrajectoryRecord::csv_header());
    std::size_t rows = 0;
    for (std::string line; std::getline(csv, line);) ++rows;
    CHECK(rows == r.samples.size());
}

TEST_CASE("serial and parallel ensembles agree bit for bit") {
    ExperimentConfig c = quick(6, 5e-4);
    const ExperimentResult a = run_experiment_serial(c);
    c.threads = 3;
    const ExperimentResult b = run_experiment(c);
    const ExperimentResult again = run_experiment(c);
    CHECK(a.stats.digest == b.stats.digest);
    CHECK(b.stats.digest == again.stats.digest);
    REQUIRE(a.outcomes.size() == b.outcomes.size());
    for (std::size_t i = 0; i < a.outcomes.size(); ++i) {
        CHECK(a.outcomes[i].final_energy_K == b.outcomes[i].final_energy_K);
    }
    c.thermal.seed += 1;
    CHECK(run_experiment(c).stats.digest != a.stats.digest);
}

TEST_CASE("no feedback, no noise: energies unchanged") {
    ExperimentConfig c = quick(4, 5e-4);
    c.setup.feedback.signal = FeedbackSignal::off;
    const ExperimentResult r = run_experiment(c);
    CHECK(r.stats.completed == 4);
    for (const auto& o : r.outcomes) {
        CHECK(o.final_energy_K == doctest::Approx(o.initial_energy_K).epsilon(1e-5));
        CHECK(o.max_omega3_drift < 1e-15);
        CHECK(o.q24_drift < 1e-5);
    }
}

TEST_CASE("feedback lowers the energy") {
    ExperimentConfig c = quick(4, 2e-3);
    c.setup.feedback.chi = 1e9;
    const ExperimentResult r = run_experiment(c);
    REQUIRE(r.stats.completed == 4);
    for (const auto& o : r.outcomes) CHECK(o.final_energy_K < o.initial_energy_K);
}

TEST_CASE("too many failures abort the experiment") {
    ExperimentConfig c = quick(4, 1e-3);
    c.setup.integrator.max_steps = 3;
    CHECK_THROWS_AS(run_experiment(c), ExperimentFailed);
    ExperimentConfig bad = quick(0, 1e-3);
    CHECK_THROWS_AS(run_experiment(bad), ValidationError);
}

TEST_CASE("Maxwell-Boltzmann fits on gamma samples") {
    const auto one = gamma_draws(1.0, 2e-7, 4000, 1);
    const MaxwellBoltzmannFit f0 = fit_maxwell_boltzmann(one, 0.0);
    CHECK(f0.n == 0.0);
    CHECK(f0.temperature == doctest::Approx(2e-7).epsilon(0.05));
    CHECK(f0.residual < 0.03);
    const MaxwellBoltzmannFit wrong = fit_maxwell_boltzmann(one, 1.0);
    CHECK(wrong.residual > 3 * f0.residual);

    const auto two = gamma_draws(2.0, 5.0, 4000, 2);
    const MaxwellBoltzmannFit f1 = fit_maxwell_boltzmann(two, 1.0);
    CHECK(f1.temperature == doctest::Approx(5.0).epsilon(0.05));
    const MaxwellBoltzmannFit free = fit_maxwell_boltzmann(two);
    CHECK(free.n == doctest::Approx(1.0).epsilon(0.1));
    CHECK(free.temperature == doctest::Approx(5.0).epsilon(0.1));
    CHECK(free.amplitude == doctest::Approx(1.0 / (std::pow(free.temperature, free.n + 1) * std::tgamma(free.n + 1))));

    CHECK_THROWS_AS(fit_maxwell_boltzmann(std::vector<double>(50, 1.0)), FitDegenerate);
    CHECK_THROWS_AS(fit_maxwell_boltzmann(std::vector<double>(500, 1.0)), FitDegenerate);
    auto neg = two;
    neg[3] = -1.0;
    CHECK_THROWS_AS(fit_maxwell_boltzmann(neg), FitDegenerate);
}

TEST_CASE("histogram density integrates to one") {
    const auto v = gamma_draws(2.0, 1.0, 1000, 3);
    const Histogram h = make_histogram(v, 25);
    REQUIRE(h.edges.size() == 26);
    double area = 0.0;
    for (std::size_t i = 0; i < h.density.size(); ++i) area += h.density[i] * (h.edges[i + 1] - h.edges[i]);
    CHECK(area == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("final-window fit sees a single precession mode") {
    // start in the pure + mode of the full rotor: the fit must find no - mode
    SimulationSetup setup = prepared_setup();
    setup.duration = 2e-4;
    setup.tail_duration = 1.5e-4;
    setup.integrator.rel_tol = 1e-12;
    setup.integrator.abs_tol = 1e-16;
    const double w3 = 2e5, psi = 1e-3;
    const double wc = coupling_frequency(setup.particle, w3);
    const double w = libration_frequencies(setup.trap, setup.particle).omega();
    const LinearModes f = precession_frequencies(w, wc, std::cos(psi));
    EulerState s0;
    s0.alpha = psi;
    s0.beta = pi / 2;
    s0.beta_dot = -f.omega_plus * psi;  // eta_dot = W psi
    s0.omega3 = w3;
    Rng rng = make_stream(44, 0);
    const TrajectoryRecord r = simulate(setup, s0, rng);
    REQUIRE(r.ok());
    const ModeDecomposition m = analyze_final_window(r.tail, setup);
    CHECK(m.amplitude_ratio() < 1e-3);
    CHECK(std::max(m.a_plus, m.a_minus) == doctest::Approx(psi * std::sqrt(2.0)).epsilon(1e-3));
}

TEST_CASE("sweep and staged run plumbing") {
    ExperimentConfig c = quick(2, 2e-4);
    const auto pts = theta_sweep(c, {0.0, pi / 16}, 2);
    REQUIRE(pts.size() == 2);
    CHECK(pts[1].theta == pi / 16);
    CHECK(pts[0].completed == 2);

    ExperimentConfig st = quick(1, 4e-3);
    st.setup.feedback.schedule = FeedbackConfig::staged_schedule();
    const TrajectoryRecord rec = staged_chi_run(st);
    CHECK(rec.ok());
    CHECK(rec.samples.size() == 401);
}
