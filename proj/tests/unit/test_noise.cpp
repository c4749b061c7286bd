#include <doctest.h>

#include <cmath>
#include <numbers>

#include "ndb/constants.hpp"
#include "ndb/noise.hpp"

using namespace ndb;
using std::numbers::pi;

TEST_CASE("OU update reaches the equipartition variance") {
    const auto p = ParticleParams::paper_default();
    const DampingRates rates{1e3, 2e3};
    Rng rng = make_stream(21, 0);
    EulerVector y{0.0, pi / 2, 0.0, 0.0, 0.0, 0.0};
    const double dt = 1e-4;
    double s3 = 0, s4 = 0, s5 = 0;
    int n = 0;
    for (int i = 0; i < 60000; ++i) {
        langevin_update(y, rates, 300.0, p, dt, rng);
        if (i > 100) {
            s3 += y[3] * y[3];
            s4 += y[4] * y[4];
            s5 += y[5] * y[5];
            ++n;
        }
    }
    const double kt = constants::boltzmann * 300.0;
    // correlation time 10 steps, so ~6000 effective samples
    CHECK(s3 / n == doctest::Approx(kt / p.inertia_x).epsilon(0.06));
    CHECK(s4 / n == doctest::Approx(kt / p.inertia_x).epsilon(0.06));
    CHECK(s5 / n == doctest::Approx(kt / p.inertia_z).epsilon(0.06));
}

TEST_CASE("OU mean decays exponentially") {
    const auto p = ParticleParams::paper_default();
    const DampingRates rates{500.0, 0.0};
    const double dt = 1e-3, v0 = 2e4;
    double sum = 0.0;
    const int n = 20000;
    Rng rng = make_stream(22, 0);
    for (int i = 0; i < n; ++i) {
        EulerVector y{0.0, pi / 2, 0.0, 0.0, v0, 1e5};
        langevin_update(y, rates, 300.0, p, dt, rng);
        sum += y[4];
        CHECK(y[5] == 1e5);  // spin channel undamped
    }
    const double sd = std::sqrt(constants::boltzmann * 300.0 / p.inertia_x * (1 - std::exp(-2 * 500.0 * dt)));
    CHECK(std::abs(sum / n - v0 * std::exp(-500.0 * dt)) < 4 * sd / std::sqrt(n));
}

TEST_CASE("free-molecular damping rates") {
    const auto p = ParticleParams::paper_default();
    const DampingRates low = damping_from_pressure(1e-3, p);
    const DampingRates high = damping_from_pressure(760.0, p);
    CHECK(high.alpha_beta / low.alpha_beta == doctest::Approx(760e3).epsilon(1e-12));
    CHECK(damping_from_pressure(0.0, p).alpha_beta == 0.0);

    // Oracle: each sphere feels the Epstein drag of a single sphere at lever
    // arm R; spin drag about the sphere centres only adds to it.
    const double kt = constants::boltzmann * 300.0;
    const double m_air = 28.97 * constants::atomic_mass;
    const double n = 1e-3 * constants::pascal_per_torr / kt;
    const double vbar = std::sqrt(8 * kt / (pi * m_air));
    const double drag = 4.0 * pi / 3.0 * (1 + pi / 8) * n * m_air * vbar * p.radius * p.radius;
    const double lever = 2 * drag * p.radius * p.radius / p.inertia_x;
    CHECK(low.alpha_beta > lever);
    CHECK(low.alpha_beta < 1.5 * lever);
    CHECK(low.alpha_beta > 1.0);
    CHECK(low.alpha_beta < 30.0);
    CHECK(low.gamma > 0.0);
    CHECK_THROWS_AS(damping_from_pressure(-1.0, p), ValidationError);
}

TEST_CASE("resolve damping honours the switch and overrides") {
    const auto p = ParticleParams::paper_default();
    NoiseConfig c;
    c.pressure = 1.0;
    CHECK(resolve_damping(c, p).alpha_beta == 0.0);
    c.gas = true;
    CHECK(resolve_damping(c, p).alpha_beta == doctest::Approx(damping_from_pressure(1.0, p).alpha_beta));
    c.gamma_alpha_beta = 42.0;
    c.gamma_spin = 7.0;
    CHECK(resolve_damping(c, p).alpha_beta == 42.0);
    CHECK(resolve_damping(c, p).gamma == 7.0);
    CHECK(c.any());
    c.pressure = -1.0;
    CHECK_THROWS_AS(c.validate(), ValidationError);
}

TEST_CASE("shot noise heating rate") {
    NoiseConfig c;
    c.shot = true;
    c.shot_rate = 1e6;
    c.shot_kick_rms = 3.0;
    Rng rng = make_stream(23, 0);
    const double dt = 1e-7;
    double s = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        EulerVector y{0, pi / 2, 0, 0, 0, 0};
        shot_noise_update(y, c, dt, rng);
        s += y[3] * y[3];
    }
    // E[sum of kicks^2] = rate dt rms^2
    CHECK(s / n == doctest::Approx(c.shot_rate * dt * 9.0).epsilon(0.05));
    EulerVector z{0, pi / 2, 0, 0, 0, 0};
    c.shot_rate = 0.0;
    shot_noise_update(z, c, dt, rng);
    CHECK(z[3] == 0.0);
}
