#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Dense>

#include "ndb/analytics.hpp"
#include "ndb/constants.hpp"
#include "ndb/integrator.hpp"
#include "ndb/physics.hpp"

using namespace ndb;
using std::numbers::pi;

namespace {

struct Fixture {
    ParticleParams particle = ParticleParams::paper_default();
    TrapParams trap;
    Fixture(double theta = 0.0) {
        trap.ellipticity = theta;
        trap = resolve_field(trap, particle);
    }
};

EulerState random_state(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    EulerState s;
    s.alpha = 2 * pi * u(rng);
    s.beta = 0.05 + (pi - 0.1) * u(rng);
    s.gamma = 2 * pi * u(rng);
    s.alpha_dot = 1e5 * (u(rng) - 0.5);
    s.beta_dot = 1e5 * (u(rng) - 0.5);
    s.omega3 = 4e5 * (u(rng) - 0.5);
    return s;
}

// lab-frame polarizability tensor R^T diag R
Eigen::Matrix3d lab_tensor(const EulerState& s, const ParticleParams& p) {
    const Eigen::Matrix3d r = rotation_matrix(s.alpha, s.beta, s.gamma);
    const Eigen::Vector3d d(p.polarizability_x, p.polarizability_x, p.polarizability_z);
    return r.transpose() * d.asDiagonal() * r;
}

}  // namespace

TEST_CASE("rotation matrix: identity and quarter turn") {
    CHECK((rotation_matrix(0, 0, 0) - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() == 0.0);
    const Eigen::Vector3d body = rotation_matrix(pi / 2, 0, 0) * Eigen::Vector3d::UnitX();
    CHECK(body.x() == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(body.y() == doctest::Approx(-1.0));
    CHECK(std::abs(body.z()) < 1e-15);
}

TEST_CASE("rotation matrix is orthogonal with unit determinant") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.0, 2 * pi);
    double worst = 0.0, det_err = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const Eigen::Matrix3d r = rotation_matrix(u(rng), u(rng) / 2, u(rng));
        worst = std::max(worst, (r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff());
        det_err = std::max(det_err, std::abs(r.determinant() - 1.0));
    }
    CHECK(worst < 1e-12);
    CHECK(det_err < 1e-12);
}

TEST_CASE("body angular velocity") {
    EulerState s;
    s.beta = pi / 2;
    s.alpha_dot = 3.0;
    s.omega3 = 7.0;
    auto w = body_angular_velocity(s);
    CHECK(w.w1 == doctest::Approx(-3.0));
    CHECK(std::abs(w.w2) < 1e-15);
    CHECK(w.w3 == 7.0);

    EulerState still;
    still.beta = 1.0;
    still.omega3 = 5.0;
    w = body_angular_velocity(still);
    CHECK(w.w1 == 0.0);
    CHECK(w.w2 == 0.0);
    CHECK(still.gamma_dot() == 5.0);

    std::mt19937_64 rng(2);
    for (int i = 0; i < 200; ++i) {
        const EulerState r = random_state(rng);
        const BodyRates b = body_angular_velocity(r);
        const Eigen::Vector3d lab = lab_angular_velocity(r);
        const double w3 = lab.dot(symmetry_axis(r.alpha, r.beta));
        const double perp = lab.squaredNorm() - w3 * w3;
        CHECK(std::abs(b.w1 * b.w1 + b.w2 * b.w2 - perp) < 1e-12 * lab.squaredNorm());
        CHECK(w3 == doctest::Approx(r.omega3).epsilon(1e-12));
        // body components equal R * lab
        const Eigen::Vector3d body = rotation_matrix(r.alpha, r.beta, r.gamma) * lab;
        CHECK(body.x() == doctest::Approx(b.w1).epsilon(1e-10));
        CHECK(body.y() == doctest::Approx(b.w2).epsilon(1e-10));
    }
}

TEST_CASE("euler rates from body rates invert the forward map") {
    std::mt19937_64 rng(3);
    for (int i = 0; i < 100; ++i) {
        const EulerState r = random_state(rng);
        const BodyRates b = body_angular_velocity(r);
        const auto back = euler_rates_from_body(b.w1, b.w2, r.beta, r.gamma);
        CHECK(back[0] == doctest::Approx(r.alpha_dot).epsilon(1e-10));
        CHECK(back[1] == doctest::Approx(r.beta_dot).epsilon(1e-10));
    }
}

TEST_CASE("potential energy: limits and tensor oracle") {
    Fixture f;
    const double e2 = f.trap.field_amplitude * f.trap.field_amplitude;
    EulerState s;
    s.beta = pi / 2;
    CHECK(potential_energy(s, f.trap, f.particle) ==
          doctest::Approx(-e2 / 4 * f.particle.polarizability_z).epsilon(1e-13));
    s.beta = 0.0;
    s.alpha = 1.234;
    CHECK(potential_energy(s, f.trap, f.particle) ==
          doctest::Approx(-e2 / 4 * f.particle.polarizability_x).epsilon(1e-13));

    Fixture g(pi / 8);
    const double c2 = std::cos(pi / 8) * std::cos(pi / 8), s2 = 1 - c2;
    std::mt19937_64 rng(4);
    for (int i = 0; i < 50; ++i) {
        EulerState r = random_state(rng);
        if (i == 0) {
            r.alpha = pi / 4;
            r.beta = pi / 2;
        }
        const Eigen::Matrix3d a = lab_tensor(r, g.particle);
        // U = -1/4 Re(E* . a . E), E = E0 (cos t, i sin t, 0)
        const double oracle = -0.25 * e2 * (a(0, 0) * c2 + a(1, 1) * s2);
        CHECK(potential_energy(r, g.trap, g.particle) == doctest::Approx(oracle).epsilon(1e-12));
    }
}

TEST_CASE("kinetic energy") {
    const auto p = ParticleParams::paper_default();
    EulerState s;
    s.beta = 0.7;
    CHECK(kinetic_energy(s, p) == 0.0);
    s.omega3 = 2e5;
    CHECK(kinetic_energy(s, p) == doctest::Approx(0.5 * p.inertia_z * 4e10));
    std::mt19937_64 rng(5);
    for (int i = 0; i < 100; ++i) {
        const EulerState r = random_state(rng);
        const BodyRates b = body_angular_velocity(r);
        const Eigen::Vector3d w(b.w1, b.w2, b.w3);
        const Eigen::Vector3d inertia(p.inertia_x, p.inertia_x, p.inertia_z);
        const double oracle = 0.5 * w.dot(inertia.asDiagonal() * w);
        CHECK(kinetic_energy(r, p) == doctest::Approx(oracle).epsilon(1e-12));
    }
}

TEST_CASE("shifted energy: zero at the minimum, quadratic at small angles") {
    Fixture f;
    const RotorModel m(f.particle, f.trap);
    EulerState s;
    s.beta = pi / 2;
    s.omega3 = 3e5;
    CHECK(shifted_energy_kelvin(s, m) < 1e-20);
    s.alpha = pi;
    CHECK(shifted_energy_kelvin(s, m) < 1e-20);

    const double w2 = libration_frequencies(f.trap, f.particle).omega_sq;
    const double xi = 2e-4, eta = -3e-4, xid = 40.0, etad = 70.0;
    EulerState q;
    q.alpha = xi;
    q.beta = pi / 2 - eta;
    q.alpha_dot = xid;
    q.beta_dot = -etad;
    const double quad = 0.5 * f.particle.inertia_x * (xid * xid + etad * etad + w2 * (xi * xi + eta * eta)) /
                        constants::boltzmann;
    CHECK(shifted_energy_kelvin(q, m) == doctest::Approx(quad).epsilon(1e-6));
}

TEST_CASE("polarization vector") {
    Fixture f;
    const double amp = f.particle.polarizability_anisotropy() * f.trap.field_amplitude;
    EulerState s;
    s.beta = pi / 2;
    Eigen::Vector3d p = polarization_vector(s, f.trap, f.particle);
    CHECK(p.x() == doctest::Approx(amp));
    CHECK(std::abs(p.y()) < 1e-15 * amp);
    CHECK(std::abs(p.z()) < 1e-15 * amp);

    s.alpha = 1e-3;
    p = polarization_vector(s, f.trap, f.particle);
    CHECK(p.y() == doctest::Approx(amp * 1e-3).epsilon(1e-6));

    std::mt19937_64 rng(6);
    for (int i = 0; i < 100; ++i) {
        const EulerState r = random_state(rng);
        const Eigen::Vector3d full = lab_tensor(r, f.particle) * Eigen::Vector3d::UnitX() * f.trap.field_amplitude;
        const Eigen::Vector3d aniso = full - f.particle.polarizability_x * f.trap.field_amplitude * Eigen::Vector3d::UnitX();
        const Eigen::Vector3d got = polarization_vector(r, f.trap, f.particle);
        CHECK((got - aniso).norm() < 1e-12 * amp);
    }
}

TEST_CASE("analytic gradient matches central differences") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        Fixture f(0.78 * u(rng));
        const RotorModel m(f.particle, f.trap);
        const double a = 2 * pi * u(rng), b = 0.01 + (pi - 0.02) * u(rng);
        const PotentialGradient g = m.gradient(a, b);
        const double h = 1e-7;
        const double fa = (m.potential_above_minimum(a + h, b) - m.potential_above_minimum(a - h, b)) / (2 * h);
        const double fb = (m.potential_above_minimum(a, b + h) - m.potential_above_minimum(a, b - h)) / (2 * h);
        const double scale_a = std::max(std::abs(fa), 1e-3 * m.depth);
        const double scale_b = std::max(std::abs(fb), 1e-3 * m.depth);
        worst = std::max({worst, std::abs(g.d_alpha - fa) / scale_a, std::abs(g.d_beta - fb) / scale_b});
    }
    CHECK(worst < 1e-6);
}

TEST_CASE("equations of motion: equilibrium and coordinate guard") {
    Fixture f;
    EulerState s;
    s.beta = pi / 2;
    const EulerDerivatives d = eom_rhs(s, f.trap, f.particle);
    CHECK(d.alpha_dot == 0.0);
    CHECK(d.beta_dot == 0.0);
    CHECK(d.gamma_dot == 0.0);
    CHECK(std::abs(d.alpha_ddot) < 1e-3);
    CHECK(std::abs(d.beta_ddot) < 1e-3);
    s.beta = 1e-7;
    CHECK_THROWS_AS(eom_rhs(s, f.trap, f.particle), SingularityGuard);
}

TEST_CASE("full and small-angle equations agree for tiny displacements") {
    Fixture f;
    const RotorModel m(f.particle, f.trap);
    const double w3 = 1e5;
    const auto sp = small_angle_params(libration_frequencies(f.trap, f.particle), coupling_frequency(f.particle, w3));
    IntegratorConfig cfg;
    cfg.rel_tol = 1e-12;
    cfg.abs_tol = 1e-16;
    cfg.dt_max = 2e-8;
    cfg.dt_init = 1e-9;

    SUBCASE("10 us at 1e-4 rad") {
        EulerVector y{1e-4, pi / 2, 0, 0, 0, w3};
        StateVector<4> q{1e-4, 0, 0, 0};
        std::vector<double> full, lin;
        integrate<6>(0.0, y, 10e-6, 1e-7, [&](double, const EulerVector& v) { return euler_derivative_vector(m, v, 1.0); },
                     [&](double, const EulerVector& v) { full.push_back(v[0]); }, cfg);
        integrate<4>(0.0, q, 10e-6, 1e-7, [&](double, const StateVector<4>& v) { return small_angle_rhs(sp, v, 1.0); },
                     [&](double, const StateVector<4>& v) { lin.push_back(v[0]); }, cfg);
        REQUIRE(full.size() == lin.size());
        double worst = 0.0;
        for (std::size_t i = 0; i < full.size(); ++i) worst = std::max(worst, std::abs(full[i] - lin[i]));
        CHECK(worst < 1e-9);
    }

    SUBCASE("50 librational periods at 1e-3 rad") {
        const double period = 2 * pi / libration_frequencies(f.trap, f.particle).omega();
        EulerVector y{1e-3, pi / 2 - 5e-4, 0, 300.0, -200.0, w3};
        StateVector<4> q{1e-3, 5e-4, 300.0, 200.0};
        std::vector<std::array<double, 2>> full, lin;
        integrate<6>(0.0, y, 50 * period, period / 40, [&](double, const EulerVector& v) { return euler_derivative_vector(m, v, 1.0); },
                     [&](double, const EulerVector& v) { full.push_back({v[0], pi / 2 - v[1]}); }, cfg);
        integrate<4>(0.0, q, 50 * period, period / 40, [&](double, const StateVector<4>& v) { return small_angle_rhs(sp, v, 1.0); },
                     [&](double, const StateVector<4>& v) { lin.push_back({v[0], v[1]}); }, cfg);
        REQUIRE(full.size() == lin.size());
        double worst = 0.0;
        for (std::size_t i = 0; i < full.size(); ++i) {
            worst = std::max({worst, std::abs(full[i][0] - lin[i][0]), std::abs(full[i][1] - lin[i][1])});
        }
        CHECK(worst < 1e-7);
    }
}

TEST_CASE("particle defaults reproduce the quoted inertia") {
    const auto p = ParticleParams::paper_default();
    CHECK(p.inertia_x == doctest::Approx(1.041e-31).epsilon(0.005));
    CHECK(p.inertia_z == doctest::Approx(2.974e-32).epsilon(0.005));
    CHECK(p.inertia_z / p.inertia_x == doctest::Approx(2.0 / 7.0).epsilon(1e-14));
    CHECK(p.polarizability_z > p.polarizability_x);
    CHECK(p.polarizability_x > 0.0);
}

TEST_CASE("ellipsoid polarizabilities") {
    auto p = ParticleParams::paper_default();
    const DepolarizationFactors l = spheroid_depolarization(2.0);
    CHECK(l.x + l.y + l.z == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(l.z == doctest::Approx(0.17356).epsilon(1e-4));
    for (double r : {0.3, 0.9, 1.0, 1.1, 5.0}) {
        const auto q = spheroid_depolarization(r);
        CHECK(q.x + q.y + q.z == doctest::Approx(1.0).epsilon(1e-12));
    }
    const Polarizabilities sphere = ellipsoid_polarizabilities(p, 1.0);
    const double eps = p.refractive_index * p.refractive_index;
    const double volume = 2.0 * 4.0 / 3.0 * pi * std::pow(p.radius, 3);
    const double cm = 3.0 * constants::vacuum_permittivity * volume * (eps - 1.0) / (eps + 2.0);
    CHECK(sphere.x == doctest::Approx(cm).epsilon(1e-12));
    CHECK(sphere.z == doctest::Approx(cm).epsilon(1e-12));
    const Polarizabilities rod = ellipsoid_polarizabilities(p, 2.0);
    CHECK(rod.z > rod.x);
    CHECK(rod.x > 0.0);
    p.refractive_index = 1.0;
    CHECK_THROWS_AS(ellipsoid_polarizabilities(p), InvalidMaterial);
}

TEST_CASE("field amplitude and frequency calibration") {
    const auto p = ParticleParams::paper_default();
    TrapParams t;
    const double e1 = field_amplitude(t);
    t.power *= 2.0;
    CHECK(field_amplitude(t) == doctest::Approx(std::sqrt(2.0) * e1));

    TrapParams cal;
    cal = resolve_field(cal, p);
    CHECK(libration_frequencies(cal, p).omega() == doctest::Approx(2.19e6).epsilon(1e-12));
    TrapParams cyc;
    cyc.convention = FrequencyConvention::cyclic;
    cyc = resolve_field(cyc, p);
    CHECK(libration_frequencies(cyc, p).omega() == doctest::Approx(2 * pi * 2.19e6).epsilon(1e-12));

    TrapParams der;
    der.field_mode = FieldMode::derived;
    der = resolve_field(der, p);
    const double w = libration_frequencies(der, p).omega();
    CHECK(w > 2.19e6 / 3.0);
    CHECK(w < 2.19e6 * 3.0);
}

TEST_CASE("trap validation bounds theta") {
    TrapParams t;
    t.ellipticity = pi / 4;
    CHECK_THROWS_AS(t.validate(), ValidationError);
    t.ellipticity = 1.0;
    CHECK_THROWS_AS(t.validate(), ValidationError);
    t.ellipticity = 4 * pi / 32;
    CHECK_NOTHROW(t.validate());
    const auto p = ParticleParams::paper_default();
    t = resolve_field(t, p);
    const auto fr = libration_frequencies(t, p);
    CHECK(fr.xi_sq == doctest::Approx(fr.omega_sq * std::cos(2 * t.ellipticity)));
    CHECK(fr.eta_sq == doctest::Approx(fr.omega_sq * std::pow(std::cos(t.ellipticity), 2)));
}

TEST_CASE("tip coordinates track xi and eta") {
    EulerState s;
    s.alpha = 2e-4;
    s.beta = pi / 2 - 3e-4;
    s.alpha_dot = 10.0;
    s.beta_dot = -20.0;
    const SmallAngleState q = tip_coordinates(s);
    CHECK(q.xi == doctest::Approx(2e-4).epsilon(1e-6));
    CHECK(q.eta == doctest::Approx(3e-4).epsilon(1e-6));
    CHECK(q.xi_dot == doctest::Approx(10.0).epsilon(1e-6));
    CHECK(q.eta_dot == doctest::Approx(20.0).epsilon(1e-6));
    // the mirror minimum at alpha = pi gives the same folded coordinates
    EulerState m = s;
    m.alpha += pi;
    const SmallAngleState r = tip_coordinates(m);
    CHECK(r.xi == doctest::Approx(q.xi).epsilon(1e-9));
    CHECK(r.xi_dot == doctest::Approx(q.xi_dot).epsilon(1e-9));
}

TEST_CASE("precession invariant reduces to the small-angle quantity") {
    const auto p = ParticleParams::paper_default();
    EulerState s;
    s.alpha = 2e-4;
    s.beta = pi / 2 - 3e-4;
    s.alpha_dot = 10.0;
    s.beta_dot = -20.0;
    s.omega3 = 1e5;
    const SmallAngleState q = tip_coordinates(s);
    const double small = conserved_precession_quantity(q, coupling_frequency(p, s.omega3));
    CHECK(precession_invariant(s, p) == doctest::Approx(small).epsilon(1e-3));
}
