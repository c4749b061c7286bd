#include <doctest.h>

#include <cmath>
#include <numbers>

#include "ndb/config.hpp"

using namespace ndb;
using std::numbers::pi;

TEST_CASE("empty file gives the default particle and trap") {
    const RunConfig c = parse_config_string("");
    const ExperimentConfig e = c.resolve();
    CHECK(e.setup.particle.radius == 85e-9);
    CHECK(e.setup.particle.total_mass() == doctest::Approx(1.029e-17));
    CHECK(e.setup.particle.refractive_index == 1.458);
    CHECK(e.setup.particle.density == 2000.0);
    CHECK(e.setup.trap.wavelength == 1550e-9);
    CHECK(e.setup.trap.power == 0.5);
    CHECK(e.setup.trap.numerical_aperture == 0.45);
    CHECK(e.setup.trap.ellipticity == 0.0);
    CHECK(e.setup.feedback.chi == 1e7);
    CHECK(e.thermal.temperature == 300.0);
    CHECK(libration_frequencies(e.setup.trap, e.setup.particle).omega() == doctest::Approx(2.19e6));
}

TEST_CASE("sections, comments and values") {
    const RunConfig c = parse_config_string(R"(
; comment
[trap]
theta = 0.39269908169872414
[feedback]
signal = xi
chi = 2e8
schedule = 0.001:10, 0.002:100
[noise]
gas = true
pressure = 1e-3
gamma_spin = 4.5
[ensemble]
n = 12
seed = 99
)");
    CHECK(c.experiment.setup.trap.ellipticity == 4 * pi / 32);
    CHECK(c.experiment.setup.feedback.signal == FeedbackSignal::xi);
    CHECK(c.experiment.setup.feedback.chi == 2e8);
    REQUIRE(c.experiment.setup.feedback.schedule.size() == 2);
    CHECK(c.experiment.setup.feedback.schedule[1].multiplier == 100.0);
    CHECK(c.experiment.setup.noise.gas);
    CHECK(c.experiment.setup.noise.gamma_spin == 4.5);
    CHECK_FALSE(c.experiment.setup.noise.gamma_alpha_beta.has_value());
    CHECK(c.experiment.n == 12);
    CHECK(parse_config_string("[feedback]\nchi = 3e7   ; stronger\nsignal = xi # only xi\n").experiment.setup.feedback.chi == 3e7);
    CHECK(c.experiment.thermal.seed == 99);

    // elliptical trap: eta stiffer than xi by 1/sqrt(cos 2 theta) ... cos ratio
    const ExperimentConfig e = c.resolve();
    const auto f = libration_frequencies(e.setup.trap, e.setup.particle);
    const double th = 4 * pi / 32;
    CHECK(f.omega_eta() / f.omega_xi() ==
          doctest::Approx(std::cos(th) / std::sqrt(std::cos(th) * std::cos(th) - std::sin(th) * std::sin(th))));
}

TEST_CASE("unknown keys and bad values report the line") {
    try {
        parse_config_string("[trap]\ntheta = 0.1\nthetta = 0.2\n");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("line 3") != std::string::npos);
        CHECK(msg.find("trap.thetta") != std::string::npos);
    }
    try {
        parse_config_string("[feedback]\n\nchi = lots\n");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("line 3") != std::string::npos);
        CHECK(msg.find("feedback.chi") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_config_string("[laser]\npower = 1\n"), ParseError);
    CHECK_THROWS_AS(parse_config_string("theta = 1\n"), ParseError);
    CHECK_THROWS_AS(parse_config_string("[trap]\ntheta = 0.1\ntheta = 0.2\n"), ParseError);
    CHECK_THROWS_AS(parse_config_string("[trap\ntheta = 0.1\n"), ParseError);
    CHECK_THROWS_AS(parse_override("trap.theta"), ParseError);
    CHECK_THROWS_AS(parse_override("trap.nope=1"), ParseError);
}

TEST_CASE("physics-invalid values are validation errors") {
    CHECK_THROWS_AS(parse_config_string("[trap]\ntheta = 1.0\n"), ValidationError);
    CHECK_THROWS_AS(parse_config_string("[feedback]\nchi = -1\n"), ValidationError);
    CHECK_THROWS_AS(parse_config_string("[ensemble]\nn = 0\n"), ValidationError);
    CHECK_THROWS_AS(parse_config_string("[particle]\nalpha_x = 1e-32\n"), ValidationError);
    CHECK_NOTHROW(parse_config_string("[trap]\ntheta = 0.78\n"));
}

TEST_CASE("overrides apply on top of the file") {
    RunConfig c = parse_config_string("[trap]\ntheta = 0.1\n");
    const ConfigEntry e = parse_override("trap.theta=0.3927");
    apply_entries(c, {e});
    CHECK(c.experiment.setup.trap.ellipticity == 0.3927);
    apply_entries(c, {parse_override("feedback.schedule = staged")});
    CHECK(c.experiment.setup.feedback.schedule.size() == 5);
}

TEST_CASE("config map round-trips every key exactly") {
    RunConfig a;
    apply_entries(a, {parse_override("trap.theta=0.39269908169872414"), parse_override("feedback.chi=1.2345678901234567e7"),
                      parse_override("feedback.schedule=staged"), parse_override("particle.alpha_x=1.1e-32"),
                      parse_override("particle.alpha_z=2.3e-32"), parse_override("noise.gamma_alpha_beta=0.1"),
                      parse_override("integrator.method=dopri"), parse_override("ensemble.seed=18446744073709551615")});
    const auto m = config_map(a);
    CHECK(m.size() == config_keys().size());
    RunConfig b;
    for (const auto& [k, v] : m) set_config_value(b, k, v);
    CHECK(config_map(b) == m);
    CHECK(b.experiment.setup.feedback.chi == a.experiment.setup.feedback.chi);
    CHECK(b.experiment.setup.feedback.schedule[4].multiplier == a.experiment.setup.feedback.schedule[4].multiplier);
    CHECK(b.experiment.thermal.seed == 18446744073709551615ULL);
    CHECK(b.particle.alpha_x == 1.1e-32);
    CHECK(m.at("particle.alpha_x") == "1.1e-32");
}
