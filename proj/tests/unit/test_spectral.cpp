#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "ndb/analytics.hpp"
#include "ndb/spectral.hpp"

using namespace ndb;
using std::numbers::pi;

TEST_CASE("white noise has a flat density at 2 sigma^2 dt") {
    std::mt19937_64 rng(31);
    std::normal_distribution<double> g(0.0, 1.5);
    const double dt = 1e-6;
    std::vector<double> x(1 << 18);
    for (double& v : x) v = g(rng);
    const PsdResult r = estimate_psd(x, dt, 4096);
    double mean = 0.0;
    for (std::size_t k = 1; k + 1 < r.psd.size(); ++k) mean += r.psd[k];
    mean /= static_cast<double>(r.psd.size() - 2);
    CHECK(mean == doctest::Approx(2 * 2.25 * dt).epsilon(0.02));
    CHECK(r.parseval_ratio() == doctest::Approx(1.0).epsilon(0.02));
    CHECK(r.frequency_hz.back() == doctest::Approx(0.5 / dt));
    CHECK(r.bin_width() == doctest::Approx(1.0 / (4096 * dt)));
    CHECK(r.segments == 2 * (x.size() / 4096) - 1);
}

TEST_CASE("a pure tone lands in the right bin with its power") {
    const double dt = 5e-8, f0 = 348'000.0, amp = 2e-3;
    std::vector<double> x(1 << 17);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = amp * std::sin(2 * pi * f0 * dt * static_cast<double>(i)) + 0.3;
    const PsdResult r = estimate_psd(x, dt, 8192);
    CHECK(r.parseval_ratio() == doctest::Approx(1.0).epsilon(0.02));
    CHECK(r.integrated == doctest::Approx(amp * amp / 2).epsilon(0.02));
    const auto peaks = find_peaks(r, 1);
    CHECK(peaks[0].frequency_hz == doctest::Approx(f0).epsilon(0.1 * r.bin_width() / f0));
    // Hann main lobe: 1.44 bins wide at half power, coarser on the bin grid
    CHECK(peaks[0].width_hz > 1.0 * r.bin_width());
    CHECK(peaks[0].width_hz < 2.5 * r.bin_width());
}

TEST_CASE("two tones resolved and ordered by height") {
    const double dt = 5e-8;
    std::mt19937_64 rng(32);
    std::normal_distribution<double> g(0.0, 1e-5);
    std::vector<double> x(1 << 17);
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double t = dt * static_cast<double>(i);
        x[i] = 1e-3 * std::cos(2 * pi * 3.5e5 * t) + 4e-4 * std::cos(2 * pi * 3.4e5 * t + 1.0) + g(rng);
    }
    const PsdResult r = estimate_psd(x, dt, 8192);
    const auto peaks = find_peaks(r, 2);
    REQUIRE(peaks.size() == 2);
    CHECK(peaks[0].frequency_hz == doctest::Approx(3.5e5).epsilon(0.005));
    CHECK(peaks[1].frequency_hz == doctest::Approx(3.4e5).epsilon(0.005));
    CHECK(peaks[0].height > peaks[1].height);
    const auto band = find_peaks(r, 1, std::make_pair(3.3e5, 3.45e5));
    CHECK(band[0].frequency_hz == doctest::Approx(3.4e5).epsilon(0.005));
    CHECK_THROWS_AS(find_peaks(r, 1, std::make_pair(1e5, 2e5)), PeaksNotFound);
}

TEST_CASE("insufficient data") {
    std::vector<double> x(100, 1.0);
    CHECK_THROWS_AS(estimate_psd(x, 1e-6, 4096), InsufficientData);
    CHECK_THROWS_AS(estimate_psd(x, 1e-6, 0), InsufficientData);
}

TEST_CASE("mode frequencies appear in the homodyne signal") {
    // linear modes at w+ and w-, sampled in the p45 observable
    const double w = 2.19e6, wc = 9e4;
    ModeDecomposition m = normal_modes_elliptical(w, w, wc);
    m.a_plus = 2e-3;
    m.a_minus = 1e-3;
    const double dt = 5e-8;
    std::vector<double> x(1 << 16);
    for (std::size_t i = 0; i < x.size(); ++i) {
        const SmallAngleState q = mode_state(m, dt * static_cast<double>(i));
        EulerState s;
        s.alpha = q.xi;
        s.beta = pi / 2 - q.eta;
        x[i] = signal_p45(s);
    }
    const PsdResult r = estimate_psd(x, dt, 8192);
    const auto peaks = find_peaks(r, 2);
    const double fp = m.omega_plus / (2 * pi), fm = m.omega_minus / (2 * pi);
    CHECK(peaks[0].frequency_hz == doctest::Approx(fp).epsilon(0.2 * r.bin_width() / fp));
    CHECK(peaks[1].frequency_hz == doctest::Approx(fm).epsilon(0.2 * r.bin_width() / fm));
}

TEST_CASE("detector signals near equilibrium") {
    EulerState s;
    s.alpha = 1e-4;
    s.beta = pi / 2 - 2e-4;
    CHECK(signal_p45(s) == doctest::Approx(1e-4).epsilon(1e-6));
    CHECK(signal_split(s) == doctest::Approx(2e-4).epsilon(1e-6));
    const auto particle = ParticleParams::paper_default();
    TrapParams trap;
    CHECK(gouy_attenuation(particle, trap) == axial_displacement_ratio(particle, trap));
}
