#include "ndb/thermal.hpp"

#include <cmath>
#include <numbers>

#include "ndb/constants.hpp"
#include "ndb/errors.hpp"

namespace ndb {

Rng make_stream(std::uint64_t master, std::uint64_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(master >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                      0x6e646275u};
    return Rng(seq);
}

void ThermalConfig::validate() const {
    if (!(temperature > 0.0)) {
        throw ValidationError("ensemble.temperature must be positive");
    }
    if (rejection_cap == 0) {
        throw ValidationError("ensemble.rejection_cap must be positive");
    }
}

BodyRates sample_angular_velocities(const ThermalConfig& cfg, const ParticleParams& particle, Rng& rng) {
    std::normal_distribution<double> dw(0.0, 1.0);
    const double kt = constants::boltzmann * cfg.temperature;
    BodyRates w;
    w.w1 = std::sqrt(kt / particle.inertia_x) * dw(rng);
    w.w2 = std::sqrt(kt / particle.inertia_x) * dw(rng);  // I_y = I_x
    w.w3 = std::sqrt(kt / particle.inertia_z) * dw(rng);
    return w;
}

OrientationSample sample_orientation(const ThermalConfig& cfg, const RotorModel& model, Rng& rng) {
    constexpr double pi = std::numbers::pi;
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    const double kt = constants::boltzmann * cfg.temperature;
    OrientationSample s;
    for (;;) {
        if (s.proposals >= cfg.rejection_cap) {
            throw RejectionCapExceeded("orientation sampler exhausted its proposal cap");
        }
        ++s.proposals;
        const double alpha = pi * (u01(rng) - 0.5);
        const double beta = cfg.literal_eq26 ? 0.5 * pi * u01(rng) : std::acos(u01(rng));
        const double w = std::exp(-model.potential_above_minimum(alpha, beta) / kt);
        if (u01(rng) < w) {
            s.alpha = alpha;
            s.beta = beta;
            break;
        }
    }
    if (u01(rng) < 0.5) {
        s.alpha += pi;
    }
    if (u01(rng) < 0.5) {
        s.beta = pi - s.beta;
    }
    s.gamma = 2.0 * pi * u01(rng);
    return s;
}

EulerState sample_state(const ThermalConfig& cfg, const RotorModel& model, Rng& rng, std::uint64_t* proposals) {
    const OrientationSample o = sample_orientation(cfg, model, rng);
    ParticleParams inertia;
    inertia.inertia_x = model.inertia_x;
    inertia.inertia_z = model.inertia_z;
    const BodyRates w = sample_angular_velocities(cfg, inertia, rng);
    const auto rates = euler_rates_from_body(w.w1, w.w2, o.beta, o.gamma);
    if (proposals) {
        *proposals = o.proposals;
    }
    EulerState s;
    s.alpha = o.alpha;
    s.beta = o.beta;
    s.gamma = o.gamma;
    s.alpha_dot = rates[0];
    s.beta_dot = rates[1];
    s.omega3 = w.w3;
    return s;
}

}  // namespace ndb
