#include "ndb/noise.hpp"

#include <cmath>
#include <numbers>

#include "ndb/constants.hpp"
#include "ndb/errors.hpp"

namespace ndb {

namespace {

constexpr double air_molecule_mass = 28.97 * constants::atomic_mass;
// Epstein factor for diffuse reflection with full accommodation, 1 + pi/8.
constexpr double epstein = 1.0 + std::numbers::pi / 8.0;

double ou_step(double v, double gamma, double sigma, double dt, std::normal_distribution<double>& n, Rng& rng) {
    const double decay = std::exp(-gamma * dt);
    // 1 - e^{-2 g dt} without cancellation for small g dt
    const double spread = -std::expm1(-2.0 * gamma * dt);
    return v * decay + sigma * std::sqrt(spread) * n(rng);
}

}  // namespace

void NoiseConfig::validate() const {
    if (!(pressure >= 0.0)) throw ValidationError("noise.pressure must be >= 0");
    if (!(gas_temperature > 0.0)) throw ValidationError("noise.gas_temperature must be > 0");
    if (gamma_alpha_beta && !(*gamma_alpha_beta >= 0.0)) throw ValidationError("noise.gamma_ab must be >= 0");
    if (gamma_spin && !(*gamma_spin >= 0.0)) throw ValidationError("noise.gamma_spin must be >= 0");
    if (!(shot_rate >= 0.0)) throw ValidationError("noise.shot_rate must be >= 0");
    if (!(shot_kick_rms >= 0.0)) throw ValidationError("noise.shot_kick_rms must be >= 0");
}

DampingRates damping_from_pressure(double pressure_torr, const ParticleParams& particle, double gas_temperature) {
    constexpr double pi = std::numbers::pi;
    if (pressure_torr < 0.0) {
        throw ValidationError("pressure must be non-negative");
    }
    const double kt = constants::boltzmann * gas_temperature;
    const double density = pressure_torr * constants::pascal_per_torr / kt;
    const double mean_speed = std::sqrt(8.0 * kt / (pi * air_molecule_mass));
    const double flux = density * air_molecule_mass * mean_speed;
    const double r4 = std::pow(particle.radius, 4);
    // per sphere: Epstein drag 4pi/3 eps n m v a^2 at lever arm R, plus the
    // free-molecular spin drag 2pi/3 n m v a^4 about its own centre
    const double tumble = 2.0 * (4.0 * pi / 3.0 * epstein + 2.0 * pi / 3.0) * flux * r4;
    const double spin = 2.0 * (2.0 * pi / 3.0) * flux * r4;
    return {tumble / particle.inertia_x, spin / particle.inertia_z};
}

DampingRates resolve_damping(const NoiseConfig& cfg, const ParticleParams& particle) {
    if (!cfg.gas) {
        return {};
    }
    DampingRates r = damping_from_pressure(cfg.pressure, particle, cfg.gas_temperature);
    if (cfg.gamma_alpha_beta) r.alpha_beta = *cfg.gamma_alpha_beta;
    if (cfg.gamma_spin) r.gamma = *cfg.gamma_spin;
    return r;
}

void langevin_update(EulerVector& y, const DampingRates& rates, double gas_temperature,
                     const ParticleParams& particle, double dt, Rng& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    const double kt = constants::boltzmann * gas_temperature;
    if (rates.alpha_beta > 0.0) {
        const double sb = std::sin(y[1]);
        y[3] = ou_step(y[3], rates.alpha_beta, std::sqrt(kt / (particle.inertia_x * sb * sb)), dt, n, rng);
        y[4] = ou_step(y[4], rates.alpha_beta, std::sqrt(kt / particle.inertia_x), dt, n, rng);
    }
    if (rates.gamma > 0.0) {
        y[5] = ou_step(y[5], rates.gamma, std::sqrt(kt / particle.inertia_z), dt, n, rng);
    }
}

EulerState langevin_update(const EulerState& s, const DampingRates& rates, double gas_temperature,
                           const ParticleParams& particle, double dt, Rng& rng) {
    EulerVector y = to_vector(s);
    langevin_update(y, rates, gas_temperature, particle, dt, rng);
    return from_vector(y, s.t);
}

void shot_noise_update(EulerVector& y, const NoiseConfig& cfg, double dt, Rng& rng) {
    if (!(cfg.shot_rate > 0.0) || !(cfg.shot_kick_rms > 0.0)) {
        return;
    }
    std::poisson_distribution<long> kicks(cfg.shot_rate * dt);
    const long k = kicks(rng);
    if (k == 0) {
        return;
    }
    // sum of k independent kicks
    std::normal_distribution<double> n(0.0, cfg.shot_kick_rms * std::sqrt(static_cast<double>(k)));
    y[3] += n(rng);
    y[4] += n(rng);
    y[5] += n(rng);
}

EulerState shot_noise_update(const EulerState& s, const NoiseConfig& cfg, double dt, Rng& rng) {
    EulerVector y = to_vector(s);
    shot_noise_update(y, cfg, dt, rng);
    return from_vector(y, s.t);
}

}  // namespace ndb
