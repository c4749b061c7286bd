#pragma once

#include <optional>

#include "ndb/physics.hpp"
#include "ndb/thermal.hpp"

namespace ndb {

struct DampingRates {
    double alpha_beta = 0.0;  // 1/s, shared by alpha_dot and beta_dot
    double gamma = 0.0;       // 1/s, spin channel (omega3)
};

struct NoiseConfig {
    bool gas = false;
    bool shot = false;
    double pressure = 0.0;          // Torr
    double gas_temperature = 300.0; // K
    std::optional<double> gamma_alpha_beta;  // direct overrides, 1/s
    std::optional<double> gamma_spin;
    double shot_rate = 0.0;      // kicks / s
    double shot_kick_rms = 0.0;  // rad/s per kick, per channel

    void validate() const;
    bool any() const { return gas || shot; }
};

// Free-molecular rotational damping of two touching spheres in air: each
// sphere contributes Epstein drag at lever arm R plus its own spin drag.
// Linear in pressure.
DampingRates damping_from_pressure(double pressure_torr, const ParticleParams& particle,
                                   double gas_temperature = 300.0);

DampingRates resolve_damping(const NoiseConfig& cfg, const ParticleParams& particle);

// Exact Ornstein-Uhlenbeck update of (alpha_dot, beta_dot, omega3) over dt.
// Stationary variances kT/(I_x sin^2 b), kT/I_x, kT/I_z.
void langevin_update(EulerVector& y, const DampingRates& rates, double gas_temperature,
                     const ParticleParams& particle, double dt, Rng& rng);
EulerState langevin_update(const EulerState& s, const DampingRates& rates, double gas_temperature,
                           const ParticleParams& particle, double dt, Rng& rng);

// Poisson number of kicks in dt, each a Gaussian increment of RMS
// shot_kick_rms on alpha_dot, beta_dot and omega3.
void shot_noise_update(EulerVector& y, const NoiseConfig& cfg, double dt, Rng& rng);
EulerState shot_noise_update(const EulerState& s, const NoiseConfig& cfg, double dt, Rng& rng);

}  // namespace ndb
