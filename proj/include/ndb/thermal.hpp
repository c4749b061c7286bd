#pragma once

#include <cstdint>
#include <random>

#include "ndb/physics.hpp"

namespace ndb {

using Rng = std::mt19937_64;

// Independent stream for trajectory `index` of an ensemble seeded by `master`.
Rng make_stream(std::uint64_t master, std::uint64_t index);

struct ThermalConfig {
    double temperature = 300.0;
    std::uint64_t seed = 20190611;
    std::uint64_t rejection_cap = 10'000'000;  // proposals per orientation
    // Drop the sin(beta) Jacobian from the orientation density.
    bool literal_eq26 = false;

    void validate() const;
};

struct OrientationSample {
    double alpha = 0.0;
    double beta = 0.0;
    double gamma = 0.0;
    std::uint64_t proposals = 0;
};

// Body rates w_i = sqrt(kT / I_i) N(0,1).
BodyRates sample_angular_velocities(const ThermalConfig& cfg, const ParticleParams& particle, Rng& rng);

// Density ~ sin(beta) exp(-(U - U_min)/kT) by rejection. Proposals are
// uniform on the quarter sphere alpha in [-pi/2, pi/2], beta in [0, pi/2]
// (cos beta uniform), then mirrored to the other minimum and hemisphere
// using the symmetries of U. Throws RejectionCapExceeded.
OrientationSample sample_orientation(const ThermalConfig& cfg, const RotorModel& model, Rng& rng);

EulerState sample_state(const ThermalConfig& cfg, const RotorModel& model, Rng& rng,
                        std::uint64_t* proposals = nullptr);

}  // namespace ndb
