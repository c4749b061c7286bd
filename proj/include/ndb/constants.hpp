#pragma once

#include <numbers>

namespace ndb::constants {

inline constexpr double pi = std::numbers::pi;
inline constexpr double boltzmann = 1.380649e-23;        // J/K
inline constexpr double speed_of_light = 299792458.0;    // m/s
inline constexpr double vacuum_permittivity = 8.8541878128e-12;  // F/m
inline constexpr double planck = 6.62607015e-34;         // J s
inline constexpr double hbar = planck / (2.0 * pi);
inline constexpr double pascal_per_torr = 101325.0 / 760.0;
inline constexpr double atomic_mass = 1.66053906660e-27;  // kg

}  // namespace ndb::constants
