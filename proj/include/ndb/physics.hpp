#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <optional>

#include <Eigen/Core>

#include "ndb/errors.hpp"

namespace ndb {

template <std::size_t N>
using StateVector = std::array<double, N>;

// Distance from the coordinate poles (in |sin(beta)|) below which the Euler
// equations are declared singular and the trajectory is flagged as escaped.
inline constexpr double beta_guard = 1e-6;

struct Polarizabilities {
    double x = 0.0;  // perpendicular to the symmetry axis (C m^2 / V)
    double z = 0.0;  // along the symmetry axis
};

struct DepolarizationFactors {
    double x = 1.0 / 3.0;
    double y = 1.0 / 3.0;
    double z = 1.0 / 3.0;
};

// Depolarization factors of a spheroid with symmetry-axis-to-equatorial
// semi-axis ratio `aspect_ratio` (> 1 prolate, < 1 oblate).
DepolarizationFactors spheroid_depolarization(double aspect_ratio);

// Two touching spheres of radius R and mass M_s along the body z axis.
struct ParticleParams {
    double radius = 85e-9;
    double sphere_mass = 0.5 * 1.029e-17;
    double refractive_index = 1.458;
    double density = 2000.0;
    double inertia_x = 0.0;
    double inertia_z = 0.0;
    double polarizability_x = 0.0;
    double polarizability_z = 0.0;
    double alpha_bar = 0.59;

    // Inertia from the two-sphere geometry; polarizabilities from the
    // spheroid model unless `override_alpha` is given.
    static ParticleParams from_geometry(double radius, double total_mass, double refractive_index,
                                        double density, double alpha_bar,
                                        std::optional<Polarizabilities> override_alpha = {});
    static ParticleParams paper_default();

    double total_mass() const { return 2.0 * sphere_mass; }
    double polarizability_anisotropy() const { return polarizability_z - polarizability_x; }
    double inertia_ratio() const { return inertia_z / inertia_x; }
    void validate() const;
};

// alpha_j = eps0 V (eps_r - 1) / (1 + L_j (eps_r - 1)) for a spheroid with the
// dumbbell's volume V = 2 (4/3) pi R^3; eps_r = n^2.
Polarizabilities ellipsoid_polarizabilities(const ParticleParams& particle, double aspect_ratio = 2.0);

enum class FieldMode { calibrated, derived, direct };
enum class FrequencyConvention { angular, cyclic };

struct TrapParams {
    double wavelength = 1550e-9;
    double power = 0.5;
    double numerical_aperture = 0.45;
    double ellipticity = 0.0;  // theta; E_inc = E0 (cos theta, i sin theta, 0)
    FieldMode field_mode = FieldMode::calibrated;
    // Used by FieldMode::calibrated: E0 is chosen so the theta = 0 libration
    // frequency equals this value, read in `convention` units.
    double target_frequency = 2.19e6;
    FrequencyConvention convention = FrequencyConvention::angular;
    double field_amplitude = 0.0;  // E0 (V/m); resolved by resolve_field

    void validate() const;
    double target_omega() const;
};

// E0 = sqrt(4 P / (pi w0^2 c eps0)), w0 = lambda / (pi NA).
double field_amplitude(const TrapParams& trap);

// Returns `trap` with field_amplitude filled in according to field_mode.
TrapParams resolve_field(TrapParams trap, const ParticleParams& particle);

struct LibrationFrequencies {
    double omega_sq = 0.0;  // (alpha_z - alpha_x) E0^2 / (2 I_x)
    double xi_sq = 0.0;     // omega^2 (cos^2 - sin^2)
    double eta_sq = 0.0;    // omega^2 cos^2
    double omega() const { return std::sqrt(omega_sq); }
    double omega_xi() const { return std::sqrt(xi_sq); }
    double omega_eta() const { return std::sqrt(eta_sq); }
};

LibrationFrequencies libration_frequencies(const TrapParams& trap, const ParticleParams& particle);

struct EulerState {
    double alpha = 0.0;
    double beta = 0.0;
    double gamma = 0.0;
    double alpha_dot = 0.0;
    double beta_dot = 0.0;
    double omega3 = 0.0;  // spin about the symmetry axis
    double t = 0.0;

    double gamma_dot() const { return omega3 - alpha_dot * std::cos(beta); }
};

struct SmallAngleState {
    double xi = 0.0;
    double eta = 0.0;
    double xi_dot = 0.0;
    double eta_dot = 0.0;
    double t = 0.0;
};

struct BodyRates {
    double w1 = 0.0;
    double w2 = 0.0;
    double w3 = 0.0;
};

struct EulerDerivatives {
    double alpha_dot = 0.0;
    double beta_dot = 0.0;
    double gamma_dot = 0.0;
    double alpha_ddot = 0.0;
    double beta_ddot = 0.0;
};

struct PotentialGradient {
    double d_alpha = 0.0;
    double d_beta = 0.0;
};

// Constants of one particle in one trap, precomputed for the inner loop.
struct RotorModel {
    double inertia_x = 0.0;
    double inertia_z = 0.0;
    double inertia_ratio = 0.0;  // I_z / I_x
    double depth = 0.0;          // E0^2 (alpha_z - alpha_x) / 4
    double isotropic = 0.0;      // E0^2 alpha_x / 4
    double cos_sq = 1.0;         // cos^2 theta
    double sin_sq = 0.0;         // sin^2 theta

    RotorModel() = default;
    RotorModel(const ParticleParams& particle, const TrapParams& trap);

    // U(alpha, beta) including the constant -(E0^2/4) alpha_x term.
    double potential(double alpha, double beta) const;
    // U - U(0, pi/2) written without cancellation; >= 0 for theta < pi/4.
    double potential_above_minimum(double alpha, double beta) const;
    double potential_minimum() const { return -isotropic - depth * cos_sq; }
    PotentialGradient gradient(double alpha, double beta) const;
};

Eigen::Matrix3d rotation_matrix(double alpha, double beta, double gamma);

BodyRates body_angular_velocity(const EulerState& s);

// Inverts the body-rate relations for (alpha_dot, beta_dot) at given beta, gamma.
std::array<double, 2> euler_rates_from_body(double w1, double w2, double beta, double gamma);

// Lab-frame unit vector along the body symmetry axis.
Eigen::Vector3d symmetry_axis(double alpha, double beta);

// Lab-frame angular velocity and angular momentum.
Eigen::Vector3d lab_angular_velocity(const EulerState& s);
Eigen::Vector3d angular_momentum(const EulerState& s, const ParticleParams& particle);

double potential_energy(const EulerState& s, const TrapParams& trap, const ParticleParams& particle);
double kinetic_energy(const EulerState& s, const ParticleParams& particle);
// Energy of the two librational coordinates, spin energy excluded (J).
double librational_energy(const EulerState& s, const RotorModel& model);
double shifted_energy_kelvin(const EulerState& s, const TrapParams& trap, const ParticleParams& particle);
double shifted_energy_kelvin(const EulerState& s, const RotorModel& model);
// K + U - U(0, pi/2), spin energy included (J).
double total_energy_above_minimum(const EulerState& s, const RotorModel& model);

// Anisotropic part of the induced dipole under linear polarization
// (the isotropic alpha_x E0 x-hat term omitted).
Eigen::Vector3d polarization_vector(const EulerState& s, const TrapParams& trap,
                                    const ParticleParams& particle);

PotentialGradient potential_gradient(double alpha, double beta, const TrapParams& trap,
                                     const ParticleParams& particle);

// Full Euler-angle equations with the potential torque scaled by
// `modulation`. Throws SingularityGuard when |sin(beta)| <= beta_guard.
EulerDerivatives eom_rhs(const EulerState& s, const TrapParams& trap, const ParticleParams& particle,
                         double modulation = 1.0);
EulerDerivatives eom_rhs(const EulerState& s, const RotorModel& model, double modulation = 1.0);

// Integrator layout: (alpha, beta, gamma, alpha_dot, beta_dot, omega3).
// omega3 rides along with zero derivative so noise kicks can change it.
using EulerVector = StateVector<6>;

inline EulerVector to_vector(const EulerState& s) {
    return {s.alpha, s.beta, s.gamma, s.alpha_dot, s.beta_dot, s.omega3};
}

inline EulerState from_vector(const EulerVector& y, double t) {
    return {y[0], y[1], y[2], y[3], y[4], y[5], t};
}

inline EulerVector euler_derivative_vector(const RotorModel& m, const EulerVector& y, double modulation) {
    const double sa = std::sin(y[0]), ca = std::cos(y[0]);
    const double sb = std::sin(y[1]), cb = std::cos(y[1]);
    if (std::abs(sb) <= beta_guard) {
        throw SingularityGuard("|sin(beta)| fell below the coordinate guard");
    }
    const double ad = y[3], bd = y[4], w3 = y[5];
    const double wc = m.inertia_ratio * w3;
    const double inv_sb = 1.0 / sb;
    // dU/dalpha = depth sin^2(b) sin(2a) (cos^2 - sin^2), dU/dbeta below.
    const double du_da = m.depth * sb * sb * 2.0 * sa * ca * (m.cos_sq - m.sin_sq);
    const double du_db = -2.0 * m.depth * sb * cb * (m.cos_sq * ca * ca + m.sin_sq * sa * sa);
    const double scale = modulation / m.inertia_x;
    EulerVector d;
    d[0] = ad;
    d[1] = bd;
    d[2] = w3 - ad * cb;
    d[3] = -2.0 * ad * bd * cb * inv_sb + bd * inv_sb * wc - scale * du_da * inv_sb * inv_sb;
    d[4] = sb * (ad * ad * cb - ad * wc) - scale * du_db;
    d[5] = 0.0;
    return d;
}

// Deviation of alpha from the nearer potential minimum in {0, pi} (mod pi).
inline double folded_xi(double alpha) {
    return alpha - std::numbers::pi * std::nearbyint(alpha / std::numbers::pi);
}

// Tip displacement (xi_t, eta_t) = (s n_y, n_z), s = sign(n_x), and its rate.
// Equal to (xi, eta) to first order and exactly circular for pure precession.
SmallAngleState tip_coordinates(const EulerState& s);

// Exact analogue of the small-angle precession invariant: (s L_x - I_z w3) / I_x.
// Conserved under any feedback when theta = 0.
double precession_invariant(const EulerState& s, const ParticleParams& particle);

}  // namespace ndb
