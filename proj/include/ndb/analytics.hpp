#pragma once

#include <array>
#include <vector>

#include "ndb/physics.hpp"
#include "ndb/signals.hpp"

namespace ndb {

double coupling_frequency(const ParticleParams& particle, double omega3);

struct LinearModes {
    double omega_plus = 0.0;
    double omega_minus = 0.0;
    double Omega = 0.0;  // sqrt(4 w^2 + wc^2) = w+ + w-
};

LinearModes normal_modes_linear(double omega, double omega_c);

// Normal modes of the linearized tip motion
//   xi  = A+ cos(w+ t + d+) + A- cos(w- t + d-)
//   eta = A+ k1 sin(w+ t + d+) - A- k2 sin(w- t + d-)
// a_plus / a_minus are the amplitudes along the unit mode shapes
// (so a+^2 = A+^2 (1 + k1^2)); they stay finite when a shape is pure eta.
struct ModeDecomposition {
    double A_plus = 0.0;
    double A_minus = 0.0;
    double delta_plus = 0.0;
    double delta_minus = 0.0;
    double omega_plus = 0.0;
    double omega_minus = 0.0;
    double kappa1 = 1.0;
    double kappa2 = 1.0;
    double Q = 0.0;
    double a_plus = 0.0;
    double a_minus = 0.0;
    double residual_rms = 0.0;   // fit residual / signal RMS
    std::array<double, 2> shape_plus{};   // unit (xi, eta) weights of the + mode
    std::array<double, 2> shape_minus{};  // unit (xi, -eta) weights of the - mode

    double amplitude_ratio() const;
};

// Frequencies, Q and kappa for omega_eta >= omega_xi > 0. Also fills the
// mode shapes; amplitudes are left at zero.
ModeDecomposition normal_modes_elliptical(double omega_xi, double omega_eta, double omega_c);

// Steady precession of the full rotor at cone angle psi about the field
// (theta = 0): W^2 - (wc / cos psi) W - w^2 = 0.
LinearModes precession_frequencies(double omega, double omega_c, double cos_psi);

// Small-angle state produced by `modes` at time t.
SmallAngleState mode_state(const ModeDecomposition& modes, double t);

// Exact amplitudes and phases from one instantaneous state.
ModeDecomposition project_modes(const SmallAngleState& s, const ModeDecomposition& frequencies);

struct ModeFitOptions {
    double min_cycles = 10.0;      // window length in periods of w-
    double max_residual = 0.1;     // relative to signal RMS
};

// Linear least-squares fit of amplitudes and phases with the frequencies
// and shapes of `frequencies` held fixed. Throws FitDegenerate.
ModeDecomposition fit_modes(const std::vector<SmallAngleState>& window, const ModeDecomposition& frequencies,
                            const ModeFitOptions& options = {});

// <P> for q qdot = xi xidot under linear polarization.
double cooling_power_linear(double A_plus, double A_minus, double omega, double omega_c, double chi,
                            double radius, double inertia_x);

struct CoolingCoefficients {
    double y1 = 0.0, y2 = 0.0, y3 = 0.0;
    double z1 = 0.0, z2 = 0.0, z3 = 0.0;
};

struct EllipticalParams {
    double omega_xi = 0.0;
    double omega_eta = 0.0;
    double omega_c = 0.0;
    double chi = 0.0;
    double radius = 0.0;
    double inertia_x = 0.0;
};

// Cycle-averaged rate coefficients (closed forms, see tests for the
// numerical-average cross-check). Throws ParameterOrderViolation.
CoolingCoefficients cooling_coefficients(const EllipticalParams& p);

// <P> for the chosen signal; `sum` adds the xi and eta rates.
double cooling_power_elliptical(double A_plus, double A_minus, const EllipticalParams& p, FeedbackSignal signal);

// xi eta_dot - eta xi_dot - (wc/2)(xi^2 + eta^2).
double conserved_precession_quantity(const SmallAngleState& s, double omega_c);

struct SmallAngleParams {
    double omega_xi_sq = 0.0;
    double omega_eta_sq = 0.0;
    double omega_c = 0.0;
};

SmallAngleParams small_angle_params(const LibrationFrequencies& f, double omega_c);

// d/dt (xi, eta, xi_dot, eta_dot) with restoring terms scaled by `modulation`.
inline StateVector<4> small_angle_rhs(const SmallAngleParams& p, const StateVector<4>& y, double modulation) {
    return {y[2], y[3], -p.omega_xi_sq * modulation * y[0] - p.omega_c * y[3],
            -p.omega_eta_sq * modulation * y[1] + p.omega_c * y[2]};
}

SmallAngleState small_angle_derivative(const SmallAngleState& s, const SmallAngleParams& p, double modulation);

// Axial radiation force on the particle in the point-dipole limit (N).
double radiation_force(const ParticleParams& particle, const TrapParams& trap);

// z_d / z_R = (32 abar / 3) (pi R / lambda)^3 / NA^2.
double axial_displacement_ratio(const ParticleParams& particle, const TrapParams& trap);

}  // namespace ndb
