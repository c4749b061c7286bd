#include "ndb/physics.hpp"

#include <cmath>
#include <string>

#include "ndb/constants.hpp"

namespace ndb {

namespace {

constexpr double pi = constants::pi;

double sq(double x) { return x * x; }

}  // namespace

DepolarizationFactors spheroid_depolarization(double aspect_ratio) {
    if (!(aspect_ratio > 0.0)) {
        throw InvalidMaterial("spheroid aspect ratio must be positive");
    }
    DepolarizationFactors f;
    if (std::abs(aspect_ratio - 1.0) < 1e-12) {
        return f;
    }
    double lz = 0.0;
    if (aspect_ratio > 1.0) {
        const double e = std::sqrt(1.0 - 1.0 / sq(aspect_ratio));
        lz = (1.0 - e * e) / (e * e * e) * (std::atanh(e) - e);
    } else {
        const double e = std::sqrt(1.0 / sq(aspect_ratio) - 1.0);
        lz = (1.0 + e * e) / (e * e * e) * (e - std::atan(e));
    }
    f.z = lz;
    f.x = f.y = 0.5 * (1.0 - lz);
    return f;
}

Polarizabilities ellipsoid_polarizabilities(const ParticleParams& particle, double aspect_ratio) {
    if (!(particle.refractive_index > 1.0)) {
        throw InvalidMaterial("refractive index must exceed 1, got " +
                              std::to_string(particle.refractive_index));
    }
    if (!(particle.radius > 0.0)) {
        throw InvalidMaterial("radius must be positive");
    }
    const double eps_r = sq(particle.refractive_index);
    const double volume = 2.0 * (4.0 / 3.0) * pi * std::pow(particle.radius, 3);
    const auto depol = spheroid_depolarization(aspect_ratio);
    auto component = [&](double l) {
        return constants::vacuum_permittivity * volume * (eps_r - 1.0) / (1.0 + l * (eps_r - 1.0));
    };
    return {component(depol.x), component(depol.z)};
}

ParticleParams ParticleParams::from_geometry(double radius, double total_mass, double refractive_index,
                                             double density, double alpha_bar,
                                             std::optional<Polarizabilities> override_alpha) {
    ParticleParams p;
    p.radius = radius;
    p.sphere_mass = 0.5 * total_mass;
    p.refractive_index = refractive_index;
    p.density = density;
    p.alpha_bar = alpha_bar;
    p.inertia_x = 14.0 / 5.0 * p.sphere_mass * sq(radius);
    p.inertia_z = 4.0 / 5.0 * p.sphere_mass * sq(radius);
    const auto alpha = override_alpha ? *override_alpha : ellipsoid_polarizabilities(p);
    p.polarizability_x = alpha.x;
    p.polarizability_z = alpha.z;
    p.validate();
    return p;
}

ParticleParams ParticleParams::paper_default() {
    return from_geometry(85e-9, 1.029e-17, 1.458, 2000.0, 0.59);
}

void ParticleParams::validate() const {
    if (!(radius > 0.0) || !(sphere_mass > 0.0)) {
        throw ValidationError("particle radius and mass must be positive");
    }
    if (!(inertia_x > inertia_z && inertia_z > 0.0)) {
        throw ValidationError("particle requires I_x > I_z > 0");
    }
    if (!(polarizability_z > polarizability_x && polarizability_x > 0.0)) {
        throw ValidationError("particle requires alpha_z > alpha_x > 0");
    }
}

void TrapParams::validate() const {
    if (!(ellipticity >= 0.0 && ellipticity < pi / 4.0)) {
        throw ValidationError("trap.theta must lie in [0, pi/4) so that omega_xi^2 > 0, got " +
                              std::to_string(ellipticity));
    }
    if (!(wavelength > 0.0)) {
        throw ValidationError("trap.wavelength must be positive");
    }
    if (field_mode == FieldMode::derived) {
        if (!(power > 0.0)) {
            throw ValidationError("trap.power must be positive");
        }
        if (!(numerical_aperture > 0.0 && numerical_aperture < 1.0)) {
            throw ValidationError("trap.na must lie in (0, 1)");
        }
    }
    if (field_mode == FieldMode::calibrated && !(target_frequency > 0.0)) {
        throw ValidationError("trap.omega_target must be positive");
    }
    if (field_mode == FieldMode::direct && !(field_amplitude > 0.0)) {
        throw ValidationError("trap.e0 must be positive in direct field mode");
    }
}

double TrapParams::target_omega() const {
    return convention == FrequencyConvention::angular ? target_frequency : 2.0 * pi * target_frequency;
}

double field_amplitude(const TrapParams& trap) {
    const double waist = trap.wavelength / (pi * trap.numerical_aperture);
    return std::sqrt(4.0 * trap.power /
                     (pi * sq(waist) * constants::speed_of_light * constants::vacuum_permittivity));
}

TrapParams resolve_field(TrapParams trap, const ParticleParams& particle) {
    trap.validate();
    switch (trap.field_mode) {
    case FieldMode::derived:
        trap.field_amplitude = field_amplitude(trap);
        break;
    case FieldMode::calibrated:
        trap.field_amplitude = std::sqrt(2.0 * particle.inertia_x * sq(trap.target_omega()) /
                                         particle.polarizability_anisotropy());
        break;
    case FieldMode::direct:
        break;
    }
    return trap;
}

LibrationFrequencies libration_frequencies(const TrapParams& trap, const ParticleParams& particle) {
    LibrationFrequencies f;
    f.omega_sq = particle.polarizability_anisotropy() * sq(trap.field_amplitude) / (2.0 * particle.inertia_x);
    const double c2 = sq(std::cos(trap.ellipticity));
    const double s2 = sq(std::sin(trap.ellipticity));
    f.xi_sq = f.omega_sq * (c2 - s2);
    f.eta_sq = f.omega_sq * c2;
    return f;
}

RotorModel::RotorModel(const ParticleParams& particle, const TrapParams& trap)
    : inertia_x(particle.inertia_x),
      inertia_z(particle.inertia_z),
      inertia_ratio(particle.inertia_z / particle.inertia_x),
      depth(0.25 * sq(trap.field_amplitude) * particle.polarizability_anisotropy()),
      isotropic(0.25 * sq(trap.field_amplitude) * particle.polarizability_x),
      cos_sq(sq(std::cos(trap.ellipticity))),
      sin_sq(sq(std::sin(trap.ellipticity))) {}

double RotorModel::potential(double alpha, double beta) const {
    const double sb = std::sin(beta);
    return -isotropic - depth * sb * sb * (cos_sq * sq(std::cos(alpha)) + sin_sq * sq(std::sin(alpha)));
}

double RotorModel::potential_above_minimum(double alpha, double beta) const {
    const double sb2 = sq(std::sin(beta));
    const double cb2 = sq(std::cos(beta));
    const double sa2 = sq(std::sin(alpha));
    return depth * (cos_sq * cb2 + (cos_sq - sin_sq) * sb2 * sa2);
}

PotentialGradient RotorModel::gradient(double alpha, double beta) const {
    const double sa = std::sin(alpha), ca = std::cos(alpha);
    const double sb = std::sin(beta), cb = std::cos(beta);
    return {depth * sb * sb * 2.0 * sa * ca * (cos_sq - sin_sq),
            -2.0 * depth * sb * cb * (cos_sq * ca * ca + sin_sq * sa * sa)};
}

Eigen::Matrix3d rotation_matrix(double alpha, double beta, double gamma) {
    auto about_z = [](double a) {
        Eigen::Matrix3d m;
        m << std::cos(a), std::sin(a), 0.0, -std::sin(a), std::cos(a), 0.0, 0.0, 0.0, 1.0;
        return m;
    };
    Eigen::Matrix3d about_y;
    about_y << std::cos(beta), 0.0, -std::sin(beta), 0.0, 1.0, 0.0, std::sin(beta), 0.0, std::cos(beta);
    return about_z(gamma) * about_y * about_z(alpha);
}

BodyRates body_angular_velocity(const EulerState& s) {
    const double sg = std::sin(s.gamma), cg = std::cos(s.gamma);
    const double sb = std::sin(s.beta);
    return {s.beta_dot * sg - s.alpha_dot * sb * cg, s.beta_dot * cg + s.alpha_dot * sb * sg, s.omega3};
}

std::array<double, 2> euler_rates_from_body(double w1, double w2, double beta, double gamma) {
    const double sg = std::sin(gamma), cg = std::cos(gamma);
    const double beta_dot = w1 * sg + w2 * cg;
    const double alpha_dot = (w2 * sg - w1 * cg) / std::sin(beta);
    return {alpha_dot, beta_dot};
}

Eigen::Vector3d symmetry_axis(double alpha, double beta) {
    const double sb = std::sin(beta);
    return {sb * std::cos(alpha), sb * std::sin(alpha), std::cos(beta)};
}

Eigen::Vector3d lab_angular_velocity(const EulerState& s) {
    const double sa = std::sin(s.alpha), ca = std::cos(s.alpha);
    const Eigen::Vector3d y_prime(-sa, ca, 0.0);
    return s.alpha_dot * Eigen::Vector3d::UnitZ() + s.beta_dot * y_prime +
           s.gamma_dot() * symmetry_axis(s.alpha, s.beta);
}

Eigen::Vector3d angular_momentum(const EulerState& s, const ParticleParams& particle) {
    const Eigen::Vector3d n = symmetry_axis(s.alpha, s.beta);
    const Eigen::Vector3d w = lab_angular_velocity(s);
    return particle.inertia_x * (w - s.omega3 * n) + particle.inertia_z * s.omega3 * n;
}

double potential_energy(const EulerState& s, const TrapParams& trap, const ParticleParams& particle) {
    return RotorModel(particle, trap).potential(s.alpha, s.beta);
}

double kinetic_energy(const EulerState& s, const ParticleParams& particle) {
    const double sb = std::sin(s.beta);
    return 0.5 * particle.inertia_x * (sq(s.alpha_dot * sb) + sq(s.beta_dot)) +
           0.5 * particle.inertia_z * sq(s.omega3);
}

double librational_energy(const EulerState& s, const RotorModel& model) {
    const double sb = std::sin(s.beta);
    return 0.5 * model.inertia_x * (sq(s.alpha_dot * sb) + sq(s.beta_dot)) +
           model.potential_above_minimum(s.alpha, s.beta);
}

double shifted_energy_kelvin(const EulerState& s, const RotorModel& model) {
    return librational_energy(s, model) / constants::boltzmann;
}

double shifted_energy_kelvin(const EulerState& s, const TrapParams& trap, const ParticleParams& particle) {
    return shifted_energy_kelvin(s, RotorModel(particle, trap));
}

double total_energy_above_minimum(const EulerState& s, const RotorModel& model) {
    return librational_energy(s, model) + 0.5 * model.inertia_z * sq(s.omega3);
}

Eigen::Vector3d polarization_vector(const EulerState& s, const TrapParams& trap,
                                    const ParticleParams& particle) {
    const double amp = particle.polarizability_anisotropy() * trap.field_amplitude;
    const double sa = std::sin(s.alpha), ca = std::cos(s.alpha);
    const double sb = std::sin(s.beta), cb = std::cos(s.beta);
    return amp * Eigen::Vector3d(ca * ca * sb * sb, sb * sb * ca * sa, cb * sb * ca);
}

PotentialGradient potential_gradient(double alpha, double beta, const TrapParams& trap,
                                     const ParticleParams& particle) {
    return RotorModel(particle, trap).gradient(alpha, beta);
}

EulerDerivatives eom_rhs(const EulerState& s, const RotorModel& model, double modulation) {
    const auto d = euler_derivative_vector(model, to_vector(s), modulation);
    return {d[0], d[1], d[2], d[3], d[4]};
}

EulerDerivatives eom_rhs(const EulerState& s, const TrapParams& trap, const ParticleParams& particle,
                         double modulation) {
    return eom_rhs(s, RotorModel(particle, trap), modulation);
}

SmallAngleState tip_coordinates(const EulerState& s) {
    const double sa = std::sin(s.alpha), ca = std::cos(s.alpha);
    const double sb = std::sin(s.beta), cb = std::cos(s.beta);
    const double sign = sb * ca < 0.0 ? -1.0 : 1.0;
    SmallAngleState q;
    q.xi = sign * sb * sa;
    q.eta = cb;
    q.xi_dot = sign * (cb * s.beta_dot * sa + sb * ca * s.alpha_dot);
    q.eta_dot = -sb * s.beta_dot;
    q.t = s.t;
    return q;
}

double precession_invariant(const EulerState& s, const ParticleParams& particle) {
    const Eigen::Vector3d l = angular_momentum(s, particle);
    const double sign = symmetry_axis(s.alpha, s.beta).x() < 0.0 ? -1.0 : 1.0;
    return (sign * l.x() - particle.inertia_z * s.omega3) / particle.inertia_x;
}

}  // namespace ndb
