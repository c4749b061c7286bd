#include "ndb/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "ndb/constants.hpp"
#include "ndb/errors.hpp"

namespace ndb {

namespace {

constexpr double pi = std::numbers::pi;

double wrap_phase(double phi) {
    phi = std::remainder(phi, 2.0 * pi);
    return phi <= -pi ? phi + 2.0 * pi : phi;
}

std::array<double, 2> unit(double x, double y) {
    const double n = std::hypot(x, y);
    return {x / n, y / n};
}

// Pick the better-conditioned of two parallel shape vectors, normalize, and
// orient so the xi weight is non-negative.
std::array<double, 2> pick_shape(double x1, double y1, double x2, double y2) {
    const double n1 = std::hypot(x1, y1), n2 = std::hypot(x2, y2);
    std::array<double, 2> s;
    if (std::max(n1, n2) == 0.0) {
        s = {std::numbers::sqrt2 / 2.0, std::numbers::sqrt2 / 2.0};
    } else if (n1 >= n2) {
        s = unit(x1, y1);
    } else {
        s = unit(x2, y2);
    }
    if (s[0] < 0.0 || (s[0] == 0.0 && s[1] < 0.0)) {
        s = {-s[0], -s[1]};
    }
    return s;
}

struct Row4 {
    double xi[4], eta[4], xi_dot[4], eta_dot[4];
};

// Design rows for the unknowns (p+, q+, p-, q-), a cos(d) = p, a sin(d) = q.
Row4 design_row(const ModeDecomposition& m, double t, double vel_scale) {
    const double wp = m.omega_plus, wm = m.omega_minus;
    const double cp = std::cos(wp * t), sp = std::sin(wp * t);
    const double cm = std::cos(wm * t), sm = std::sin(wm * t);
    const double ux = m.shape_plus[0], ue = m.shape_plus[1];
    const double vx = m.shape_minus[0], ve = m.shape_minus[1];
    Row4 r{{ux * cp, -ux * sp, vx * cm, -vx * sm},
           {ue * sp, ue * cp, -ve * sm, -ve * cm},
           {-ux * wp * sp, -ux * wp * cp, -vx * wm * sm, -vx * wm * cm},
           {ue * wp * cp, -ue * wp * sp, -ve * wm * cm, ve * wm * sm}};
    for (int k = 0; k < 4; ++k) {
        r.xi_dot[k] /= vel_scale;
        r.eta_dot[k] /= vel_scale;
    }
    return r;
}

ModeDecomposition with_coefficients(ModeDecomposition m, const Eigen::Vector4d& c, double t0) {
    m.a_plus = std::hypot(c[0], c[1]);
    m.a_minus = std::hypot(c[2], c[3]);
    m.A_plus = m.a_plus * m.shape_plus[0];
    m.A_minus = m.a_minus * m.shape_minus[0];
    m.delta_plus = wrap_phase(std::atan2(c[1], c[0]) - m.omega_plus * t0);
    m.delta_minus = wrap_phase(std::atan2(c[3], c[2]) - m.omega_minus * t0);
    return m;
}

}  // namespace

double coupling_frequency(const ParticleParams& particle, double omega3) {
    return particle.inertia_z / particle.inertia_x * omega3;
}

LinearModes normal_modes_linear(double omega, double omega_c) {
    LinearModes m;
    m.Omega = std::sqrt(4.0 * omega * omega + omega_c * omega_c);
    m.omega_plus = 0.5 * (m.Omega + omega_c);
    m.omega_minus = 0.5 * (m.Omega - omega_c);
    return m;
}

LinearModes precession_frequencies(double omega, double omega_c, double cos_psi) {
    return normal_modes_linear(omega, omega_c / cos_psi);
}

double ModeDecomposition::amplitude_ratio() const {
    const double hi = std::max(a_plus, a_minus);
    return hi > 0.0 ? std::min(a_plus, a_minus) / hi : 0.0;
}

ModeDecomposition normal_modes_elliptical(double omega_xi, double omega_eta, double omega_c) {
    if (omega_xi > omega_eta) {
        throw ParameterOrderViolation("normal modes need omega_eta >= omega_xi");
    }
    if (!(omega_xi > 0.0)) {
        throw ParameterOrderViolation("normal modes need omega_xi > 0");
    }
    const double xs = omega_xi * omega_xi, es = omega_eta * omega_eta, cs = omega_c * omega_c;
    ModeDecomposition m;
    const double d = cs + xs - es;
    m.Q = std::sqrt(4.0 * es * cs + d * d);
    const double sum = xs + es + cs;
    m.omega_plus = std::sqrt(0.5 * (sum + m.Q));
    // product of roots is exact; avoids cancellation in sum - Q
    m.omega_minus = omega_xi * omega_eta / m.omega_plus;
    const double wp = m.omega_plus, wm = m.omega_minus;
    m.shape_plus = pick_shape(omega_c * wp, wp * wp - xs, wp * wp - es, omega_c * wp);
    m.shape_minus = pick_shape(es - wm * wm, omega_c * wm, omega_c * wm, xs - wm * wm);
    m.kappa1 = m.shape_plus[1] / m.shape_plus[0];
    m.kappa2 = m.shape_minus[1] / m.shape_minus[0];
    if (omega_c == 0.0 && xs == es) {
        m.kappa1 = m.kappa2 = 1.0;
    }
    return m;
}

SmallAngleState mode_state(const ModeDecomposition& m, double t) {
    const double pp = m.omega_plus * t + m.delta_plus;
    const double pm = m.omega_minus * t + m.delta_minus;
    const double ap = m.a_plus, am = m.a_minus;
    const auto& u = m.shape_plus;
    const auto& v = m.shape_minus;
    SmallAngleState s;
    s.t = t;
    s.xi = ap * u[0] * std::cos(pp) + am * v[0] * std::cos(pm);
    s.eta = ap * u[1] * std::sin(pp) - am * v[1] * std::sin(pm);
    s.xi_dot = -ap * u[0] * m.omega_plus * std::sin(pp) - am * v[0] * m.omega_minus * std::sin(pm);
    s.eta_dot = ap * u[1] * m.omega_plus * std::cos(pp) - am * v[1] * m.omega_minus * std::cos(pm);
    return s;
}

ModeDecomposition project_modes(const SmallAngleState& s, const ModeDecomposition& freq) {
    const double scale = std::sqrt(freq.omega_plus * freq.omega_minus);
    const Row4 r = design_row(freq, 0.0, scale);
    Eigen::Matrix4d a;
    Eigen::Vector4d b(s.xi, s.eta, s.xi_dot / scale, s.eta_dot / scale);
    for (int k = 0; k < 4; ++k) {
        a(0, k) = r.xi[k];
        a(1, k) = r.eta[k];
        a(2, k) = r.xi_dot[k];
        a(3, k) = r.eta_dot[k];
    }
    const Eigen::Vector4d c = a.fullPivLu().solve(b);
    return with_coefficients(freq, c, s.t);
}

ModeDecomposition fit_modes(const std::vector<SmallAngleState>& window, const ModeDecomposition& freq,
                            const ModeFitOptions& options) {
    if (window.size() < 8) {
        throw FitDegenerate("mode fit needs at least 8 samples");
    }
    const double t0 = window.front().t;
    const double span = window.back().t - t0;
    const double needed = options.min_cycles * 2.0 * pi / freq.omega_minus;
    if (span < needed * (1.0 - 1e-9)) {
        throw FitDegenerate("mode fit window spans fewer than the required cycles of omega_minus");
    }
    const double scale = std::sqrt(freq.omega_plus * freq.omega_minus);
    Eigen::Matrix4d ata = Eigen::Matrix4d::Zero();
    Eigen::Vector4d atb = Eigen::Vector4d::Zero();
    double signal_sq = 0.0;
    auto accumulate = [&](const double* row, double value) {
        const Eigen::Map<const Eigen::Vector4d> v(row);
        ata.noalias() += v * v.transpose();
        atb += value * v;
        signal_sq += value * value;
    };
    for (const auto& s : window) {
        const Row4 r = design_row(freq, s.t - t0, scale);
        accumulate(r.xi, s.xi);
        accumulate(r.eta, s.eta);
        accumulate(r.xi_dot, s.xi_dot / scale);
        accumulate(r.eta_dot, s.eta_dot / scale);
    }
    const Eigen::Vector4d c = ata.ldlt().solve(atb);
    double resid_sq = 0.0;
    for (const auto& s : window) {
        const Row4 r = design_row(freq, s.t - t0, scale);
        auto dot = [&](const double* row) {
            return row[0] * c[0] + row[1] * c[1] + row[2] * c[2] + row[3] * c[3];
        };
        const double e0 = dot(r.xi) - s.xi, e1 = dot(r.eta) - s.eta;
        const double e2 = dot(r.xi_dot) - s.xi_dot / scale, e3 = dot(r.eta_dot) - s.eta_dot / scale;
        resid_sq += e0 * e0 + e1 * e1 + e2 * e2 + e3 * e3;
    }
    ModeDecomposition m = with_coefficients(freq, c, t0);
    m.residual_rms = signal_sq > 0.0 ? std::sqrt(resid_sq / signal_sq) : 0.0;
    if (m.residual_rms > options.max_residual) {
        throw FitDegenerate("mode fit residual " + std::to_string(m.residual_rms) + " exceeds limit");
    }
    return m;
}

double cooling_power_linear(double A_plus, double A_minus, double omega, double omega_c, double chi,
                            double radius, double inertia_x) {
    const double big_omega_sq = 4.0 * omega * omega + omega_c * omega_c;
    const double ap = A_plus * A_minus;
    return -0.25 * inertia_x * omega * omega * chi * radius * radius * big_omega_sq * ap * ap;
}

CoolingCoefficients cooling_coefficients(const EllipticalParams& p) {
    const ModeDecomposition m = normal_modes_elliptical(p.omega_xi, p.omega_eta, p.omega_c);
    const double c = p.inertia_x * p.chi * p.radius * p.radius / 8.0;
    const double xs = p.omega_xi * p.omega_xi, es = p.omega_eta * p.omega_eta;
    const double wp = m.omega_plus, wm = m.omega_minus;
    const double k1 = m.kappa1, k2 = m.kappa2;
    const double k1s = k1 * k1, k2s = k2 * k2;
    CoolingCoefficients r;
    r.y1 = c * wp * wp * (k1s * es - xs);
    r.y2 = c * wm * wm * (xs - k2s * es);
    r.y3 = c * (2.0 * xs * (wp * wp + wm * wm) + 4.0 * k1 * k2 * es * wp * wm);
    r.z1 = c * wp * wp * k1s * (k1s * es - xs);
    r.z2 = c * wm * wm * k2s * (xs - k2s * es);
    r.z3 = c * k1 * k2 * (4.0 * xs * wp * wm + 2.0 * k1 * k2 * es * (wp * wp + wm * wm));
    return r;
}

double cooling_power_elliptical(double A_plus, double A_minus, const EllipticalParams& p, FeedbackSignal signal) {
    const CoolingCoefficients k = cooling_coefficients(p);
    const double p4 = std::pow(A_plus, 4), m4 = std::pow(A_minus, 4);
    const double pm2 = A_plus * A_plus * A_minus * A_minus;
    const double xi_rate = p4 * k.y1 - m4 * k.y2 - pm2 * k.y3;
    const double eta_rate = -p4 * k.z1 + m4 * k.z2 - pm2 * k.z3;
    switch (signal) {
    case FeedbackSignal::xi: return xi_rate;
    case FeedbackSignal::eta: return eta_rate;
    case FeedbackSignal::sum: return xi_rate + eta_rate;
    default: throw ValidationError("cooling rate defined only for xi, eta and sum signals");
    }
}

double conserved_precession_quantity(const SmallAngleState& s, double omega_c) {
    return s.xi * s.eta_dot - s.eta * s.xi_dot - 0.5 * omega_c * (s.xi * s.xi + s.eta * s.eta);
}

SmallAngleParams small_angle_params(const LibrationFrequencies& f, double omega_c) {
    return {f.xi_sq, f.eta_sq, omega_c};
}

SmallAngleState small_angle_derivative(const SmallAngleState& s, const SmallAngleParams& p, double modulation) {
    const auto d = small_angle_rhs(p, {s.xi, s.eta, s.xi_dot, s.eta_dot}, modulation);
    return {d[0], d[1], d[2], d[3], s.t};
}

double radiation_force(const ParticleParams& particle, const TrapParams& trap) {
    const double x = 2.0 * pi * particle.radius / trap.wavelength;
    const double na = trap.numerical_aperture;
    return 4.0 / 3.0 * trap.power * na * na / constants::speed_of_light * std::pow(x, 6) * particle.alpha_bar *
           particle.alpha_bar;
}

double axial_displacement_ratio(const ParticleParams& particle, const TrapParams& trap) {
    if (!(trap.numerical_aperture > 0.0)) {
        throw ValidationError("numerical aperture must be positive");
    }
    const double x = pi * particle.radius / trap.wavelength;
    const double na = trap.numerical_aperture;
    return 32.0 * particle.alpha_bar / 3.0 * x * x * x / (na * na);
}

}  // namespace ndb
