#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "ndb/physics.hpp"
#include "ndb/signals.hpp"

namespace ndb {

struct ChiStep {
    double t_start = 0.0;     // s
    double multiplier = 1.0;  // applied to the base chi from t_start on
};

struct FeedbackConfig {
    FeedbackSignal signal = FeedbackSignal::sum;
    double chi = 1e7;  // s / m^2
    std::vector<ChiStep> schedule;
    double radius = 85e-9;
    // RMS error (rad) added to the measured xi and eta, redrawn once per
    // accepted step. Off by default.
    double measurement_noise = 0.0;

    void validate() const;

    // x10 every ms from 3 ms: 1e7 -> 1e12 from 7 ms on.
    static std::vector<ChiStep> staged_schedule();
};

double chi_at(double t, const FeedbackConfig& cfg);

inline double modulation(double qqdot, double chi, double radius) {
    return 1.0 + chi * radius * radius * qqdot;
}

// q qdot from the Euler-angle state vector. xi is alpha folded to the nearer
// minimum, eta = pi/2 - beta. The py signal is sin^2(b) cos(a) sin(a) times
// its rate, i.e. p_y p_y_dot / ((a_z - a_x) E0)^2.
inline double feedback_signal(const EulerVector& y, FeedbackSignal choice, double xi_offset = 0.0,
                              double eta_offset = 0.0) {
    switch (choice) {
    case FeedbackSignal::off: return 0.0;
    case FeedbackSignal::xi: return (folded_xi(y[0]) + xi_offset) * y[3];
    case FeedbackSignal::eta: return (std::numbers::pi / 2.0 - y[1] + eta_offset) * -y[4];
    case FeedbackSignal::sum:
        return (folded_xi(y[0]) + xi_offset) * y[3] + (std::numbers::pi / 2.0 - y[1] + eta_offset) * -y[4];
    case FeedbackSignal::py: {
        const double sa = std::sin(y[0]), ca = std::cos(y[0]);
        const double sb = std::sin(y[1]), cb = std::cos(y[1]);
        const double p = sb * sb * ca * sa + xi_offset;
        const double pdot = sb * cb * 2.0 * sa * ca * y[4] + sb * sb * (ca * ca - sa * sa) * y[3];
        return p * pdot;
    }
    }
    return 0.0;
}

double feedback_signal(const EulerState& s, FeedbackSignal choice);

}  // namespace ndb
