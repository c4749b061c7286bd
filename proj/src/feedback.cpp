#include "ndb/feedback.hpp"

#include "ndb/errors.hpp"

namespace ndb {

void FeedbackConfig::validate() const {
    if (!(chi >= 0.0)) {
        throw ValidationError("feedback.chi must be non-negative");
    }
    if (!(radius > 0.0)) {
        throw ValidationError("feedback radius must be positive");
    }
    if (!(measurement_noise >= 0.0)) {
        throw ValidationError("feedback.measurement_noise must be non-negative");
    }
    for (std::size_t i = 0; i < schedule.size(); ++i) {
        if (!(schedule[i].multiplier >= 0.0)) {
            throw ValidationError("chi schedule multipliers must be non-negative");
        }
        if (i > 0 && !(schedule[i].t_start > schedule[i - 1].t_start)) {
            throw ValidationError("chi schedule times must be strictly increasing");
        }
    }
}

std::vector<ChiStep> FeedbackConfig::staged_schedule() {
    std::vector<ChiStep> s;
    double m = 1.0;
    for (int k = 3; k <= 7; ++k) {
        m *= 10.0;
        s.push_back({k * 1e-3, m});
    }
    return s;
}

double chi_at(double t, const FeedbackConfig& cfg) {
    double m = 1.0;
    for (const auto& step : cfg.schedule) {
        if (t >= step.t_start) {
            m = step.multiplier;
        } else {
            break;
        }
    }
    return cfg.chi * m;
}

double feedback_signal(const EulerState& s, FeedbackSignal choice) {
    return feedback_signal(to_vector(s), choice);
}

}  // namespace ndb
