#include "ndb/signals.hpp"

#include "ndb/errors.hpp"

namespace ndb {

FeedbackSignal parse_feedback_signal(const std::string& name) {
    if (name == "off" || name == "none") return FeedbackSignal::off;
    if (name == "xi" || name == "xi_xidot") return FeedbackSignal::xi;
    if (name == "eta" || name == "eta_etadot") return FeedbackSignal::eta;
    if (name == "sum" || name == "xi+eta") return FeedbackSignal::sum;
    if (name == "py" || name == "py_pydot") return FeedbackSignal::py;
    throw ValidationError("unknown feedback signal '" + name + "' (off, xi, eta, sum, py)");
}

const char* to_string(FeedbackSignal s) {
    switch (s) {
    case FeedbackSignal::off: return "off";
    case FeedbackSignal::xi: return "xi";
    case FeedbackSignal::eta: return "eta";
    case FeedbackSignal::sum: return "sum";
    case FeedbackSignal::py: return "py";
    }
    return "off";
}

}  // namespace ndb
