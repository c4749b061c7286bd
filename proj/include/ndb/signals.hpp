#pragma once

#include <string>

namespace ndb {

// Which measured product q qdot drives the modulation.
enum class FeedbackSignal { off, xi, eta, sum, py };

FeedbackSignal parse_feedback_signal(const std::string& name);
const char* to_string(FeedbackSignal s);

}  // namespace ndb
