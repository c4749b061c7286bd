#pragma once

#include <stdexcept>
#include <string>

namespace ndb {

// Base of every error raised by the library. Each subclass corresponds to one
// named failure mode of an operation.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Trajectory reached |sin(beta)| <= guard; the particle has left the trap.
class SingularityGuard : public Error {
public:
    using Error::Error;
};

class StepUnderflow : public Error {
public:
    using Error::Error;
};

class InvalidMaterial : public Error {
public:
    using Error::Error;
};

class ParameterOrderViolation : public Error {
public:
    using Error::Error;
};

class FitDegenerate : public Error {
public:
    using Error::Error;
};

class RejectionCapExceeded : public Error {
public:
    using Error::Error;
};

class InsufficientData : public Error {
public:
    using Error::Error;
};

class PeaksNotFound : public Error {
public:
    using Error::Error;
};

class ExperimentFailed : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    using Error::Error;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

class UnknownScenario : public Error {
public:
    using Error::Error;
};

}  // namespace ndb
