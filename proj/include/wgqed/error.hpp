#pragma once

#include <stdexcept>
#include <string>

namespace wgqed {

/// Invalid input: out-of-range index, malformed parameters, broken invariants of a value.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Requested problem size exceeds the dense-matrix guard.
class SizeError : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

/// A computation could not produce a trustworthy number.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IntegratorError : public NumericalError {
public:
    IntegratorError(const std::string& what, double time)
        : NumericalError(what + " (t = " + std::to_string(time) + " ns)"), time_(time) {}

    double time() const noexcept { return time_; }

private:
    double time_;
};

class DegenerateSteadyState : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// A ratio was requested whose denominator vanishes (zero flux, no photons).
class UndefinedNormalization : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// Configuration rejected before any computation ran.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace wgqed
