#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace csisense {

/// Base of every error thrown by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad user input: malformed files, invalid sizes, out-of-range parameters.
/// The CLI maps these to exit code 2.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A computation that cannot produce a meaningful number. CLI exit code 3.
class NumericalError : public Error {
public:
    using Error::Error;
};

class InvalidScenario : public ConfigError {
public:
    using ConfigError::ConfigError;
};

class InvalidSchedule : public ConfigError {
public:
    using ConfigError::ConfigError;
};

class InvalidSize : public ConfigError {
public:
    using ConfigError::ConfigError;
};

class IoError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

/// The static paths cancel (|h_s0| ~ 0), so the CSI ratio is undefined.
class DegenerateStatics : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class ZeroDenominator : public NumericalError {
public:
    ZeroDenominator(std::size_t index)
        : NumericalError("zero denominator in CSI ratio at sample " + std::to_string(index)),
          index_(index) {}

    std::size_t index() const noexcept { return index_; }

private:
    std::size_t index_;
};

class GratingLobes : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class NonPositiveDenominator : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class RegimeUndefined : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class OutOfDomain : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class SingularUpdate : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class InvalidParams : public NumericalError {
public:
    using NumericalError::NumericalError;
};

} // namespace csisense
