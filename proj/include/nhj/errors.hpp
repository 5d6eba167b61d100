#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace nhj {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A field evaluation produced NaN/Inf.
class NumericalFailure : public Error {
public:
    using Error::Error;
};

/// The integrator produced a non-finite state. `last_valid_index()` is the
/// index of the last finite sample.
class DivergenceError : public NumericalFailure {
public:
    DivergenceError(const std::string& what, std::size_t last_valid)
        : NumericalFailure(what), last_valid_(last_valid) {}
    [[nodiscard]] std::size_t last_valid_index() const noexcept { return last_valid_; }

private:
    std::size_t last_valid_;
};

class MetricError : public Error {
public:
    using Error::Error;
};

class SingularCompatibility : public Error {
public:
    using Error::Error;
};

class FrameError : public Error {
public:
    using Error::Error;
};

class InvarianceViolation : public Error {
public:
    using Error::Error;
};

class NotProjectable : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace nhj
