#pragma once

#include <stdexcept>
#include <string>

namespace dcf {

/// Out-of-range or inconsistent model input.
class InvalidParameter : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Malformed configuration file or command-line input.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The fixed-point solver did not reach its tolerance.
class SolverFailure : public std::runtime_error {
public:
    SolverFailure(const std::string& what, double residual)
        : std::runtime_error(what), residual_(residual) {}

    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

/// PER target cannot be met by any payload size.
class InfeasibleTarget : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// No contention window realises the throughput-optimal tau.
class InfeasibleWindow : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace dcf
