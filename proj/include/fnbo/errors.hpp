#pragma once

#include <stdexcept>
#include <string>

namespace fnbo {

/// Process exit codes used by the command-line front end.
enum class ExitCode : int {
    Ok = 0,
    InvalidConfig = 2,
    Unstable = 3,
    NumericalFailure = 4,
};

/// Parameters violate a documented invariant.
struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Requested quantity does not exist because the driven oscillator is unstable.
struct UnstableError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A numerical method failed to reach its target (quadrature, fit, sampling).
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw ConfigError(msg);
}

}  // namespace fnbo
