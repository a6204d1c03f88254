#pragma once

#include <stdexcept>
#include <string>

namespace ctmflow {

/// Bad input: malformed scenario, missing routing, out-of-domain argument.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A solver could not deliver an optimal solution.
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A state or rate invariant broke during simulation.
class InvariantViolation : public std::runtime_error {
public:
    InvariantViolation(const std::string& what, int step = -1)
        : std::runtime_error(what), step_(step) {}
    int step() const noexcept { return step_; }

private:
    int step_;
};

}  // namespace ctmflow
