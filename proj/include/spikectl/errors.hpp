#pragma once

#include <stdexcept>
#include <string>

namespace spikectl {

// Bad user input: malformed config, violated preconditions on grids or priors.
class ValidationError : public std::invalid_argument {
public:
    explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

// The numerics cannot proceed: CFL violation, degenerate posterior, nonfinite values.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace spikectl
