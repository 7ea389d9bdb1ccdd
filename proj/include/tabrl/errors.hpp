#pragma once

#include <stdexcept>
#include <string>

namespace tabrl {

/// An iterative routine failed to reach its tolerance; carries the last
/// residual (or total-variation distance) observed.
struct ConvergenceError : std::runtime_error {
    double residual;
    ConvergenceError(const std::string& what, double res)
        : std::runtime_error(what), residual(res) {}
};

} // namespace tabrl
