#pragma once

#include <stdexcept>

namespace dicke {

/// Raised when an iterative procedure (eigensolver, cutoff search,
/// nonlinear fit) fails to reach its target accuracy.
struct ConvergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Filesystem / serialization failures.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace dicke
