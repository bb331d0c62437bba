#pragma once

#include <stdexcept>
#include <string>

namespace plma {

// Bad geometry, out-of-range points, mismatched grids, invalid arguments.
struct DomainError : std::runtime_error {
    explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

// A convexity contract was violated (non-convex slice, plane above graph, ...).
struct NonConvexError : std::runtime_error {
    explicit NonConvexError(const std::string& what) : std::runtime_error(what) {}
};

// Iterative solver failed: non-convergence, stall, coefficient bound violation.
struct SolverError : std::runtime_error {
    explicit SolverError(const std::string& what) : std::runtime_error(what) {}
};

// Invalid run configuration (CLI / config file level).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace plma
