#pragma once

#include <functional>
#include <vector>

#include "plma/grid.hpp"

namespace plma {

// Dirichlet problem for a(y) v_11 + v_22 = rhs on a masked sub-lattice.
// Nodes of `mask` that are not in the update set act as Dirichlet carriers
// with values taken from `dirichlet`. `update` may be supplied to pin extra
// nodes; by default it is the 4-neighbor-complete interior of the mask.
struct EllipticProblem {
    Grid grid;
    std::vector<std::uint8_t> mask;
    std::function<double(double, double)> coeff; // f(p1, y2), with c0^-1 <= f <= c0
    double c0 = 1.0;
    GridFunction dirichlet;
    GridFunction rhs;                       // empty values => zero source
    std::vector<std::uint8_t> update;       // optional override of the update set

    // Extended coefficient hook used for solution-dependent right-hand sides:
    // arguments are (p1, p2, v, y1, y2). When absent, coeff(p1, y2) is used.
    std::function<double(double, double, double, double, double)> coeff_state;

    std::vector<std::uint8_t> update_set() const;
};

struct LinearSolveStats {
    int sweeps = 0;
    double residual = 0.0;
    double omega = 0.0;
    bool converged = false;
    bool max_principle_ok = true;
};

// Red-black SOR for the frozen-coefficient problem; omega from the Jacobi
// spectral-radius heuristic. Throws SolverError on non-convergence and
// DomainError when the frozen coefficient leaves [c0^-1, c0].
GridFunction linear_elliptic_solve(const GridFunction& a, const EllipticProblem& p, double tol,
                                   int max_sweeps, LinearSolveStats* stats = nullptr,
                                   const GridFunction* warm = nullptr);

struct SolveReport {
    int outer_iterations = 0;
    int inner_sweeps_total = 0;
    double final_residual = 0.0;         // with the unclamped coefficient
    double final_residual_clamped = 0.0; // with the coefficient clamped to [1/c0, c0]
    double damping = 0.0;
    double wall_ms = 0.0;
    bool converged = false;
    bool stalled = false;
    int clamped_coefficient_nodes = 0;   // total clamps over the whole iteration
    int clamped_at_solution = 0;         // bound violations at the converged iterate
    bool max_principle_ok = true;
    std::vector<double> residual_history;
};

// Picard iteration: freeze a(y) = coeff(d1 v, y2) clamped to [1/c0, c0],
// solve, blend with damping theta; converged when the clamped-operator
// residual drops below tol. The first solve is accepted undamped when it
// already meets the tolerance (the linear case converges in one outer
// iteration). tol <= 0 selects 1e-8 * scale. A solution whose unclamped
// coefficient still violates the bounds fails the final validation and
// throws unless allow_clamped_solution is set (transient use inside the
// equation pipeline).
std::pair<GridFunction, SolveReport> solve_quasilinear(const EllipticProblem& p, double tol = 0.0,
                                                       int max_outer = 200, double theta = 0.5,
                                                       bool allow_clamped_solution = false);

// Pointwise d11(v) * coeff(d1 v, y2) + d22(v) - rhs on the update set.
GridFunction quasilinear_residual(const GridFunction& v, const EllipticProblem& p);

} // namespace plma
