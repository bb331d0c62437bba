#pragma once

#include <functional>
#include <vector>

#include "plma/elliptic.hpp"
#include "plma/grid.hpp"
#include "plma/plegendre.hpp"

namespace plma {

// det D^2 u = f on the disc |x| <= R with Dirichlet data. `boundary` must be
// evaluable in a neighborhood of the circle (mask-boundary nodes carry data
// at their own coordinates). When `f_general` is set the right-hand side is
// f(x1, x2, u, p1, p2), probed with the current iterate.
struct MAProblem {
    double R = 1.0;
    double c0 = 1.0;
    std::function<double(double, double)> f;
    std::function<double(double, double, double, double, double)> f_general;
    std::function<double(double, double)> boundary;
};

struct PipelineState {
    int outer_iterations = 0;  // transform-solve-invert rounds
    int warmup_iterations = 0; // fixed-point Poisson steps taken to reach the basin
    bool converged = false;
    double final_residual = 0.0;
    double tolerance = 0.0;
    double wall_ms = 0.0;
    std::vector<double> residual_history;   // pipeline rounds only
    std::vector<double> lambda_min_history; // convexity gate per accepted iterate
    int quasilinear_outer_total = 0;
    GridFunction ustar; // final transformed iterate, with its validity mask
};

// Least-squares quadratic fit to the boundary data over the circle, with the
// Hessian eigenvalues floored at 1e-3.
GridFunction initial_convex_iterate(const MAProblem& pr, const Grid& g);

// Fixed-point reference solver: Laplacian(u_{k+1}) = sqrt((u11-u22)^2 +
// 4 u12^2 + 4 f(u_k)) with Dirichlet collar data, each step a masked Poisson
// solve. Its fixed point satisfies the discrete equation det D^2_h u = f
// identically. tol <= 0 selects 1e-6 * max(1, sup f).
GridFunction solve_ma_reference(const MAProblem& pr, const Grid& g, double tol = 0.0,
                                int max_iter = 200, SolveReport* report = nullptr);

// Transform pipeline: slice-conjugate the iterate onto the image region,
// solve the transformed quasilinear equation there, conjugate back, blend
// with damping 0.5 in x-space. tol <= 0 selects 20 h^2 * max(1, sup f),
// the scheme's discretization floor.
std::pair<GridFunction, PipelineState> solve_ma_plt(const MAProblem& pr, const Grid& g,
                                                    double tol = 0.0, int max_outer = 200);

struct CrossValidation {
    double disagreement = 0.0;
    double residual_plt = 0.0;
    double residual_ref = 0.0;
    double wall_ms_plt = 0.0;
    double wall_ms_ref = 0.0;
    int compared = 0;
    int plt_outer = 0;
    int ref_outer = 0;
};

// Runs both solvers and reports the sup-norm disagreement on the common
// interior together with both final equation residuals.
CrossValidation cross_validate(const MAProblem& pr, const Grid& g, double tol_plt = 0.0,
                               double tol_ref = 0.0);

// sup |det D^2_h u - f| over nodes with a full 3x3 neighborhood in the disc.
double ma_sup_residual(const GridFunction& u, const MAProblem& pr, double R);

} // namespace plma
