#include "plma/elliptic.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <string>

#include "plma/parallel.hpp"

namespace plma {

std::vector<std::uint8_t> EllipticProblem::update_set() const {
    if (!update.empty()) return update;
    return interior_mask(grid, mask, /*need_diagonals=*/false);
}

namespace {

double masked_sup(const GridFunction& f) { return f.sup_abs(); }

// Coefficient frozen at the current iterate. p1/p2 are central differences;
// update nodes always have their 4-neighborhood inside the mask.
GridFunction frozen_coefficient(const GridFunction& v, const EllipticProblem& p,
                                const std::vector<std::uint8_t>& upd, bool clamp,
                                int* clamped_nodes) {
    const Grid& g = p.grid;
    GridFunction a(g, 1.0);
    const double h1 = g.h1(), h2 = g.h2();
    const double lo = 1.0 / p.c0, hi = p.c0;
    int clamped = 0;
    for (int i = 1; i <= g.n1 - 2; ++i) {
        for (int j = 1; j <= g.n2 - 2; ++j) {
            const int k = g.index(i, j);
            if (!upd[static_cast<size_t>(k)]) continue;
            const double p1 = (v.at(i + 1, j) - v.at(i - 1, j)) / (2.0 * h1);
            double val;
            if (p.coeff_state) {
                const double p2 = (v.at(i, j + 1) - v.at(i, j - 1)) / (2.0 * h2);
                val = p.coeff_state(p1, p2, v.at(i, j), g.coord1(i), g.coord2(j));
            } else {
                val = p.coeff(p1, g.coord2(j));
            }
            if (clamp) {
                const double c = std::clamp(val, lo, hi);
                if (c != val) ++clamped;
                val = c;
            }
            a.values[static_cast<size_t>(k)] = val;
        }
    }
    if (clamped_nodes) *clamped_nodes += clamped;
    return a;
}

double sup_residual_linear(const GridFunction& v, const GridFunction& a,
                           const EllipticProblem& p, const std::vector<std::uint8_t>& upd) {
    const Grid& g = p.grid;
    const double ih1 = 1.0 / (g.h1() * g.h1()), ih2 = 1.0 / (g.h2() * g.h2());
    const bool has_rhs = !p.rhs.values.empty();
    double worst = 0.0;
    for (int i = 1; i <= g.n1 - 2; ++i) {
        for (int j = 1; j <= g.n2 - 2; ++j) {
            const int k = g.index(i, j);
            if (!upd[static_cast<size_t>(k)]) continue;
            const double c1 = a.values[static_cast<size_t>(k)] * ih1;
            const double r = c1 * (v.at(i + 1, j) + v.at(i - 1, j) - 2.0 * v.at(i, j)) +
                             ih2 * (v.at(i, j + 1) + v.at(i, j - 1) - 2.0 * v.at(i, j)) -
                             (has_rhs ? p.rhs.values[static_cast<size_t>(k)] : 0.0);
            worst = std::max(worst, std::abs(r));
        }
    }
    return worst;
}

} // namespace

GridFunction linear_elliptic_solve(const GridFunction& a, const EllipticProblem& p, double tol,
                                   int max_sweeps, LinearSolveStats* stats,
                                   const GridFunction* warm) {
    const Grid& g = p.grid;
    validate_grid(g);
    if (!(p.grid == a.grid)) throw DomainError("linear_elliptic_solve: coefficient grid mismatch");
    const std::vector<std::uint8_t> upd = p.update_set();

    // coefficient bounds are a problem invariant
    const double lo = 1.0 / p.c0 - 1e-12, hi = p.c0 + 1e-12;
    int i_lo = g.n1, i_hi = -1, j_lo = g.n2, j_hi = -1;
    int n_upd = 0;
    double a_sum = 0.0;
    for (int i = 0; i < g.n1; ++i)
        for (int j = 0; j < g.n2; ++j) {
            const int k = g.index(i, j);
            if (!upd[static_cast<size_t>(k)]) continue;
            const double av = a.values[static_cast<size_t>(k)];
            if (av < lo || av > hi)
                throw DomainError("linear_elliptic_solve: coefficient " + std::to_string(av) +
                                  " outside [1/c0, c0] at node (" + std::to_string(i) + "," +
                                  std::to_string(j) + ")");
            a_sum += av;
            ++n_upd;
            i_lo = std::min(i_lo, i); i_hi = std::max(i_hi, i);
            j_lo = std::min(j_lo, j); j_hi = std::max(j_hi, j);
        }
    if (n_upd == 0) throw DomainError("linear_elliptic_solve: empty update set (mask collapse)");

    GridFunction v = warm ? *warm : p.dirichlet;
    // pin Dirichlet carriers
    for (int k = 0; k < g.size(); ++k)
        if (p.mask[static_cast<size_t>(k)] && !upd[static_cast<size_t>(k)])
            v.values[static_cast<size_t>(k)] = p.dirichlet.values[static_cast<size_t>(k)];

    const double ih1 = 1.0 / (g.h1() * g.h1()), ih2 = 1.0 / (g.h2() * g.h2());
    const bool has_rhs = !p.rhs.values.empty();

    // SOR relaxation factor from the Jacobi spectral-radius heuristic
    const double pi = std::acos(-1.0);
    const double c1m = (a_sum / n_upd) * ih1, c2m = ih2;
    const int m1 = std::max(2, i_hi - i_lo + 2), m2 = std::max(2, j_hi - j_lo + 2);
    const double rho = (c1m * std::cos(pi / m1) + c2m * std::cos(pi / m2)) / (c1m + c2m);
    double omega = 2.0 / (1.0 + std::sqrt(std::max(0.0, 1.0 - rho * rho)));
    omega = std::clamp(omega, 1.0, 1.95);

    LinearSolveStats st;
    st.omega = omega;
    double res = sup_residual_linear(v, a, p, upd);
    const double res0 = res;
    int sweep = 0;
    while (res > tol && sweep < max_sweeps) {
        for (int color = 0; color < 2; ++color) {
            parallel_for(1, g.n1 - 1, [&](int i) {
                const int jstart = 1 + ((i + color) & 1);
                for (int j = jstart; j <= g.n2 - 2; j += 2) {
                    const int k = g.index(i, j);
                    if (!upd[static_cast<size_t>(k)]) continue;
                    const double c1 = a.values[static_cast<size_t>(k)] * ih1;
                    const double diag = 2.0 * (c1 + ih2);
                    const double gs =
                        (c1 * (v.at(i + 1, j) + v.at(i - 1, j)) +
                         ih2 * (v.at(i, j + 1) + v.at(i, j - 1)) -
                         (has_rhs ? p.rhs.values[static_cast<size_t>(k)] : 0.0)) / diag;
                    v.values[static_cast<size_t>(k)] += omega * (gs - v.values[static_cast<size_t>(k)]);
                }
            }, /*min_grain=*/64);
        }
        ++sweep;
        if (sweep % 10 == 0 || sweep == max_sweeps) {
            res = sup_residual_linear(v, a, p, upd);
            if (res > 1e6 * (res0 + 1.0)) {
                // runaway relaxation: back off toward Gauss-Seidel
                omega = 1.0 + 0.5 * (omega - 1.0);
            }
        }
    }
    res = sup_residual_linear(v, a, p, upd);
    st.sweeps = sweep;
    st.residual = res;
    st.converged = res <= tol;

    if (!has_rhs) {
        double bmin = std::numeric_limits<double>::infinity(), bmax = -bmin;
        for (int k = 0; k < g.size(); ++k)
            if (p.mask[static_cast<size_t>(k)] && !upd[static_cast<size_t>(k)]) {
                bmin = std::min(bmin, v.values[static_cast<size_t>(k)]);
                bmax = std::max(bmax, v.values[static_cast<size_t>(k)]);
            }
        const double slack = 1e-8 * std::max(1.0, std::max(std::abs(bmin), std::abs(bmax)));
        for (int k = 0; k < g.size() && st.max_principle_ok; ++k)
            if (upd[static_cast<size_t>(k)]) {
                const double vv = v.values[static_cast<size_t>(k)];
                if (vv < bmin - slack || vv > bmax + slack) st.max_principle_ok = false;
            }
    }
    if (stats) *stats = st;
    if (!st.converged)
        throw SolverError("linear_elliptic_solve: residual " + std::to_string(res) +
                          " > tol after " + std::to_string(sweep) + " sweeps");
    return v;
}

GridFunction quasilinear_residual(const GridFunction& v, const EllipticProblem& p) {
    const Grid& g = p.grid;
    const std::vector<std::uint8_t> upd = p.update_set();
    GridFunction r(g);
    r.mask.assign(static_cast<size_t>(g.size()), 0);
    const double h1 = g.h1(), h2 = g.h2();
    const bool has_rhs = !p.rhs.values.empty();
    for (int i = 1; i <= g.n1 - 2; ++i) {
        for (int j = 1; j <= g.n2 - 2; ++j) {
            const int k = g.index(i, j);
            if (!upd[static_cast<size_t>(k)]) continue;
            const double d11 = (v.at(i + 1, j) - 2.0 * v.at(i, j) + v.at(i - 1, j)) / (h1 * h1);
            const double d22 = (v.at(i, j + 1) - 2.0 * v.at(i, j) + v.at(i, j - 1)) / (h2 * h2);
            const double p1 = (v.at(i + 1, j) - v.at(i - 1, j)) / (2.0 * h1);
            double c;
            if (p.coeff_state) {
                const double p2 = (v.at(i, j + 1) - v.at(i, j - 1)) / (2.0 * h2);
                c = p.coeff_state(p1, p2, v.at(i, j), g.coord1(i), g.coord2(j));
            } else {
                c = p.coeff(p1, g.coord2(j));
            }
            r.values[static_cast<size_t>(k)] =
                d11 * c + d22 - (has_rhs ? p.rhs.values[static_cast<size_t>(k)] : 0.0);
            r.mask[static_cast<size_t>(k)] = 1;
        }
    }
    return r;
}

std::pair<GridFunction, SolveReport> solve_quasilinear(const EllipticProblem& p, double tol,
                                                       int max_outer, double theta,
                                                       bool allow_clamped_solution) {
    const auto t0 = std::chrono::steady_clock::now();
    const Grid& g = p.grid;
    const std::vector<std::uint8_t> upd = p.update_set();

    double scale = 1.0;
    for (int k = 0; k < g.size(); ++k)
        if (p.mask[static_cast<size_t>(k)])
            scale = std::max(scale, std::abs(p.dirichlet.values[static_cast<size_t>(k)]));
    if (tol <= 0.0) tol = 1e-8 * scale;

    SolveReport rep;
    rep.damping = theta;

    // residual of the clamped-coefficient operator frozen at v
    auto clamped_residual = [&](const GridFunction& v) {
        int dummy = 0;
        const GridFunction a = frozen_coefficient(v, p, upd, /*clamp=*/true, &dummy);
        return sup_residual_linear(v, a, p, upd);
    };

    GridFunction v = p.dirichlet;
    double last_res = std::numeric_limits<double>::infinity();
    for (int outer = 1; outer <= max_outer; ++outer) {
        rep.outer_iterations = outer;
        int clamped = 0;
        GridFunction a = frozen_coefficient(v, p, upd, /*clamp=*/true, &clamped);
        rep.clamped_coefficient_nodes += clamped;
        const double inner_tol = std::isfinite(last_res)
                                     ? std::max(tol * 0.3, std::min(0.05 * last_res, scale))
                                     : tol * 0.3;
        LinearSolveStats st;
        GridFunction vnew = linear_elliptic_solve(a, p, inner_tol, 2000000, &st, &v);
        rep.inner_sweeps_total += st.sweeps;
        rep.max_principle_ok = rep.max_principle_ok && st.max_principle_ok;

        const double rnew = clamped_residual(vnew);
        if (rnew <= tol) {
            v = std::move(vnew);
            rep.residual_history.push_back(rnew);
            rep.converged = true;
            break;
        }
        if (outer == 1) {
            v = std::move(vnew);
        } else {
            for (int k = 0; k < g.size(); ++k)
                if (upd[static_cast<size_t>(k)])
                    v.values[static_cast<size_t>(k)] =
                        theta * vnew.values[static_cast<size_t>(k)] +
                        (1.0 - theta) * v.values[static_cast<size_t>(k)];
        }
        const double res = clamped_residual(v);
        rep.residual_history.push_back(res);
        if (res <= tol) {
            rep.converged = true;
            break;
        }
        const size_t hist = rep.residual_history.size();
        if (hist >= 11 && res > 0.99 * rep.residual_history[hist - 11]) {
            rep.stalled = true;
            break;
        }
        last_res = res;
    }
    rep.final_residual_clamped = clamped_residual(v);
    rep.final_residual = masked_sup(quasilinear_residual(v, p));
    rep.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                      .count();

    if (!rep.converged) {
        if (rep.stalled)
            throw SolverError("solve_quasilinear: stalled (residual reduction < 1% over 10 "
                              "outer iterations, residual " +
                              std::to_string(rep.final_residual_clamped) + ")");
        throw SolverError("solve_quasilinear: no convergence in " + std::to_string(max_outer) +
                          " outer iterations (residual " +
                          std::to_string(rep.final_residual_clamped) + ")");
    }

    // final validation: the hypothesis bounds, unclamped, at the solution
    int dummy = 0;
    const GridFunction a_final = frozen_coefficient(v, p, upd, /*clamp=*/false, &dummy);
    const double lo = (1.0 - 1e-9) / p.c0, hi = p.c0 * (1.0 + 1e-9);
    for (int i = 1; i <= g.n1 - 2; ++i)
        for (int j = 1; j <= g.n2 - 2; ++j) {
            const int k = g.index(i, j);
            if (!upd[static_cast<size_t>(k)]) continue;
            const double av = a_final.values[static_cast<size_t>(k)];
            if (av < lo || av > hi) ++rep.clamped_at_solution;
        }
    if (rep.clamped_at_solution > 0 && !allow_clamped_solution)
        throw SolverError("solve_quasilinear: coefficient violates [1/c0, c0] at " +
                          std::to_string(rep.clamped_at_solution) + " nodes of the solution");
    return {std::move(v), std::move(rep)};
}

} // namespace plma
