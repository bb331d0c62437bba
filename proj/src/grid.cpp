#include "plma/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "plma/parallel.hpp"

namespace plma {

double norm(Point p) { return std::hypot(p.x1, p.x2); }

Grid Grid::square(double r, int n) {
    Grid g{-r, r, -r, r, n, n};
    validate_grid(g);
    return g;
}

void validate_grid(const Grid& g) {
    if (g.n1 < 3 || g.n2 < 3)
        throw DomainError("grid needs at least 3 nodes per axis, got " +
                          std::to_string(g.n1) + "x" + std::to_string(g.n2));
    if (!(g.x_max > g.x_min) || !(g.y_max > g.y_min))
        throw DomainError("grid bounds must satisfy x_min < x_max, y_min < y_max");
}

double GridFunction::sup_abs() const {
    double m = 0.0;
    for (int i = 0; i < grid.n1; ++i)
        for (int j = 0; j < grid.n2; ++j)
            if (masked(i, j)) m = std::max(m, std::abs(at(i, j)));
    return m;
}

double HessianField::lambda_min(int i, int j) const {
    const int k = grid.index(i, j);
    const double a = d11[k], b = d12[k], c = d22[k];
    return 0.5 * (a + c) - std::sqrt(0.25 * (a - c) * (a - c) + b * b);
}

double HessianField::lambda_max(int i, int j) const {
    const int k = grid.index(i, j);
    const double a = d11[k], b = d12[k], c = d22[k];
    return 0.5 * (a + c) + std::sqrt(0.25 * (a - c) * (a - c) + b * b);
}

GridFunction HessianField::channel(int which) const {
    GridFunction out(grid);
    switch (which) {
        case 0: out.values = d11; break;
        case 1: out.values = d12; break;
        case 2: out.values = d22; break;
        default: throw DomainError("HessianField::channel expects 0, 1 or 2");
    }
    return out;
}

GridFunction sample(const std::function<double(double, double)>& f, const Grid& g) {
    validate_grid(g);
    GridFunction u(g);
    for (int i = 0; i < g.n1; ++i) {
        for (int j = 0; j < g.n2; ++j) {
            const Point p = g.node(i, j);
            const double v = f(p.x1, p.x2);
            if (!std::isfinite(v))
                throw DomainError("evaluator returned non-finite value at node (" +
                                  std::to_string(i) + "," + std::to_string(j) + ") = (" +
                                  std::to_string(p.x1) + "," + std::to_string(p.x2) + ")");
            u.at(i, j) = v;
        }
    }
    return u;
}

namespace {

// One-dimensional first derivative along a row of n samples with spacing h,
// second order everywhere (central interior, one-sided at the ends).
inline double d1_line(const double* v, int k, int n, int stride, double h) {
    if (k == 0)
        return (-3.0 * v[0] + 4.0 * v[stride] - v[2 * stride]) / (2.0 * h);
    if (k == n - 1)
        return (3.0 * v[k * stride] - 4.0 * v[(k - 1) * stride] + v[(k - 2) * stride]) /
               (2.0 * h);
    return (v[(k + 1) * stride] - v[(k - 1) * stride]) / (2.0 * h);
}

// Second derivative along a line; 3-point central interior, 4-point one-sided
// at the ends (second order). Falls back to the adjacent interior value when
// the line is only 3 samples long.
inline double d2_line(const double* v, int k, int n, int stride, double h) {
    const double hh = h * h;
    auto central = [&](int m) {
        return (v[(m + 1) * stride] - 2.0 * v[m * stride] + v[(m - 1) * stride]) / hh;
    };
    if (k >= 1 && k <= n - 2) return central(k);
    if (n < 4) return central(k == 0 ? 1 : n - 2);
    if (k == 0)
        return (2.0 * v[0] - 5.0 * v[stride] + 4.0 * v[2 * stride] - v[3 * stride]) / hh;
    return (2.0 * v[k * stride] - 5.0 * v[(k - 1) * stride] + 4.0 * v[(k - 2) * stride] -
            v[(k - 3) * stride]) / hh;
}

} // namespace

std::pair<GridFunction, GridFunction> fd_gradient(const GridFunction& u) {
    const Grid& g = u.grid;
    validate_grid(g);
    GridFunction g1(g), g2(g);
    const double h1 = g.h1(), h2 = g.h2();
    parallel_for(0, g.n1, [&](int i) {
        for (int j = 0; j < g.n2; ++j) {
            g1.at(i, j) = d1_line(&u.values[g.index(0, j)], i, g.n1, g.n2, h1);
            g2.at(i, j) = d1_line(&u.values[g.index(i, 0)], j, g.n2, 1, h2);
        }
    });
    return {std::move(g1), std::move(g2)};
}

HessianField fd_hessian(const GridFunction& u) {
    const Grid& g = u.grid;
    validate_grid(g);
    HessianField h;
    h.grid = g;
    h.d11.resize(static_cast<size_t>(g.size()));
    h.d12.resize(static_cast<size_t>(g.size()));
    h.d22.resize(static_cast<size_t>(g.size()));
    const double h1 = g.h1(), h2 = g.h2();

    // d/dx2 first, then d/dx1 of it: equals the cross stencil at interior
    // nodes and stays second order at the boundary.
    GridFunction du2(g);
    for (int i = 0; i < g.n1; ++i)
        for (int j = 0; j < g.n2; ++j)
            du2.at(i, j) = d1_line(&u.values[g.index(i, 0)], j, g.n2, 1, h2);

    parallel_for(0, g.n1, [&](int i) {
        for (int j = 0; j < g.n2; ++j) {
            const int k = g.index(i, j);
            h.d11[k] = d2_line(&u.values[g.index(0, j)], i, g.n1, g.n2, h1);
            h.d22[k] = d2_line(&u.values[g.index(i, 0)], j, g.n2, 1, h2);
            h.d12[k] = d1_line(&du2.values[g.index(0, j)], i, g.n1, g.n2, h1);
        }
    });
    return h;
}

GridFunction ma_residual(const GridFunction& u, const GridFunction& f) {
    if (!(u.grid == f.grid)) throw DomainError("ma_residual: grid mismatch");
    const Grid& g = u.grid;
    const HessianField h = fd_hessian(u);
    GridFunction r(g);
    r.mask.assign(static_cast<size_t>(g.size()), 0);

    const std::vector<std::uint8_t> valid =
        u.has_mask() ? interior_mask(g, u.mask, /*need_diagonals=*/true)
                     : std::vector<std::uint8_t>();
    for (int i = 1; i <= g.n1 - 2; ++i) {
        for (int j = 1; j <= g.n2 - 2; ++j) {
            const int k = g.index(i, j);
            if (!valid.empty() && !valid[k]) continue;
            r.values[k] = h.det(i, j) - f.values[k];
            r.mask[k] = 1;
        }
    }
    return r;
}

double default_convexity_tol(const GridFunction& u) {
    return 1e-10 * std::max(1.0, u.sup_abs());
}

ConvexityReport convexity_check(const GridFunction& u, double tol) {
    const Grid& g = u.grid;
    const HessianField h = fd_hessian(u);
    const std::vector<std::uint8_t> valid =
        u.has_mask() ? interior_mask(g, u.mask, /*need_diagonals=*/true)
                     : std::vector<std::uint8_t>();
    ConvexityReport rep;
    rep.lambda_min = std::numeric_limits<double>::infinity();
    for (int i = 1; i <= g.n1 - 2; ++i) {
        for (int j = 1; j <= g.n2 - 2; ++j) {
            if (!valid.empty() && !valid[g.index(i, j)]) continue;
            const double lm = h.lambda_min(i, j);
            if (lm < rep.lambda_min) {
                rep.lambda_min = lm;
                rep.i = i;
                rep.j = j;
            }
        }
    }
    if (!std::isfinite(rep.lambda_min))
        throw DomainError("convexity_check: no interior nodes to test");
    rep.convex = rep.lambda_min >= -tol;
    return rep;
}

ConvexityReport convexity_check(const GridFunction& u) {
    return convexity_check(u, default_convexity_tol(u));
}

namespace {

// Lagrange cubic weights on the 4-node window {0, 1, 2, 3} at parameter t in
// [0, 3]. Edge cells shift the window inward instead of degrading the order,
// so the rim sampling used by the certificates stays fourth order.
inline void cubic_weights(double t, double w[4]) {
    w[0] = -(t - 1.0) * (t - 2.0) * (t - 3.0) / 6.0;
    w[1] = t * (t - 2.0) * (t - 3.0) / 2.0;
    w[2] = -t * (t - 1.0) * (t - 3.0) / 2.0;
    w[3] = t * (t - 1.0) * (t - 2.0) / 6.0;
}

struct CellPos {
    int i, j;        // lower-left node of the containing cell
    double s1, s2;   // local coordinates in [0, 1]
    int wi, wj;      // 4x4 window origin (shifted inward at the edges)
    bool cubic;      // both axes have at least 4 nodes
};

CellPos locate(const Grid& g, Point p) {
    const double span1 = g.x_max - g.x_min, span2 = g.y_max - g.y_min;
    const double eps1 = 1e-12 * std::max(1.0, std::abs(span1));
    const double eps2 = 1e-12 * std::max(1.0, std::abs(span2));
    if (p.x1 < g.x_min - eps1 || p.x1 > g.x_max + eps1 || p.x2 < g.y_min - eps2 ||
        p.x2 > g.y_max + eps2)
        throw DomainError("interpolate: point (" + std::to_string(p.x1) + "," +
                          std::to_string(p.x2) + ") outside grid bounding box");
    CellPos c;
    const double t1 = (p.x1 - g.x_min) / g.h1();
    const double t2 = (p.x2 - g.y_min) / g.h2();
    c.i = std::clamp(static_cast<int>(std::floor(t1)), 0, g.n1 - 2);
    c.j = std::clamp(static_cast<int>(std::floor(t2)), 0, g.n2 - 2);
    c.s1 = std::clamp(t1 - c.i, 0.0, 1.0);
    c.s2 = std::clamp(t2 - c.j, 0.0, 1.0);
    c.wi = std::clamp(c.i - 1, 0, std::max(0, g.n1 - 4));
    c.wj = std::clamp(c.j - 1, 0, std::max(0, g.n2 - 4));
    c.cubic = g.n1 >= 4 && g.n2 >= 4;
    return c;
}

double interp_at(const GridFunction& u, const CellPos& c, const std::vector<std::uint8_t>* mask,
                 bool* valid) {
    const Grid& g = u.grid;
    if (valid) *valid = true;
    auto node_ok = [&](int i, int j) {
        return !mask || mask->empty() || (*mask)[g.index(i, j)] != 0;
    };
    if (c.cubic) {
        double w1[4], w2[4];
        cubic_weights(c.i - c.wi + c.s1, w1);
        cubic_weights(c.j - c.wj + c.s2, w2);
        double acc = 0.0;
        for (int a = 0; a < 4; ++a) {
            for (int b = 0; b < 4; ++b) {
                const int i = c.wi + a, j = c.wj + b;
                if (valid && !node_ok(i, j)) {
                    *valid = false;
                    return 0.0;
                }
                acc += w1[a] * w2[b] * u.at(i, j);
            }
        }
        return acc;
    }
    // bilinear fallback for degenerate 3-node axes
    for (int a = 0; a < 2 && valid; ++a)
        for (int b = 0; b < 2; ++b)
            if (!node_ok(c.i + a, c.j + b)) {
                *valid = false;
                return 0.0;
            }
    const double v00 = u.at(c.i, c.j), v10 = u.at(c.i + 1, c.j);
    const double v01 = u.at(c.i, c.j + 1), v11 = u.at(c.i + 1, c.j + 1);
    return (1.0 - c.s1) * ((1.0 - c.s2) * v00 + c.s2 * v01) +
           c.s1 * ((1.0 - c.s2) * v10 + c.s2 * v11);
}

} // namespace

double interpolate(const GridFunction& u, Point p) {
    return interp_at(u, locate(u.grid, p), nullptr, nullptr);
}

double interpolate_masked(const GridFunction& u, Point p, bool* valid) {
    return interp_at(u, locate(u.grid, p), &u.mask, valid);
}

std::vector<std::uint8_t> disc_mask(const Grid& g, double R) {
    std::vector<std::uint8_t> m(static_cast<size_t>(g.size()), 0);
    for (int i = 0; i < g.n1; ++i)
        for (int j = 0; j < g.n2; ++j) {
            const Point p = g.node(i, j);
            if (p.x1 * p.x1 + p.x2 * p.x2 <= R * R * (1.0 + 1e-14)) m[g.index(i, j)] = 1;
        }
    return m;
}

std::vector<std::uint8_t> interior_mask(const Grid& g, const std::vector<std::uint8_t>& mask,
                                        bool need_diagonals) {
    std::vector<std::uint8_t> out(static_cast<size_t>(g.size()), 0);
    auto in = [&](int i, int j) { return mask[g.index(i, j)] != 0; };
    for (int i = 1; i <= g.n1 - 2; ++i) {
        for (int j = 1; j <= g.n2 - 2; ++j) {
            if (!in(i, j) || !in(i - 1, j) || !in(i + 1, j) || !in(i, j - 1) || !in(i, j + 1))
                continue;
            if (need_diagonals &&
                (!in(i - 1, j - 1) || !in(i - 1, j + 1) || !in(i + 1, j - 1) || !in(i + 1, j + 1)))
                continue;
            out[g.index(i, j)] = 1;
        }
    }
    return out;
}

} // namespace plma
