#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "plma/error.hpp"

namespace plma {

struct Point {
    double x1 = 0.0;
    double x2 = 0.0;
};

inline Point operator+(Point a, Point b) { return {a.x1 + b.x1, a.x2 + b.x2}; }
inline Point operator-(Point a, Point b) { return {a.x1 - b.x1, a.x2 - b.x2}; }
inline Point operator*(double s, Point p) { return {s * p.x1, s * p.x2}; }
inline double dot(Point a, Point b) { return a.x1 * b.x1 + a.x2 * b.x2; }
double norm(Point p);

// Uniform rectangular lattice. Axis 1 spans [x_min, x_max] with n1 nodes,
// axis 2 spans [y_min, y_max] with n2 nodes. Node coordinates are exact at
// the endpoints.
struct Grid {
    double x_min = 0.0, x_max = 0.0;
    double y_min = 0.0, y_max = 0.0;
    int n1 = 0, n2 = 0;

    double h1() const { return (x_max - x_min) / (n1 - 1); }
    double h2() const { return (y_max - y_min) / (n2 - 1); }
    double coord1(int i) const { return i == n1 - 1 ? x_max : x_min + i * h1(); }
    double coord2(int j) const { return j == n2 - 1 ? y_max : y_min + j * h2(); }
    Point node(int i, int j) const { return {coord1(i), coord2(j)}; }
    int index(int i, int j) const { return i * n2 + j; }
    int size() const { return n1 * n2; }
    bool interior(int i, int j) const {
        return i >= 1 && i <= n1 - 2 && j >= 1 && j <= n2 - 2;
    }
    bool operator==(const Grid&) const = default;

    // [-r, r]^2 with n nodes per axis.
    static Grid square(double r, int n);
};

void validate_grid(const Grid& g);

// Scalar samples on a Grid, with an optional validity mask (empty = all
// nodes valid). Treated as immutable after construction; operations return
// new fields.
struct GridFunction {
    Grid grid;
    std::vector<double> values;
    std::vector<std::uint8_t> mask; // empty or grid.size() entries; 1 = valid

    GridFunction() = default;
    explicit GridFunction(const Grid& g, double fill = 0.0)
        : grid(g), values(static_cast<size_t>(g.size()), fill) {}

    double& at(int i, int j) { return values[grid.index(i, j)]; }
    double at(int i, int j) const { return values[grid.index(i, j)]; }
    bool masked(int i, int j) const {
        return mask.empty() || mask[grid.index(i, j)] != 0;
    }
    bool has_mask() const { return !mask.empty(); }

    // sup |values| over valid nodes
    double sup_abs() const;
};

// Per-node symmetric second-derivative matrices (d11, d12, d22).
struct HessianField {
    Grid grid;
    std::vector<double> d11, d12, d22;

    double det(int i, int j) const {
        const int k = grid.index(i, j);
        return d11[k] * d22[k] - d12[k] * d12[k];
    }
    double lambda_min(int i, int j) const;
    double lambda_max(int i, int j) const;
    GridFunction channel(int which) const; // 0 -> d11, 1 -> d12, 2 -> d22
};

// Evaluate f on every node. Throws DomainError with the node location if f
// returns a non-finite value.
GridFunction sample(const std::function<double(double, double)>& f, const Grid& g);

// Central differences at interior nodes, second-order one-sided at the grid
// boundary. Returns (d/dx1, d/dx2).
std::pair<GridFunction, GridFunction> fd_gradient(const GridFunction& u);

// 3-point second differences for d11/d22, composed first differences for d12
// (equals the 4-point cross stencil at interior nodes).
HessianField fd_hessian(const GridFunction& u);

// det(fd_hessian(u)) - f at interior nodes; mask marks where it is defined.
GridFunction ma_residual(const GridFunction& u, const GridFunction& f);

struct ConvexityReport {
    bool convex = false;
    double lambda_min = 0.0;
    int i = -1, j = -1; // minimizing node
};

// min lambda_min(fd_hessian) over interior nodes >= -tol
ConvexityReport convexity_check(const GridFunction& u, double tol);
ConvexityReport convexity_check(const GridFunction& u); // scale-aware default tol

double default_convexity_tol(const GridFunction& u);

// Bicubic interpolation (exact on cubics, O(h^4) for smooth fields); edge
// cells shift the 4x4 window inward to keep the order. Throws DomainError
// outside the bounding box.
double interpolate(const GridFunction& u, Point p);

// Mask-aware variant: *valid is set to false (and 0.0 returned) when any
// stencil node is masked out.
double interpolate_masked(const GridFunction& u, Point p, bool* valid);

// Nodes with |x| <= R (true disc membership, no fuzz beyond rounding).
std::vector<std::uint8_t> disc_mask(const Grid& g, double R);

// Nodes of `mask` whose 4-neighborhood (or 3x3 block when need_diagonals) is
// entirely inside `mask` and the grid interior.
std::vector<std::uint8_t> interior_mask(const Grid& g, const std::vector<std::uint8_t>& mask,
                                        bool need_diagonals);

} // namespace plma
