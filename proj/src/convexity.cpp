#include "plma/convexity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "plma/parallel.hpp"

namespace plma {

namespace {

// Off-node membership: point inside the bounding box and, for masked fields,
// inside a cell whose four corners are all valid.
bool point_in_domain(const GridFunction& u, Point p) {
    const Grid& g = u.grid;
    if (p.x1 < g.x_min || p.x1 > g.x_max || p.x2 < g.y_min || p.x2 > g.y_max) return false;
    if (!u.has_mask()) return true;
    const int i = std::clamp(static_cast<int>(std::floor((p.x1 - g.x_min) / g.h1())), 0, g.n1 - 2);
    const int j = std::clamp(static_cast<int>(std::floor((p.x2 - g.y_min) / g.h2())), 0, g.n2 - 2);
    return u.masked(i, j) && u.masked(i + 1, j) && u.masked(i, j + 1) && u.masked(i + 1, j + 1);
}

} // namespace

SupportingPlane supporting_plane(const GridFunction& u, Point z) {
    const Grid& g = u.grid;
    if (z.x1 <= g.x_min || z.x1 >= g.x_max || z.x2 <= g.y_min || z.x2 >= g.y_max)
        throw DomainError("supporting_plane: z must be strictly inside the grid");
    const auto [g1, g2] = fd_gradient(u);
    SupportingPlane pl;
    pl.z = z;
    pl.value_at_z = interpolate(u, z);
    pl.slope = {interpolate(g1, z), interpolate(g2, z)};

    const double tol = 1e-8 * std::max(1.0, u.sup_abs());
    double worst = std::numeric_limits<double>::infinity();
    int wi = -1, wj = -1;
    for (int i = 0; i < g.n1; ++i) {
        for (int j = 0; j < g.n2; ++j) {
            if (!u.masked(i, j)) continue;
            const double gap = u.at(i, j) - pl.eval(g.node(i, j));
            if (gap < worst) {
                worst = gap;
                wi = i;
                wj = j;
            }
        }
    }
    if (worst < -tol)
        throw NonConvexError("supporting plane at (" + std::to_string(z.x1) + "," +
                             std::to_string(z.x2) + ") lies above u by " +
                             std::to_string(-worst) + " at node (" + std::to_string(wi) + "," +
                             std::to_string(wj) + ")");
    return pl;
}

ModulusPoint modulus_of_convexity(const GridFunction& u, double t, int refinement_levels) {
    const Grid& g = u.grid;
    const double diam = std::hypot(g.x_max - g.x_min, g.y_max - g.y_min);
    if (!(t > 0.0) || t >= diam)
        throw DomainError("modulus_of_convexity: need 0 < t < domain diameter");

    const auto [gf1, gf2] = fd_gradient(u);

    // coarse candidates, capped near 64 nodes per axis
    const int stride = std::max(1, (std::max(g.n1, g.n2) + 63) / 64);
    struct Cand {
        Point p;
        double val, s1, s2;
    };
    std::vector<Cand> zs, xs;
    for (int i = 1; i <= g.n1 - 2; i += stride)
        for (int j = 1; j <= g.n2 - 2; j += stride)
            if (u.masked(i, j))
                zs.push_back({g.node(i, j), u.at(i, j), gf1.at(i, j), gf2.at(i, j)});
    for (int i = 0; i < g.n1; i += stride)
        for (int j = 0; j < g.n2; j += stride)
            if (u.masked(i, j)) xs.push_back({g.node(i, j), u.at(i, j), 0.0, 0.0});

    const double t2 = t * t;
    struct Best {
        double val = std::numeric_limits<double>::infinity();
        long long idx = -1;
        Point z, x;
    };
    std::vector<Best> per_z(zs.size());
    parallel_for(0, static_cast<int>(zs.size()), [&](int zi) {
        const Cand& z = zs[static_cast<size_t>(zi)];
        Best b;
        for (size_t xi = 0; xi < xs.size(); ++xi) {
            const Cand& x = xs[xi];
            const double d1 = x.p.x1 - z.p.x1, d2 = x.p.x2 - z.p.x2;
            if (d1 * d1 + d2 * d2 <= t2) continue;
            const double val = x.val - (z.val + z.s1 * d1 + z.s2 * d2);
            const long long idx = static_cast<long long>(zi) * static_cast<long long>(xs.size()) +
                                  static_cast<long long>(xi);
            if (val < b.val || (val == b.val && idx < b.idx)) b = {val, idx, z.p, x.p};
        }
        per_z[static_cast<size_t>(zi)] = b;
    }, /*min_grain=*/8);

    Best best;
    for (const Best& b : per_z)
        if (b.idx >= 0 && (b.val < best.val || (b.val == best.val && b.idx < best.idx))) best = b;
    if (best.idx < 0)
        throw DomainError("modulus_of_convexity: no admissible pair with |x-z| > " +
                          std::to_string(t));

    // local subsampling around the coarse minimizer; candidate sets include
    // the incumbent, so the value is nonincreasing in the level
    const double h1 = g.h1(), h2 = g.h2();
    double sp1 = stride * h1, sp2 = stride * h2;
    auto z_interior = [&](Point p) {
        return p.x1 >= g.x_min + h1 && p.x1 <= g.x_max - h1 && p.x2 >= g.y_min + h2 &&
               p.x2 <= g.y_max - h2 && point_in_domain(u, p);
    };
    for (int level = 0; level < refinement_levels; ++level) {
        sp1 /= 4.0;
        sp2 /= 4.0;
        const Point zc = best.z, xc = best.x;
        for (int a = -4; a <= 4; ++a) {
            for (int b2 = -4; b2 <= 4; ++b2) {
                const Point z{zc.x1 + a * sp1, zc.x2 + b2 * sp2};
                if (!z_interior(z)) continue;
                const double uz = interpolate(u, z);
                const double s1 = interpolate(gf1, z), s2 = interpolate(gf2, z);
                for (int c = -4; c <= 4; ++c) {
                    for (int d = -4; d <= 4; ++d) {
                        const Point x{xc.x1 + c * sp1, xc.x2 + d * sp2};
                        const double d1 = x.x1 - z.x1, d2 = x.x2 - z.x2;
                        if (d1 * d1 + d2 * d2 <= t2) continue;
                        if (!point_in_domain(u, x)) continue;
                        const double val = interpolate(u, x) - (uz + s1 * d1 + s2 * d2);
                        if (val < best.val) best = {val, best.idx, z, x};
                    }
                }
            }
        }
    }
    return {t, best.val, best.z, best.x};
}

BoundaryData boundary_data(const GridFunction& u, double R, int n_samples) {
    if (n_samples < 720)
        throw DomainError("boundary_data: n_samples must be >= 720");
    const Grid& g = u.grid;
    const double eps = 1e-12 * std::max(1.0, R);
    if (g.x_min > -R + eps || g.x_max < R - eps || g.y_min > -R + eps || g.y_max < R - eps)
        throw DomainError("boundary_data: circle of radius " + std::to_string(R) +
                          " exceeds the grid");
    const auto [g1, g2] = fd_gradient(u);
    BoundaryData bd;
    bd.R = R;
    bd.samples = n_samples;
    bd.m0 = std::numeric_limits<double>::infinity();
    bd.b = -std::numeric_limits<double>::infinity();
    const double two_pi = 2.0 * std::acos(-1.0);
    for (int k = 0; k < n_samples; ++k) {
        const double th = two_pi * k / n_samples;
        Point p{R * std::cos(th), R * std::sin(th)};
        p.x1 = std::clamp(p.x1, g.x_min, g.x_max);
        p.x2 = std::clamp(p.x2, g.y_min, g.y_max);
        const double val = interpolate(u, p);
        const double gn = std::hypot(interpolate(g1, p), interpolate(g2, p));
        if (val < bd.m0) {
            bd.m0 = val;
            bd.argmin_m0 = p;
        }
        if (gn > bd.b) {
            bd.b = gn;
            bd.argmax_b = p;
        }
    }
    return bd;
}

ModulusLowerBound modulus_lower_bound(double b, double t, double c0) {
    if (!(b > 0.0) || !(t > 0.0) || !(c0 > 0.0))
        throw DomainError("modulus_lower_bound: b, t, c0 must be positive");
    const double expo = 128.0 * c0 * (b / t) * (b / t);
    if (expo > 709.0) return {0.0, true};
    return {0.5 * b * t / std::expm1(expo), false};
}

} // namespace plma
