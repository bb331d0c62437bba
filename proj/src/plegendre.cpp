#include "plma/plegendre.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "plma/parallel.hpp"

namespace plma {

namespace {

// Interpolating polynomial through up to 4 points, Newton form.
struct NewtonPoly {
    int m = 0;
    double xs[4] = {0, 0, 0, 0};
    double c[4] = {0, 0, 0, 0};

    static NewtonPoly fit(const double* x, const double* v, int m) {
        NewtonPoly p;
        p.m = m;
        double dd[4];
        for (int i = 0; i < m; ++i) {
            p.xs[i] = x[i];
            dd[i] = v[i];
        }
        for (int order = 1; order < m; ++order)
            for (int i = m - 1; i >= order; --i)
                dd[i] = (dd[i] - dd[i - 1]) / (x[i] - x[i - order]);
        for (int i = 0; i < m; ++i) p.c[i] = dd[i];
        return p;
    }

    double eval(double t) const {
        double acc = c[m - 1];
        for (int i = m - 2; i >= 0; --i) acc = acc * (t - xs[i]) + c[i];
        return acc;
    }

    double deriv(double t) const {
        double dp = 0.0;
        for (int i = 1; i < m; ++i) {
            double si = 0.0;
            for (int l = 0; l < i; ++l) {
                double prod = 1.0;
                for (int j = 0; j < i; ++j)
                    if (j != l) prod *= (t - xs[j]);
                si += prod;
            }
            dp += c[i] * si;
        }
        return dp;
    }
};

struct Slice {
    std::vector<double> x, v; // strictly increasing x
};

using ConjOut = SliceConjugate;

// Conjugate of one slice at increasing query slopes. The lower convex hull
// gives the exact conjugate of the piecewise-linear interpolant (ties in the
// attaining abscissa broken toward the smallest x1); a local polynomial model
// of the slice then sharpens the value wherever the supremum is attained
// strictly inside, which restores fourth-order accuracy for smooth slices.
void conjugate_slice(const Slice& s, const std::vector<double>& ys, ConjOut* out) {
    const int n = static_cast<int>(s.x.size());
    const auto& x = s.x;
    const auto& v = s.v;

    std::vector<int> hull;
    hull.reserve(static_cast<size_t>(n));
    for (int k = 0; k < n; ++k) {
        while (hull.size() >= 2) {
            const int a = hull[hull.size() - 2], m = hull.back();
            if ((v[m] - v[a]) * (x[k] - x[a]) >= (v[k] - v[a]) * (x[m] - x[a]))
                hull.pop_back();
            else
                break;
        }
        hull.push_back(k);
    }
    const int hn = static_cast<int>(hull.size());

    int ptr = 0;
    int cached_k = -1;
    NewtonPoly model;
    int w0 = 0;
    for (size_t q = 0; q < ys.size(); ++q) {
        const double y = ys[q];
        while (ptr < hn - 1) {
            const int ha = hull[ptr], hb = hull[ptr + 1];
            if ((v[hb] - v[ha]) < y * (x[hb] - x[ha]))
                ++ptr;
            else
                break;
        }
        const int k = hull[ptr];
        double val = x[k] * y - v[k];
        double ax = x[k];
        bool attained = false;
        if (n >= 3) {
            if (k != cached_k) {
                const int m = std::min(4, n);
                w0 = std::clamp(k - 1, 0, n - m);
                model = NewtonPoly::fit(&x[w0], &v[w0], m);
                cached_k = k;
            }
            const double lo = x[std::max(k - 1, 0)], hi = x[std::min(k + 1, n - 1)];
            double xhat;
            if (model.deriv(lo) >= y)
                xhat = lo;
            else if (model.deriv(hi) <= y)
                xhat = hi;
            else {
                double a = lo, b = hi;
                for (int it = 0; it < 55; ++it) {
                    const double mid = 0.5 * (a + b);
                    (model.deriv(mid) < y ? a : b) = mid;
                }
                xhat = 0.5 * (a + b);
            }
            const double rv = xhat * y - model.eval(xhat);
            if (rv > val) {
                val = rv;
                ax = xhat;
            }
            // attained iff the refined maximizer sits strictly inside the slice
            const double inner = 1e-9 * (x[n - 1] - x[0]);
            attained = ax > x[0] + inner && ax < x[n - 1] - inner;
        }
        out[q] = {val, ax, attained};
    }
}

} // namespace

void conjugate_samples(const std::vector<double>& x, const std::vector<double>& v,
                       const std::vector<double>& queries, std::vector<SliceConjugate>& out) {
    if (x.size() < 2 || x.size() != v.size())
        throw DomainError("conjugate_samples: need at least 2 samples");
    for (size_t k = 1; k < x.size(); ++k)
        if (!(x[k] > x[k - 1]))
            throw DomainError("conjugate_samples: abscissae must be strictly increasing");
    out.resize(queries.size());
    Slice s{x, v};
    conjugate_slice(s, queries, out.data());
}

TransformResult partial_legendre(const GridFunction& u, const TransformOptions& opt) {
    const Grid& g = u.grid;
    validate_grid(g);
    const double scale = std::max(1.0, u.sup_abs());
    const double ctol = opt.convexity_tol > 0.0 ? opt.convexity_tol : 1e-8 * scale;

    const bool disc = opt.disc_radius.has_value();
    const double R = disc ? *opt.disc_radius : 0.0;
    if (disc && (g.x_min > -R + 1e-12 || g.x_max < R - 1e-12))
        throw DomainError("partial_legendre: disc of radius " + std::to_string(R) +
                          " exceeds the grid in x1");

    std::vector<Slice> slices(static_cast<size_t>(g.n2));
    std::vector<char> ok(static_cast<size_t>(g.n2), 0);
    for (int j = 0; j < g.n2; ++j) {
        const double x2 = g.coord2(j);
        Slice s;
        if (disc) {
            const double w2 = R * R - x2 * x2;
            if (w2 <= 0.0) continue;
            const double w = std::sqrt(w2);
            for (int i = 0; i < g.n1; ++i) {
                const double x1 = g.coord1(i);
                if (std::abs(x1) <= w * (1.0 + 1e-14)) {
                    s.x.push_back(x1);
                    s.v.push_back(u.at(i, j));
                }
            }
            if (s.x.size() < 2) continue;
            const double margin = 1e-9 * g.h1();
            const double wl = std::max(-w, g.x_min), wr = std::min(w, g.x_max);
            if (s.x.front() > wl + margin) {
                const double val = opt.boundary ? opt.boundary(wl, x2) : interpolate(u, {wl, x2});
                s.x.insert(s.x.begin(), wl);
                s.v.insert(s.v.begin(), val);
            }
            if (s.x.back() < wr - margin) {
                const double val = opt.boundary ? opt.boundary(wr, x2) : interpolate(u, {wr, x2});
                s.x.push_back(wr);
                s.v.push_back(val);
            }
        } else {
            s.x.resize(static_cast<size_t>(g.n1));
            s.v.resize(static_cast<size_t>(g.n1));
            for (int i = 0; i < g.n1; ++i) {
                s.x[static_cast<size_t>(i)] = g.coord1(i);
                s.v[static_cast<size_t>(i)] = u.at(i, j);
            }
        }
        if (!opt.convexify) {
            for (size_t k = 1; k + 1 < s.x.size(); ++k) {
                const double sl = (s.v[k] - s.v[k - 1]) / (s.x[k] - s.x[k - 1]);
                const double sr = (s.v[k + 1] - s.v[k]) / (s.x[k + 1] - s.x[k]);
                const double curv = (sr - sl) / (0.5 * (s.x[k + 1] - s.x[k - 1]));
                if (curv < -ctol)
                    throw NonConvexError("partial_legendre: slice j=" + std::to_string(j) +
                                         " non-convex (curvature " + std::to_string(curv) + ")");
            }
        }
        slices[static_cast<size_t>(j)] = std::move(s);
        ok[static_cast<size_t>(j)] = 1;
    }

    double y_lo = std::numeric_limits<double>::infinity();
    double y_hi = -std::numeric_limits<double>::infinity();
    int valid_rows = 0;
    for (int j = 0; j < g.n2; ++j) {
        if (!ok[static_cast<size_t>(j)]) continue;
        ++valid_rows;
        const Slice& s = slices[static_cast<size_t>(j)];
        for (size_t k = 0; k + 1 < s.x.size(); ++k) {
            const double sl = (s.v[k + 1] - s.v[k]) / (s.x[k + 1] - s.x[k]);
            y_lo = std::min(y_lo, sl);
            y_hi = std::max(y_hi, sl);
        }
    }
    if (valid_rows < 3)
        throw DomainError("partial_legendre: fewer than 3 usable slices");
    if (!(y_hi - y_lo > 1e-10 * std::max(1.0, std::abs(y_lo) + std::abs(y_hi))))
        throw NonConvexError("partial_legendre: degenerate slope range (affine input?)");

    const Grid yg{y_lo, y_hi, g.y_min, g.y_max, g.n1, g.n2};
    TransformResult tr;
    tr.ustar = GridFunction(yg);
    tr.ustar.mask.assign(static_cast<size_t>(yg.size()), 0);
    tr.argmax = GridFunction(yg);

    std::vector<double> ys(static_cast<size_t>(yg.n1));
    for (int iy = 0; iy < yg.n1; ++iy) ys[static_cast<size_t>(iy)] = yg.coord1(iy);

    parallel_for(0, g.n2, [&](int j) {
        if (!ok[static_cast<size_t>(j)]) return;
        std::vector<ConjOut> row(ys.size());
        conjugate_slice(slices[static_cast<size_t>(j)], ys, row.data());
        for (int iy = 0; iy < yg.n1; ++iy) {
            const ConjOut& o = row[static_cast<size_t>(iy)];
            tr.ustar.at(iy, j) = o.value;
            tr.argmax.at(iy, j) = o.argmax;
            tr.ustar.mask[static_cast<size_t>(yg.index(iy, j))] = o.attained ? 1 : 0;
        }
    }, /*min_grain=*/8);

    if (disc && opt.polygon_mask) {
        tr.polygon = pmap_circle(u, R, std::max(opt.circle_samples, 4 * std::max(g.n1, g.n2)));
        for (int iy = 0; iy < yg.n1; ++iy)
            for (int j = 0; j < yg.n2; ++j) {
                const int k = yg.index(iy, j);
                if (tr.ustar.mask[static_cast<size_t>(k)] &&
                    !point_in_polygon(tr.polygon, yg.node(iy, j)))
                    tr.ustar.mask[static_cast<size_t>(k)] = 0;
            }
    }
    return tr;
}

PMapSamples pmap(const GridFunction& u) {
    const auto [g1, g2] = fd_gradient(u);
    (void)g2;
    PMapSamples s;
    const Grid& g = u.grid;
    for (int i = 0; i < g.n1; ++i)
        for (int j = 0; j < g.n2; ++j) {
            if (!u.masked(i, j)) continue;
            const Point p = g.node(i, j);
            s.x.push_back(p);
            s.y.push_back({g1.at(i, j), p.x2});
        }
    return s;
}

InvolutionReport involution_error(const GridFunction& u) {
    const TransformResult t1 = partial_legendre(u);
    const TransformResult t2 = partial_legendre(t1.ustar);
    const Grid& g = u.grid;
    const Grid& gb = t2.ustar.grid;
    const double margin = 2.0 * gb.h1();

    InvolutionReport rep;
    for (int i = 0; i < g.n1; ++i) {
        const double x1 = g.coord1(i);
        if (x1 < gb.x_min + margin || x1 > gb.x_max - margin) continue;
        for (int j = 2; j <= g.n2 - 3; ++j) {
            bool valid = false;
            const double vv = interpolate_masked(t2.ustar, {x1, g.coord2(j)}, &valid);
            if (!valid) continue;
            rep.error = std::max(rep.error, std::abs(vv - u.at(i, j)));
            ++rep.compared;
        }
    }
    if (rep.compared == 0)
        throw DomainError("involution_error: empty comparison region");
    return rep;
}

IdentityResiduals derivative_identity_residuals(const GridFunction& u, const GridFunction& f,
                                                const TransformOptions& opt, double u11_floor) {
    if (!(u.grid == f.grid)) throw DomainError("derivative_identity_residuals: grid mismatch");
    const TransformResult T = partial_legendre(u, opt);
    const HessianField Hs = fd_hessian(T.ustar);
    const HessianField H = fd_hessian(u);
    const GridFunction h11 = H.channel(0), h12 = H.channel(1);

    const Grid& yg = T.ustar.grid;
    const Grid& g = u.grid;
    const auto valid = interior_mask(yg, T.ustar.mask, /*need_diagonals=*/true);

    IdentityResiduals res;
    for (int iy = 1; iy <= yg.n1 - 2; ++iy) {
        for (int j = 1; j <= yg.n2 - 2; ++j) {
            const int k = yg.index(iy, j);
            if (!valid[static_cast<size_t>(k)]) continue;
            const double x1s = T.argmax.at(iy, j);
            const double y2 = yg.coord2(j);
            if (x1s < g.x_min || x1s > g.x_max) continue;
            const Point pre{x1s, y2};
            const double u11 = interpolate(h11, pre);
            if (u11 <= u11_floor) {
                ++res.skipped_degenerate;
                continue;
            }
            const double u12 = interpolate(h12, pre);
            const double fv = interpolate(f, pre);
            res.r11 = std::max(res.r11, std::abs(Hs.d11[static_cast<size_t>(k)] - 1.0 / u11));
            res.r12 = std::max(res.r12, std::abs(Hs.d12[static_cast<size_t>(k)] + u12 / u11));
            res.r22 = std::max(res.r22, std::abs(Hs.d22[static_cast<size_t>(k)] + fv / u11));
            ++res.compared;
        }
    }
    if (res.compared == 0)
        throw DomainError("derivative_identity_residuals: empty mask interior");
    return res;
}

double delta_radius(double m0, double b, double R) {
    if (!(m0 > 0.0) || !(b > 0.0) || !(R > 0.0))
        throw DomainError("delta_radius: m0, b, R must be positive");
    return std::min(m0 / (2.0 * b), m0 / (2.0 * R));
}

std::vector<Point> pmap_circle(const GridFunction& u, double R, int n_samples) {
    const Grid& g = u.grid;
    const auto [g1, g2] = fd_gradient(u);
    (void)g2;
    std::vector<Point> poly(static_cast<size_t>(n_samples));
    const double two_pi = 2.0 * std::acos(-1.0);
    for (int k = 0; k < n_samples; ++k) {
        const double th = two_pi * k / n_samples;
        Point p{R * std::cos(th), R * std::sin(th)};
        p.x1 = std::clamp(p.x1, g.x_min, g.x_max);
        p.x2 = std::clamp(p.x2, g.y_min, g.y_max);
        poly[static_cast<size_t>(k)] = {interpolate(g1, p), p.x2};
    }
    return poly;
}

bool point_in_polygon(const std::vector<Point>& poly, Point p) {
    bool in = false;
    const size_t n = poly.size();
    for (size_t i = 0, j = n - 1; i < n; j = i++) {
        const Point& a = poly[i];
        const Point& b = poly[j];
        if ((a.x2 > p.x2) != (b.x2 > p.x2)) {
            const double t = (p.x2 - a.x2) / (b.x2 - a.x2);
            if (p.x1 < a.x1 + t * (b.x1 - a.x1)) in = !in;
        }
    }
    return in;
}

double polygon_distance_to_origin(const std::vector<Point>& poly) {
    double best = std::numeric_limits<double>::infinity();
    const size_t n = poly.size();
    for (size_t i = 0, j = n - 1; i < n; j = i++) {
        const Point a = poly[j], b = poly[i];
        const Point d = b - a;
        const double L2 = dot(d, d);
        const double t = L2 > 0.0 ? std::clamp(-dot(a, d) / L2, 0.0, 1.0) : 0.0;
        best = std::min(best, norm(a + t * d));
    }
    return best;
}

BallInclusionResult verify_ball_inclusion(const GridFunction& u, double R, double delta,
                                          int n_samples) {
    if (!(delta > 0.0)) throw DomainError("verify_ball_inclusion: delta must be positive");
    n_samples = std::max(n_samples, 720);
    const std::vector<Point> poly = pmap_circle(u, R, n_samples);

    BallInclusionResult res;
    res.min_boundary_norm = std::numeric_limits<double>::infinity();
    const double two_pi = 2.0 * std::acos(-1.0);
    for (int k = 0; k < n_samples; ++k) {
        const double nn = norm(poly[static_cast<size_t>(k)]);
        if (nn < res.min_boundary_norm) {
            res.min_boundary_norm = nn;
            res.violating_angle = two_pi * k / n_samples;
        }
    }
    res.boundary_ok = res.min_boundary_norm >= delta;
    res.origin_inside = point_in_polygon(poly, {0.0, 0.0});
    res.min_polygon_distance = polygon_distance_to_origin(poly);
    res.sweep_ok = res.origin_inside && res.min_polygon_distance >= delta;
    res.pass = res.boundary_ok && res.sweep_ok;
    return res;
}

} // namespace plma
