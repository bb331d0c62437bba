#pragma once

#include <vector>

#include "plma/grid.hpp"

namespace plma {

// Affine function touching the graph of a convex u from below at z.
struct SupportingPlane {
    Point z;
    double value_at_z = 0.0;
    Point slope;

    double eval(Point x) const { return value_at_z + dot(slope, x - z); }
};

// Builds the plane from interpolated value/gradient at z and verifies it lies
// below u (up to 1e-8 * scale) on all valid nodes. Throws NonConvexError on a
// violation, DomainError when z is not strictly inside the grid.
SupportingPlane supporting_plane(const GridFunction& u, Point z);

struct ModulusPoint {
    double t = 0.0;
    double m = 0.0;
    Point z, x; // attaining pair
};

struct ModulusCurve {
    std::vector<ModulusPoint> points;       // increasing t
    std::vector<double> lower_bounds;       // matched 1:1 with points
};

// Discrete infimum of u(x) - l_z(x) over valid node pairs with |x - z| > t,
// z interior; refinement_levels rounds of local subsampling around the coarse
// minimizer (each 4x finer). Throws DomainError when no admissible pair exists.
ModulusPoint modulus_of_convexity(const GridFunction& u, double t, int refinement_levels = 3);

struct BoundaryData {
    double R = 0.0;
    double m0 = 0.0; // inf of u over the circle of radius R
    double b = 0.0;  // sup of |Du| over the circle
    int samples = 0;
    Point argmin_m0, argmax_b;
};

// Equispaced-angle sampling of interpolated u and |interpolated Du| on the
// circle of radius R. Requires n_samples >= 720 and the circle inside the
// grid bounding box.
BoundaryData boundary_data(const GridFunction& u, double R, int n_samples = 720);

struct ModulusLowerBound {
    double value = 0.0;
    bool underflow = false; // exponent exceeded the double exp range
};

// (b t / 2) / (e^{128 c0 b^2 / t^2} - 1), evaluated with expm1 and saturated
// to zero (with the underflow flag) when the exponent would overflow exp().
ModulusLowerBound modulus_lower_bound(double b, double t, double c0);

} // namespace plma
