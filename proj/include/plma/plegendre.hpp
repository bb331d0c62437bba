#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "plma/grid.hpp"

namespace plma {

struct TransformOptions {
    // When set, slices are restricted to chords of the disc |x| <= R and the
    // result carries a mask for the image of the disc under x -> (d1u, x2).
    std::optional<double> disc_radius;
    // Exact values of u at the chord endpoints on the circle; when absent
    // they are interpolated from the samples.
    std::function<double(double, double)> boundary;
    // Slice convexity gate, in curvature units. <= 0 selects 1e-8 * scale.
    double convexity_tol = 0.0;
    // Accept non-convex slices and conjugate their lower convex hull instead
    // of throwing. Used on approximate iterates inside the equation solver.
    bool convexify = false;
    // Intersect the validity mask with the polygon traced by the forward map
    // of the circle (needs disc_radius). The attainment mask alone already
    // describes the image region row by row.
    bool polygon_mask = true;
    int circle_samples = 1440;
};

// Slice-wise convex conjugate of u in the first coordinate, evaluated on a
// uniform y1-lattice spanning the attained slope range. Values come from the
// lower convex hull of the slice samples sharpened by a local cubic model of
// the slice, so smooth inputs are conjugated to fourth order. The mask marks
// nodes where the supremum is attained strictly inside the slice (and inside
// the image polygon when disc_radius is given).
struct TransformResult {
    GridFunction ustar;           // on the y-grid, with validity mask
    GridFunction argmax;          // attaining abscissa x1*(y1, y2)
    std::vector<Point> polygon;   // image of the circle, when disc_radius given
};

TransformResult partial_legendre(const GridFunction& u, const TransformOptions& opt = {});

// Forward map samples y = (d1u(x), x2) at valid nodes.
struct PMapSamples {
    std::vector<Point> x;
    std::vector<Point> y;
};
PMapSamples pmap(const GridFunction& u);

// sup |(u*)* - u| over a common interior region (transform twice, interpolate
// back to the x-grid).
struct InvolutionReport {
    double error = 0.0;
    int compared = 0;
};
InvolutionReport involution_error(const GridFunction& u);

// sup-norm residuals between fd_hessian(u*) and the targets
// (1/u11, -u12/u11, -f/u11) pulled back through the attaining abscissa.
// Nodes with u11 <= u11_floor are skipped and counted separately (the
// identities divide by u11).
struct IdentityResiduals {
    double r11 = 0.0, r12 = 0.0, r22 = 0.0;
    int compared = 0;
    int skipped_degenerate = 0;
};
IdentityResiduals derivative_identity_residuals(const GridFunction& u, const GridFunction& f,
                                                const TransformOptions& opt = {},
                                                double u11_floor = 1e-8);

// min(m0 / (2 b), m0 / (2 R))
double delta_radius(double m0, double b, double R);

// Checks that the ball of radius delta around the origin is contained in the
// image of the disc |x| <= R under x -> (d1u, x2): every boundary image point
// has norm >= delta, the origin lies inside the image polygon, and the
// polygon keeps distance >= delta from the origin.
struct BallInclusionResult {
    bool pass = false;
    bool boundary_ok = false;
    bool origin_inside = false;
    bool sweep_ok = false;
    double min_boundary_norm = 0.0;
    double min_polygon_distance = 0.0;
    double violating_angle = 0.0; // angle of the worst boundary sample
};
BallInclusionResult verify_ball_inclusion(const GridFunction& u, double R, double delta,
                                          int n_samples = 1440);

// Image of the circle of radius R under the forward map, as a closed polygon.
std::vector<Point> pmap_circle(const GridFunction& u, double R, int n_samples);

bool point_in_polygon(const std::vector<Point>& poly, Point p);
double polygon_distance_to_origin(const std::vector<Point>& poly);

// One-dimensional building block: conjugate of the samples (x, v) evaluated
// at increasing query slopes. Used by the transform itself and by the
// Monge-Ampere pipeline to invert a transformed field row by row.
struct SliceConjugate {
    double value = 0.0;
    double argmax = 0.0;
    bool attained = false; // supremum attained strictly inside the samples
};
void conjugate_samples(const std::vector<double>& x, const std::vector<double>& v,
                       const std::vector<double>& queries, std::vector<SliceConjugate>& out);

} // namespace plma
