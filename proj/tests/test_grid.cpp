#include <doctest.h>

#include <cmath>
#include <random>

#include "plma/grid.hpp"
#include "plma/io.hpp"

using namespace plma;

namespace {

double exp_case_u(double x1, double x2) { return std::exp(x1) - 1.0 - x1 + 0.5 * x2 * x2; }

GridFunction sample_square(const std::function<double(double, double)>& f, double r, int n) {
    return sample(f, Grid::square(r, n));
}

} // namespace

TEST_CASE("grid node mapping is exact at endpoints and bijective") {
    const Grid g{-1.0, 1.0, -2.0, 3.0, 5, 11};
    CHECK(g.coord1(0) == -1.0);
    CHECK(g.coord1(4) == 1.0);
    CHECK(g.coord2(0) == -2.0);
    CHECK(g.coord2(10) == 3.0);
    CHECK(g.h1() == doctest::Approx(0.5));
    CHECK(g.h2() == doctest::Approx(0.5));
    CHECK_THROWS_AS(validate_grid(Grid{0, 1, 0, 1, 2, 5}), DomainError);
}

TEST_CASE("sample: radial quadratic on a 3x3 grid") {
    const GridFunction u = sample_square([](double a, double b) { return 0.5 * (a * a + b * b); },
                                         1.0, 3);
    // corners 0.5(1+1) = 1, edge midpoints 0.5, center 0
    CHECK(u.at(0, 0) == doctest::Approx(1.0));
    CHECK(u.at(0, 1) == doctest::Approx(0.5));
    CHECK(u.at(1, 1) == doctest::Approx(0.0));
    CHECK(u.at(2, 2) == doctest::Approx(1.0));
}

TEST_CASE("sample: zero field and exponential case values") {
    const GridFunction z = sample_square([](double, double) { return 0.0; }, 1.0, 5);
    for (const double v : z.values) CHECK(v == 0.0);

    const GridFunction u = sample_square(exp_case_u, 1.0, 3);
    CHECK(u.at(1, 1) == doctest::Approx(0.0));                       // (0,0)
    CHECK(u.at(2, 1) == doctest::Approx(std::exp(1.0) - 2.0));       // (1,0)
}

TEST_CASE("sample rejects non-finite evaluations with the node location") {
    const Grid g = Grid::square(1.0, 3);
    CHECK_THROWS_AS(sample([](double a, double) { return 1.0 / a; }, g), DomainError);
}

TEST_CASE("fd_gradient exact for quadratics, zero for constants") {
    const GridFunction u = sample_square([](double a, double b) { return 0.5 * (a * a + b * b); },
                                         1.0, 9);
    const auto [g1, g2] = fd_gradient(u);
    for (int i = 0; i < 9; ++i)
        for (int j = 0; j < 9; ++j) {
            const Point p = u.grid.node(i, j);
            CHECK(g1.at(i, j) == doctest::Approx(p.x1).epsilon(1e-12));
            CHECK(g2.at(i, j) == doctest::Approx(p.x2).epsilon(1e-12));
        }

    const GridFunction c = sample_square([](double, double) { return 3.25; }, 1.0, 9);
    const auto [c1, c2] = fd_gradient(c);
    for (int k = 0; k < c.grid.size(); ++k) {
        CHECK(std::abs(c1.values[k]) < 1e-13);
        CHECK(std::abs(c2.values[k]) < 1e-13);
    }
}

TEST_CASE("fd_gradient matches the closed form for the exponential case") {
    // h = 0.01 around (0.5, 0)
    const Grid g{0.4, 0.6, -0.1, 0.1, 21, 21};
    const GridFunction u = sample(exp_case_u, g);
    const auto [g1, g2] = fd_gradient(u);
    const double got = g1.at(10, 10); // node (0.5, 0)
    CHECK(std::abs(got - (std::exp(0.5) - 1.0)) < 5e-5);
}

TEST_CASE("fd_hessian exact for quadratics at every node") {
    const GridFunction u = sample_square(
        [](double a, double b) { return 0.5 * (a * a + 2.0 * 0.5 * a * b + 2.0 * b * b); }, 1.0,
        9);
    const HessianField h = fd_hessian(u);
    for (int k = 0; k < u.grid.size(); ++k) {
        CHECK(h.d11[k] == doctest::Approx(1.0).epsilon(1e-11));
        CHECK(h.d12[k] == doctest::Approx(0.5).epsilon(1e-11));
        CHECK(h.d22[k] == doctest::Approx(2.0).epsilon(1e-11));
    }
}

TEST_CASE("fd_hessian on the eps = 0.5 family gives (0.5, 0, 2)") {
    const GridFunction u = sample_square(
        [](double a, double b) { return 0.25 * a * a + b * b; }, 1.0, 17);
    const HessianField h = fd_hessian(u);
    for (int i = 1; i < 16; ++i)
        for (int j = 1; j < 16; ++j) {
            CHECK(h.d11[u.grid.index(i, j)] == doctest::Approx(0.5).epsilon(1e-11));
            CHECK(std::abs(h.d12[u.grid.index(i, j)]) < 1e-11);
            CHECK(h.d22[u.grid.index(i, j)] == doctest::Approx(2.0).epsilon(1e-11));
        }
}

TEST_CASE("fd_hessian of the exponential case at the origin, h = 0.01") {
    const Grid g{-0.1, 0.1, -0.1, 0.1, 21, 21};
    const GridFunction u = sample(exp_case_u, g);
    const HessianField h = fd_hessian(u);
    const int k = g.index(10, 10);
    CHECK(std::abs(h.d11[k] - 1.0) < 1e-4);
    CHECK(std::abs(h.d12[k]) < 1e-10);
    CHECK(std::abs(h.d22[k] - 1.0) < 1e-10);
}

TEST_CASE("ma_residual vanishes on exact solutions") {
    const Grid g = Grid::square(1.0, 17);
    const GridFunction one = sample([](double, double) { return 1.0; }, g);

    const GridFunction radial =
        sample([](double a, double b) { return 0.5 * (a * a + b * b); }, g);
    GridFunction r = ma_residual(radial, one);
    for (int k = 0; k < g.size(); ++k)
        if (r.mask[k]) CHECK(std::abs(r.values[k]) < 1e-11);

    // det A = 1.75 for the cross-term quadratic
    const GridFunction cross = sample(
        [](double a, double b) { return 0.5 * a * a + 0.5 * a * b + b * b; }, g);
    const GridFunction f175 = sample([](double, double) { return 1.75; }, g);
    r = ma_residual(cross, f175);
    for (int k = 0; k < g.size(); ++k)
        if (r.mask[k]) CHECK(std::abs(r.values[k]) < 1e-11);

    // the one-parameter family solves det = 1 for every eps
    for (const double eps : {0.5, 0.1}) {
        const GridFunction ue = sample(
            [eps](double a, double b) { return 0.5 * eps * a * a + 0.5 / eps * b * b; }, g);
        r = ma_residual(ue, one);
        for (int k = 0; k < g.size(); ++k)
            if (r.mask[k]) CHECK(std::abs(r.values[k]) < 1e-9);
    }

    CHECK_THROWS_AS(ma_residual(radial, sample([](double, double) { return 1.0; },
                                               Grid::square(1.0, 9))),
                    DomainError);
}

TEST_CASE("ma_residual self-consistency: det of own Hessian gives zero residual") {
    const Grid g = Grid::square(1.0, 13);
    std::mt19937_64 gen(99);
    GridFunction u(g);
    for (auto& v : u.values) v = static_cast<double>(gen() >> 11) * 0x1.0p-53;
    const HessianField h = fd_hessian(u);
    GridFunction f(g);
    for (int i = 0; i < g.n1; ++i)
        for (int j = 0; j < g.n2; ++j) f.at(i, j) = h.det(i, j);
    const GridFunction r = ma_residual(u, f);
    for (int k = 0; k < g.size(); ++k)
        if (r.mask[k]) CHECK(r.values[k] == 0.0);
}

TEST_CASE("convexity_check: convex, concave, and the eps family") {
    const Grid g = Grid::square(1.0, 17);
    const GridFunction up = sample([](double a, double b) { return 0.5 * (a * a + b * b); }, g);
    const ConvexityReport cp = convexity_check(up);
    CHECK(cp.convex);
    CHECK(cp.lambda_min == doctest::Approx(1.0).epsilon(1e-10));

    const GridFunction dn = sample([](double a, double b) { return -0.5 * (a * a + b * b); }, g);
    CHECK_FALSE(convexity_check(dn).convex);

    const GridFunction ue = sample(
        [](double a, double b) { return 0.05 * a * a + 5.0 * b * b; }, g);
    const ConvexityReport ce = convexity_check(ue);
    CHECK(ce.convex);
    CHECK(ce.lambda_min == doctest::Approx(0.1).epsilon(1e-9));
}

TEST_CASE("convexity_check invariant under affine shifts") {
    const Grid g = Grid::square(1.0, 15);
    const GridFunction u = sample(exp_case_u, g);
    const GridFunction shifted = sample(
        [](double a, double b) { return exp_case_u(a, b) + 3.0 + 2.0 * a - 7.0 * b; }, g);
    const ConvexityReport r1 = convexity_check(u);
    const ConvexityReport r2 = convexity_check(shifted);
    CHECK(r1.lambda_min == doctest::Approx(r2.lambda_min).epsilon(1e-9));
}

TEST_CASE("interpolate: node values exact, cubics reproduced, quadratic spot value") {
    const Grid g = Grid::square(1.0, 21);
    const GridFunction cubic = sample([](double a, double) { return a * a * a; }, g);
    CHECK(interpolate(cubic, {g.coord1(7), g.coord2(3)}) ==
          doctest::Approx(cubic.at(7, 3)).epsilon(1e-14));
    CHECK(interpolate(cubic, {0.123456, 0.2}) == doctest::Approx(0.123456 * 0.123456 * 0.123456)
                                                     .epsilon(1e-12));

    const GridFunction quad = sample([](double a, double b) { return 0.5 * (a * a + b * b); }, g);
    CHECK(interpolate(quad, {0.35, -0.15}) == doctest::Approx(0.0725).epsilon(1e-12));
    CHECK_THROWS_AS(interpolate(quad, {1.5, 0.0}), DomainError);
}

TEST_CASE("fd operators converge with order >= 1.8 on a smooth closed form") {
    auto worst_grad = [](int n) {
        const GridFunction u = sample_square(exp_case_u, 1.0, n);
        const auto [g1, g2] = fd_gradient(u);
        double w = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                const Point p = u.grid.node(i, j);
                w = std::max(w, std::abs(g1.at(i, j) - (std::exp(p.x1) - 1.0)));
                w = std::max(w, std::abs(g2.at(i, j) - p.x2));
            }
        return w;
    };
    auto worst_hess = [](int n) {
        const GridFunction u = sample_square(exp_case_u, 1.0, n);
        const HessianField h = fd_hessian(u);
        double w = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                const Point p = u.grid.node(i, j);
                const int k = u.grid.index(i, j);
                w = std::max(w, std::abs(h.d11[k] - std::exp(p.x1)));
                w = std::max(w, std::abs(h.d12[k]));
                w = std::max(w, std::abs(h.d22[k] - 1.0));
            }
        return w;
    };
    const double eg1 = worst_grad(33), eg2 = worst_grad(65), eg3 = worst_grad(129);
    CHECK(std::log2(eg1 / eg2) >= 1.8);
    CHECK(std::log2(eg2 / eg3) >= 1.8);
    const double eh1 = worst_hess(33), eh2 = worst_hess(65), eh3 = worst_hess(129);
    CHECK(std::log2(eh1 / eh2) >= 1.8);
    CHECK(std::log2(eh2 / eh3) >= 1.8);
}

TEST_CASE("grid table round-trips bit-exactly and CSV has the agreed columns") {
    const Grid g{-1.0, 1.0, -0.5, 0.5, 7, 9};
    GridFunction u = sample(exp_case_u, g);
    u.mask = disc_mask(g, 0.5);
    const std::string table = gridfunction_to_table(u);
    const GridFunction back = gridfunction_from_table(table);
    CHECK(back.grid == u.grid);
    CHECK(back.values == u.values);
    CHECK(back.mask == u.mask);

    const std::string csv = gridfunction_to_csv(u);
    CHECK(csv.rfind("i,j,x1,x2,value,mask\n", 0) == 0);
}

TEST_CASE("disc mask and interior mask behave on the unit disc") {
    const Grid g = Grid::square(1.0, 9);
    const auto m = disc_mask(g, 1.0);
    CHECK(m[g.index(4, 4)] == 1); // origin
    CHECK(m[g.index(0, 4)] == 1); // (-1, 0) on the circle
    CHECK(m[g.index(0, 0)] == 0); // corner
    const auto im4 = interior_mask(g, m, false);
    const auto im8 = interior_mask(g, m, true);
    CHECK(im4[g.index(4, 4)] == 1);
    CHECK(im8[g.index(4, 4)] == 1);
    CHECK(im4[g.index(0, 4)] == 0);
    int c4 = 0, c8 = 0;
    for (int k = 0; k < g.size(); ++k) {
        c4 += im4[k];
        c8 += im8[k];
    }
    CHECK(c8 <= c4);
}
