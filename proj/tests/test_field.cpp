#include <gtest/gtest.h>

#include <sstream>

#include "oracles.hpp"
#include "uol/uol.hpp"

using namespace uol;

TEST(Grid, CoveringCountsNodes) {
    const GridSpec s = GridSpec::centered_square(1.0, 0.25);
    EXPECT_EQ(s.nx, 9u);
    EXPECT_EQ(s.ny, 9u);
    EXPECT_DOUBLE_EQ(s.node(8, 8).x, 1.0);
    EXPECT_TRUE(s.is_boundary(0, 3));
    EXPECT_FALSE(s.is_boundary(4, 4));
}

TEST(Grid, RejectsSpacingThatDoesNotDivideExtent) {
    EXPECT_THROW(GridSpec::covering(0.0, 1.0, 0.0, 1.0, 0.3), PreconditionError);
    EXPECT_THROW(GridSpec::covering(0.0, 1.0, 0.0, 1.0, -0.1), PreconditionError);
}

TEST(Grid, InterpolationIsExactForBilinear) {
    const GridSpec s = GridSpec::centered_square(1.0, 0.125);
    auto f = [](Point p) { return 1.0 + 2.0 * p.x - p.y + 0.5 * p.x * p.y; };
    const ScalarField u = ScalarField::sample(s, f);
    for (Point p : {Point{0.31, -0.77}, Point{-0.999, 0.5}, Point{1.0, 1.0}}) EXPECT_NEAR(interpolate(u, p), f(p), 1e-13);
}

TEST(Grid, LaplacianOfQuadraticIsExact) {
    const GridSpec s = GridSpec::centered_square(1.0, 1.0 / 16);
    const ScalarField u = ScalarField::sample(s, [](Point p) { return 3 * p.x * p.x - p.y * p.y + p.x * p.y; });
    const ScalarField l = laplacian(u);
    EXPECT_NEAR(l(5, 7), 4.0, 1e-10);
    EXPECT_NEAR(l(16, 16), 4.0, 1e-10);
}

TEST(Grid, MismatchedGridsThrow) {
    const ScalarField a(GridSpec::centered_square(1.0, 0.25));
    const ScalarField b(GridSpec::centered_square(1.0, 0.125));
    EXPECT_THROW(a + b, PreconditionError);
}

TEST(Poisson, TorsionMatchesSeries) {
    const GridSpec s = GridSpec::centered_square(1.0, 1.0 / 64);
    const ScalarField f(s, -1.0);
    const ScalarField u = poisson_solve(f, ScalarField(s));
    EXPECT_LT(poisson_relative_residual(u, f), 1e-9);
    for (Point p : {Point{0, 0}, Point{0.5, 0.25}, Point{-0.75, 0.6}})
        EXPECT_NEAR(interpolate(u, p), oracle::torsion_square(p.x, p.y), 2e-4) << p.x << "," << p.y;
}

TEST(Poisson, HarmonicDataReproducedExactly) {
    const GridSpec s = GridSpec::covering(-1.0, 1.0, -0.5, 0.75, 1.0 / 32);
    auto q = [](Point p) { return p.x * p.x - p.y * p.y + 0.3 * p.x; };
    const ScalarField g = ScalarField::sample(s, q);
    const ScalarField u = poisson_solve(ScalarField(s), g);
    double err = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) err = std::max(err, std::abs(u[k] - g[k]));
    EXPECT_LT(err, 1e-9);
}

TEST(Quadrature, GaussLegendreIntegratesPolynomials) {
    const GaussRule g = gauss_legendre(5);
    double s = 0.0;
    for (std::size_t k = 0; k < g.nodes.size(); ++k) s += g.weights[k] * std::pow(g.nodes[k], 8);
    EXPECT_NEAR(s, 2.0 / 9.0, 1e-14);
}

TEST(Quadrature, BallAndCircleOfPolynomials) {
    auto f = [](Point p) { return p.x * p.x + 3.0 * p.y * p.y * p.x * p.x; };
    const Point c{0.0, 0.0};
    const double r = 0.7;
    // int_B x^2 = pi r^4/4, int_B x^2 y^2 = pi r^6/24
    EXPECT_NEAR(integrate_ball(f, c, r, {16, 64}), oracle::pi * std::pow(r, 4) / 4 + 3 * oracle::pi * std::pow(r, 6) / 24, 1e-13);
    // int_{dB} x^2 = pi r^3
    EXPECT_NEAR(integrate_circle([](Point p) { return p.x * p.x; }, c, r, 64), oracle::pi * r * r * r, 1e-13);
}

TEST(Integrals, SampledBallIntegral) {
    const GridSpec s = GridSpec::centered_square(1.0, 1.0 / 128);
    const ScalarField u = ScalarField::sample(s, [](Point p) { return p.x * p.x + p.y * p.y; });
    EXPECT_NEAR(ball_integral(u, {0.1, -0.2}, 0.5), oracle::pi * std::pow(0.5, 4) / 2 + oracle::pi * 0.25 * 0.05, 2e-4);
    EXPECT_THROW(ball_integral(u, {0.0, 0.0}, 2.0 / 128), PreconditionError);
    EXPECT_THROW(ball_integral(u, {0.9, 0.0}, 0.5), DomainError);
}

TEST(FieldIo, RoundTripIsBitExact) {
    const GridSpec s = GridSpec::covering(-0.5, 0.25, 0.0, 1.0, 0.125);
    const ScalarField u = ScalarField::sample(s, [](Point p) { return std::sin(7 * p.x) / 3.0 + p.y; });
    std::stringstream ss;
    write_field(ss, u);
    const ScalarField v = read_field(ss);
    ASSERT_EQ(v.spec().nx, s.nx);
    for (std::size_t k = 0; k < u.size(); ++k) EXPECT_EQ(u[k], v[k]);
}

TEST(FieldIo, TruncatedInputThrows) {
    const ScalarField u(GridSpec::centered_square(1.0, 0.5), 1.0);
    std::stringstream ss;
    write_field(ss, u);
    std::string bytes = ss.str();
    std::stringstream cut(bytes.substr(0, bytes.size() - 4));
    EXPECT_THROW(read_field(cut), Error);
}

TEST(Pulse, MatchesTypedProfileAndSolvesEquation) {
    for (double s : {0.0, 0.3, 0.99, 1.0, 1.5, 4.0}) EXPECT_NEAR(pulse_radial(s), oracle::pulse_planar(s), 1e-15);
    for (double s : {0.3, 0.8}) EXPECT_NEAR(oracle::radial_laplacian_fd([](double t) { return pulse_radial(t); }, s, 1e-4), -1.0, 1e-6);
    for (double s : {1.3, 3.0}) EXPECT_NEAR(oracle::radial_laplacian_fd([](double t) { return pulse_radial(t); }, s, 1e-4), 0.0, 1e-6);
    // C^1 across the unit circle
    EXPECT_NEAR(pulse_radial_derivative(1.0 - 1e-12), pulse_radial_derivative(1.0 + 1e-12), 1e-9);
    for (int n : {3, 4}) {
        EXPECT_NEAR(pulse_radial(1.0 - 1e-12, n), pulse_radial(1.0 + 1e-12, n), 1e-9);
        EXPECT_NEAR(pulse_radial_derivative(1.0 - 1e-12, n), pulse_radial_derivative(1.0 + 1e-12, n), 1e-9);
    }
}

TEST(Pulse, GradientMatchesDifferences) {
    const Point p{0.4, -0.7};
    const double d = 1e-6;
    const Vec2 g = pulse_gradient(p);
    EXPECT_NEAR(g.x, (pulse(p + Point{d, 0}) - pulse(p - Point{d, 0})) / (2 * d), 1e-8);
    EXPECT_NEAR(g.y, (pulse(p + Point{0, d}) - pulse(p - Point{0, d})) / (2 * d), 1e-8);
}

TEST(Boundary, RegistryExpressions) {
    const GridSpec s = GridSpec::centered_square(1.0, 0.25);
    const ScalarField g = boundary_field(s, {"quadratic", {{"a", 1.0}, {"d", 2.0}}});
    EXPECT_DOUBLE_EQ(g(0, 0), 3.0);
    EXPECT_DOUBLE_EQ(g(4, 4), 0.0);  // interior left at zero
    EXPECT_THROW(boundary_field(s, {"nope", {}}), PreconditionError);
    EXPECT_THROW(boundary_field(s, {"constant", {{"oops", 1.0}}}), PreconditionError);
}

TEST(Boundary, ValuesFileRoundTrip) {
    const GridSpec s = GridSpec::centered_square(1.0, 0.5);
    const ScalarField g = boundary_field(s, {"pulse-trace", {}});
    std::stringstream ss;
    write_boundary_values(ss, g);
    const ScalarField back = read_boundary_values(ss, s);
    for (std::size_t k = 0; k < g.size(); ++k) EXPECT_EQ(g[k], back[k]);
}

TEST(Boundary, ValuesFileMissingNodeThrows) {
    const GridSpec s = GridSpec::centered_square(1.0, 0.5);
    std::stringstream ss("# only one node\n0 1.0\n");
    EXPECT_THROW(read_boundary_values(ss, s), Error);
}
