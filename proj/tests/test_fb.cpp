#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "uol/uol.hpp"

using namespace uol;

namespace {

ScalarField sample(double half, double h, const std::function<double(Point)>& f) {
    return ScalarField::sample(GridSpec::centered_square(half, h), f);
}

AnalyticField quadratic_field(double A, double t0, double h) {
    return AnalyticField(
        [=](Point p) { return A * (dot(p, p) * std::cos(2 * (std::atan2(p.y, p.x) - t0))); },
        [=](Point p) {
            // A r^2 cos 2(t - t0) = A ((x^2 - y^2) cos 2t0 + 2xy sin 2t0)
            const double c = std::cos(2 * t0), s = std::sin(2 * t0);
            return Vec2{A * (2 * p.x * c + 2 * p.y * s), A * (-2 * p.y * c + 2 * p.x * s)};
        },
        h, [](Point) { return 0.0; });
}

}  // namespace

TEST(FreeBoundary, CircleContour) {
    const double R = 0.6;
    const ScalarField u = sample(1.0, 1.0 / 128, [&](Point p) { return R * R - dot(p, p); });
    const FreeBoundary fb = extract_free_boundary(u);
    ASSERT_EQ(fb.segments.size(), 1u);
    EXPECT_TRUE(fb.segments[0].closed);
    EXPECT_NEAR(fb.length(), 2 * oracle::pi * R, 1e-3);
    fb.for_each_vertex([&](Point p, double g) {
        EXPECT_NEAR(norm(p), R, 1e-4);
        EXPECT_NEAR(g, 2 * R, 0.02);
    });
    EXPECT_TRUE(singular_points(u, fb).empty());
}

TEST(FreeBoundary, LineReachingTheEdgeIsOpen) {
    const ScalarField u = sample(1.0, 1.0 / 32, [](Point p) { return p.x - 0.3 * p.y - 0.1; });
    const FreeBoundary fb = extract_free_boundary(u);
    ASSERT_EQ(fb.segments.size(), 1u);
    EXPECT_FALSE(fb.segments[0].closed);
    EXPECT_NEAR(fb.length(), 2.0 * std::sqrt(1.0 + 0.09), 1e-9);
}

TEST(FreeBoundary, NoZeroSetGivesEmpty) {
    const ScalarField u = sample(1.0, 0.25, [](Point) { return 1.0; });
    EXPECT_TRUE(extract_free_boundary(u).empty());
}

TEST(FreeBoundary, CrossingHasOneSingularPointAndRightAngles) {
    const double t0 = 0.3;
    const ScalarField u = sample(1.0, 1.0 / 128, [&](Point p) { return dot(p, p) * std::cos(2 * (std::atan2(p.y, p.x) - t0)); });
    const FreeBoundary fb = extract_free_boundary(u);
    const auto sp = singular_points(u, fb);
    ASSERT_EQ(sp.size(), 1u);
    EXPECT_LT(norm(sp[0]), 2.0 / 128);
    const ArcDirections ad = arc_directions(fb, sp[0], 0.2, 0.3);
    ASSERT_EQ(ad.angles.size(), 4u);
    EXPECT_LT(ad.right_angle_deviation, 1e-3);
    // zero lines sit at t0 +- pi/4
    EXPECT_NEAR(quarter_turn_distance(ad.angles[0], t0 + oracle::pi / 4), 0.0, 1e-3);
    EXPECT_EQ(circle_crossings(fb, {0, 0}, 0.5).size(), 4u);
}

TEST(Weiss, HarmonicQuadraticPhi) {
    for (double A : {0.5, 1.0, 2.0})
        for (double r : {0.125, 0.5}) EXPECT_NEAR(weiss_phi(quadratic_field(A, 0.4, 1.0 / 256), {0, 0}, r), oracle::phi_harmonic_quadratic(A), 1e-5 * A);
}

TEST(Weiss, RadialQuadraticPhi) {
    const double c = 0.25;
    const ScalarField u = sample(1.0, 1.0 / 256, [&](Point p) { return c * dot(p, p); });
    EXPECT_NEAR(weiss_phi(u, {0, 0}, 0.5), oracle::phi_radial_quadratic(c), 1e-3);
}

TEST(Weiss, ShellTooThinThrows) {
    const ScalarField u = sample(1.0, 1.0 / 32, [](Point p) { return p.x; });
    EXPECT_THROW(weiss_phi(u, {0, 0}, 4.0 / 32), PreconditionError);
    EXPECT_THROW(weiss_phi(u, {0.9, 0}, 0.5), DomainError);
}

TEST(Weiss, DriftIdentityOnTorsion) {
    const double h = 1.0 / 128;
    const ScalarField u = maximal_solution(ScalarField(GridSpec::centered_square(1.0, h))).u;
    const auto radii = dyadic_radii(8 * h, 0.5);
    for (Point c : {Point{0, 0}, Point{0.3, -0.2}}) {
        const MonotonicityTrace t = monotonicity_trace(u, c, radii);
        EXPECT_TRUE(t.identity_holds());
        EXPECT_TRUE(t.non_decreasing());
    }
}

TEST(Weiss, CubicNeedsTheDefectTerm) {
    const double h = 1.0 / 256;
    const AnalyticField cub([](Point p) { return p.x * p.x * p.x; }, [](Point p) { return Vec2{3 * p.x * p.x, 0}; }, h,
                            [](Point p) { return 6 * p.x; }, 1.0);
    const auto radii = dyadic_radii(8 * h, 0.5);
    const MonotonicityTrace plain = monotonicity_trace(cub, {0, 0}, radii);
    const MonotonicityTrace full = monotonicity_trace(cub, {0, 0}, radii, true);
    EXPECT_FALSE(plain.identity_holds());
    for (double e : full.identity_errors()) EXPECT_LT(e, 1e-6);
    const ScalarField grid = sample(1.0, h, [](Point p) { return p.x * p.x * p.x; });
    EXPECT_TRUE(monotonicity_trace(grid, {0, 0}, radii, true).identity_holds());
}

TEST(Weiss, NondegeneracyOfTheCrossing) {
    const double h = 1.0 / 256;
    const ScalarField u = sample(1.0, h, [](Point p) { return p.x * p.x - p.y * p.y; });
    const std::vector<double> radii{8 * h, 16 * h, 32 * h};
    for (const auto& m : nondegeneracy_check(u, {0, 0}, radii)) {
        // bilinear interpolation (h^2 / 4) plus angular sampling of the circle
        EXPECT_NEAR(m.min_value, -m.r * m.r, h * h);
        EXPECT_LE(m.margin, nondegeneracy_slack(m.r, h));
    }
    EXPECT_THROW(nondegeneracy_check(u, {0.5, 0}, radii), PreconditionError);
}

TEST(Frequency, HomogeneousHarmonicHasZeroDefect) {
    const oracle::HarmonicPoly w{0.0, {0.0, 0.7, 0.0}, {0.0, 0.0, 0.0}};
    const ScalarField f = sample(1.25, 1.0 / 256, [&](Point p) { return w.value(p.x, p.y); });
    const FrequencyResult r = frequency_defect(f, 2);
    EXPECT_NEAR(r.defect, w.frequency_defect(2), 1e-3);
    EXPECT_TRUE(r.preconditions_ok) << r.warning;
}

TEST(Frequency, MixedDegreesMatchClosedForm) {
    const oracle::HarmonicPoly w{0.0, {0.0, 0.4, -0.3}, {0.0, 0.2, 0.5}};
    const ScalarField f = sample(1.25, 1.0 / 256, [&](Point p) { return w.value(p.x, p.y); });
    const FrequencyResult r = frequency_defect(f, 2);
    EXPECT_NEAR(r.defect, w.frequency_defect(2), 2e-3);
    EXPECT_GT(r.defect, 0.0);
}

TEST(Frequency, ViolatedPreconditionsAreReported) {
    const ScalarField linear = sample(1.25, 1.0 / 64, [](Point p) { return p.x; });
    EXPECT_FALSE(frequency_defect(linear, 2).preconditions_ok);
    const ScalarField bowl = sample(1.25, 1.0 / 64, [](Point p) { return dot(p, p); });
    const FrequencyResult r = frequency_defect(bowl, 2);
    EXPECT_FALSE(r.preconditions_ok);
    EXPECT_NE(r.warning.find("harmonic"), std::string::npos);
}

TEST(Regime, Thresholds) {
    EXPECT_EQ(classify_regime({{0.01, 0.02, 0.04, 0.08}, {-1.0, -0.8, -0.6, -0.4}}).regime, Regime::polynomial);
    EXPECT_EQ(classify_regime({{0.01, 0.02, 0.04, 0.08}, {0.01, 0.01, 0.01, 0.01}}).regime, Regime::trivial);
    EXPECT_EQ(classify_regime({{0.01, 0.02, 0.04, 0.08}, {-1.0, -1.0, -1.0, -1.0}}).regime, Regime::homogeneous_solution);
    EXPECT_NEAR(classify_regime({{0.01, 0.02, 0.04, 0.08}, {-1.0, -0.8, -0.6, -0.4}}).slope, -0.2, 1e-12);
    EXPECT_THROW(classify_regime({{0.1}, {0.0}}), PreconditionError);
}

TEST(Blowup, RecoversRotatedQuadratic) {
    const double t0 = 0.35;
    const AnalyticField q = quadratic_field(1.0, t0, 1e-3);
    const PhiTrend trend = phi_trend(q, {0, 0}, 0.01, 0.08);
    const BlowupFit b = blowup(q, {0, 0}, 0.05, Normalization::quadratic, trend);
    EXPECT_EQ(b.regime, Regime::homogeneous_solution);
    EXPECT_NEAR(b.a, std::cos(2 * t0), 1e-9);
    EXPECT_NEAR(b.b, std::sin(2 * t0), 1e-9);
    EXPECT_LT(b.fit_residual, 1e-9);
    EXPECT_NEAR(b.rotation_angle, t0, 1e-9);
    const std::vector<double> radii{0.01, 0.02, 0.04};
    for (const auto& s : rotation_fit(q, {0, 0}, radii)) {
        EXPECT_LT(quarter_turn_distance(s.theta, t0), 1e-4);
        EXPECT_LT(s.distance, 1e-3);
    }
}

TEST(Blowup, SphericalNormalizationIsScaleFree) {
    const AnalyticField q = quadratic_field(3.0, 0.0, 1e-3);
    const PhiTrend trend{{0.01, 0.02, 0.04, 0.08}, {-3, -3, -3, -3}};
    const BlowupFit b = blowup(q, {0, 0}, 0.05, Normalization::spherical, trend);
    // S = (r^-1 int u^2)^1/2 = sqrt(pi) A r^2, so the rescaled trace is cos 2t / sqrt(pi)
    EXPECT_NEAR(b.S_value, std::sqrt(oracle::pi) * 3.0 * 0.05 * 0.05, 1e-9);
    EXPECT_NEAR(b.a, 1.0 / std::sqrt(oracle::pi), 1e-9);
}

TEST(Blowup, VanishingFieldIsTrivial) {
    const AnalyticField z([](Point) { return 0.0; }, [](Point) { return Vec2{0, 0}; }, 1e-3);
    const PhiTrend trend{{0.01, 0.02, 0.04, 0.08}, {0, 0, 0, 0}};
    EXPECT_EQ(blowup(z, {0, 0}, 0.05, Normalization::spherical, trend).regime, Regime::trivial);
    EXPECT_THROW(rotation_fit(z, {0, 0}, std::vector<double>{0.05}), PreconditionError);
}

TEST(Chemin, QuadraticIsBounded) {
    const AnalyticField q = quadratic_field(1.0, 0.0, 1e-3);
    const std::vector<double> radii{0.01, 0.02, 0.04, 0.08};
    const CheminResult c = chemin_bound_check(q, {0, 0}, radii);
    EXPECT_FALSE(c.diverging);
    // |grad| = 2r, ratio = 2 / log(1/r)
    EXPECT_NEAR(c.ratio[0], 2.0 / std::log(100.0), 1e-9);
}
