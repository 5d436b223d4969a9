#include <doctest.h>

#include <cmath>
#include <sstream>

#include "sfpe/curve.hpp"
#include "sfpe/fixpoint.hpp"

using namespace sfpe;

TEST_CASE("interpolated curves") {
    const auto grid = GridSpec::log_spaced(1e-3, 1e3, 61);
    const Curve c = weibull_curve(CurveKind::survival, grid, 1.0, 1.0);
    const auto t = c.grid();
    REQUIRE(t.size() == 61);

    SUBCASE("grid points return the sampled value") {
        for (double x : t) CHECK(c.eval(x).value == std::exp(-x));
    }
    SUBCASE("zero maps to one") {
        CHECK(c.eval(0.0).value == 1.0);
        CHECK_FALSE(c.eval(0.0).clamped);
    }
    SUBCASE("log-linear interpolation between neighbours") {
        const double a = t[30], b = t[31];
        const double x = std::sqrt(a * b);
        CHECK(c.eval(x).value == doctest::Approx(0.5 * (std::exp(-a) + std::exp(-b))).epsilon(1e-14));
    }
    SUBCASE("clamping outside the grid") {
        const auto lo = c.eval(1e-5);
        CHECK(lo.clamped);
        CHECK(lo.value == std::exp(-t.front()));
        const auto hi = c.eval(1e5);
        CHECK(hi.clamped);
        CHECK(hi.value == std::exp(-t.back()));
    }
    CHECK(c.convex());
    CHECK(c.mode() == CurveMode::interp_loglinear);
}

TEST_CASE("lattice-step curves") {
    const auto grid = GridSpec::lattice(std::exp(1.0), {1.0}, -5, 5);
    const Curve c = weibull_curve(CurveKind::survival, grid, 2.0, 1.0);
    CHECK(c.eval(std::exp(2.0)).value == doctest::Approx(std::exp(-2.0 * std::exp(2.0))));
    CHECK_THROWS_AS(c.eval(std::exp(2.5)), OffLatticeQuery);
    const auto below = c.eval(std::exp(-9.0));
    CHECK(below.clamped);
    CHECK(below.value == c.values().front());
    CHECK(c.ratio() == doctest::Approx(std::exp(1.0)));
    REQUIRE(c.residues().size() == 1);
    CHECK(c.residues()[0] == doctest::Approx(1.0));

    const auto two = GridSpec::lattice(2.0, {1.0, 1.5}, -3, 3);
    const Curve d = weibull_curve(CurveKind::survival, two, 1.0, 1.0);
    CHECK(d.grid().size() == 14);
    CHECK(d.residues().size() == 2);
    CHECK(d.eval(3.0).value == doctest::Approx(std::exp(-3.0)));
    CHECK_THROWS_AS(d.eval(1.2), OffLatticeQuery);
}

TEST_CASE("curve validation") {
    CHECK_THROWS(Curve::interpolated(CurveKind::survival, {1.0, 2.0}, {0.5, 0.6}));
    CHECK_THROWS(Curve::interpolated(CurveKind::survival, {2.0, 1.0}, {0.6, 0.5}));
    CHECK_THROWS(Curve::interpolated(CurveKind::survival, {1.0, 2.0}, {1.2, 0.5}));
    CHECK_THROWS(Curve::interpolated(CurveKind::survival, {1.0}, {0.5, 0.4}));
    CHECK_THROWS(Curve::lattice(CurveKind::survival, 1.0, {1.0}, {0.5}));
    CHECK_NOTHROW(Curve::interpolated(CurveKind::survival, {1.0, 2.0}, {0.5, 0.5}));
}

TEST_CASE("scaled curves") {
    const auto grid = GridSpec::log_spaced(1e-2, 1e2, 41);
    const Curve c = weibull_curve(CurveKind::laplace, grid, 1.0, 0.5);
    const Curve s = c.scaled(2.5);
    for (double x : {0.05, 0.7, 3.0, 40.0}) CHECK(s.eval(2.5 * x).value == doctest::Approx(c.eval(x).value));
    CHECK(s.kind() == CurveKind::laplace);
    CHECK_THROWS(c.scaled(0.0));
}

TEST_CASE("convexity flag") {
    CHECK_FALSE(Curve::interpolated(CurveKind::laplace, {1.0, 2.0, 3.0}, {1.0, 0.9, 0.5}).convex());
    CHECK(Curve::interpolated(CurveKind::laplace, {1.0, 2.0, 3.0}, {1.0, 0.5, 0.25}).convex());
}

TEST_CASE("tails are kept separately from values") {
    const Curve c = Curve::interpolated(CurveKind::survival, {1e-20, 1.0}, {1.0, 0.5}, {1e-20, 0.5});
    CHECK(c.eval(1e-20).tail == 1e-20);
    CHECK(c.eval(1e-20).value == 1.0);
}

TEST_CASE("curve csv") {
    const Curve c = Curve::interpolated(CurveKind::survival, {1e-5, 1.0}, {1.0, 0.5});
    std::ostringstream os;
    c.write_csv(os);
    CHECK(os.str() == "t,value\n1e-05,1\n1,0.5\n");
}
