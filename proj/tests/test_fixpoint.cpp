#include <doctest.h>

#include <cmath>
#include <memory>

#include "sfpe/cascade.hpp"
#include "sfpe/fixpoint.hpp"
#include "sfpe/wbp.hpp"

using namespace sfpe;

namespace {

// Binary lattice deep enough that exp(-c t) is exactly 1 at its lowest point.
GridSpec binary_lattice() { return GridSpec::lattice(2.0, {1.0}, -400, 111); }

std::shared_ptr<const EmpiricalLaplace> unit_w(double alpha) {
    return std::make_shared<const EmpiricalLaplace>(alpha, 0, std::vector<double>(16, 1.0));
}

}  // namespace

TEST_CASE("grid construction") {
    const auto g = GridSpec::log_spaced().build();
    CHECK(g.size() == 512);
    CHECK(g.front() == doctest::Approx(1e-6));
    CHECK(g.back() == doctest::Approx(1e6));
    const auto l = GridSpec::lattice(2.0, {1.0, 1.5}, -2, 2).build();
    CHECK(l.size() == 10);
    CHECK(l.front() == doctest::Approx(0.25));
    CHECK(l.back() == doctest::Approx(6.0));
    CHECK(binary_lattice().build().size() == 512);
}

TEST_CASE("min and sum operators close exponentials under halving weights") {
    const auto model = WeightModel::deterministic({0.5, 0.5});
    for (double c : {0.3, 1.0, 7.0}) {
        const Curve f = weibull_curve(CurveKind::survival, binary_lattice(), c, 1.0);
        const auto out = apply_min_operator(f, model);
        for (std::size_t j = 0; j < f.grid().size(); ++j)
            CHECK(std::fabs(out.curve.values()[j] - f.values()[j]) <= 1e-12);
        CHECK(fixed_point_residual(f, model, OperatorKind::min).sup_norm <= 1e-12);

        const Curve phi = weibull_curve(CurveKind::laplace, binary_lattice(), c, 1.0);
        CHECK(fixed_point_residual(phi, model, OperatorKind::sum).sup_norm <= 1e-12);
    }
}

TEST_CASE("operator kinds must match curve kinds") {
    const Curve f = weibull_curve(CurveKind::survival, binary_lattice(), 1.0, 1.0);
    CHECK_THROWS_AS(apply_sum_operator(f, WeightModel::deterministic({0.5, 0.5})), std::invalid_argument);
}

TEST_CASE("point masses are fixed when sup T = 1") {
    const Curve step = point_mass_curve(GridSpec::lattice(2.0, {1.0}, -10, 10), 1.0);
    const auto out = apply_min_operator(step, WeightModel::deterministic({1.0, 0.5}));
    for (std::size_t j = 0; j < step.grid().size(); ++j) CHECK(out.curve.values()[j] == step.values()[j]);
}

TEST_CASE("cascade operator has the two-point product form") {
    const double theta = 0.3;
    const auto grid = GridSpec::lattice(std::exp(1.0), {1.0}, -10, 10);
    const Curve f = weibull_curve(CurveKind::survival, grid, 0.7, 0.8);
    const auto out = apply_min_operator(f, WeightModel::cascade(2, theta));
    const auto t = f.grid();
    for (std::size_t j = 1; j < t.size(); ++j) {
        const double oracle = std::pow(theta * f.values()[j - 1] + (1 - theta) * f.values()[j], 2);
        CHECK(out.curve.values()[j] == doctest::Approx(oracle).epsilon(1e-14));
    }
}

TEST_CASE("trivial fixed points") {
    const auto grid = GridSpec::log_spaced(1e-3, 1e3, 50);
    const Curve one = sample_curve(CurveKind::laplace, grid, [](double) { return 1.0; });
    const auto out = apply_sum_operator(one, WeightModel::cascade(3, 0.4));
    for (double v : out.curve.values()) CHECK(v == 1.0);
    const Curve zero = sample_curve(CurveKind::survival, grid, [](double) { return 0.0; });
    const auto out0 = apply_min_operator(zero, WeightModel::cascade(3, 0.4));
    for (double v : out0.curve.values()) CHECK(v == 0.0);
}

TEST_CASE("residual detects a perturbed grid value") {
    const auto model = WeightModel::deterministic({0.5, 0.5});
    const Curve f = weibull_curve(CurveKind::survival, binary_lattice(), 1.0, 1.0);
    std::vector<double> v(f.values().begin(), f.values().end());
    const auto t = f.grid();
    std::size_t j = 0;
    while (t[j] < 1.0) ++j;
    v[j] += 0.01;
    const Curve g = f.with_values(v, {});
    CHECK(fixed_point_residual(g, model, OperatorKind::min).sup_norm >= 0.001);
}

TEST_CASE("explicit supercritical cascade solution is a min fixed point") {
    const CascadeParams p{2, 0.25};
    const auto sol = explicit_solution(p, 1.0, 30);
    CHECK(fixed_point_residual(sol.curve, p.model(), OperatorKind::min).sup_norm <= 1e-12);
}

TEST_CASE("weibull mixtures") {
    const auto grid = GridSpec::log_spaced(1e-3, 1e3, 64);
    SUBCASE("W = 1 gives the Weibull law") {
        const Curve c = build_weibull_mixture(unit_w(1.7), PeriodicModulation::constant(2.0), 1.7, grid);
        for (std::size_t j = 0; j < c.grid().size(); ++j)
            CHECK(c.values()[j] == doctest::Approx(std::exp(-2.0 * std::pow(c.grid()[j], 1.7))).epsilon(1e-14));
    }
    SUBCASE("modulations that break monotone growth are rejected") {
        const auto bad = PeriodicModulation::tabulated(std::exp(1.0), {1.0, 2.0}, {1.0, 0.1});
        const auto lat = GridSpec::lattice(std::exp(1.0), {1.0, 2.0}, -5, 5);
        CHECK_THROWS_AS(build_weibull_mixture(unit_w(1.0), bad, 1.0, lat), std::invalid_argument);
        std::string why;
        CHECK_FALSE(bad.weibull_admissible(1.0, &why));
        CHECK_FALSE(why.empty());
    }
    SUBCASE("D_alpha at small t matches the mean of W") {
        const double alpha = std::log(3.0);
        auto w = sample_W_limit(WeightModel::cascade(2, 0.75), alpha, 8, 4000, 17);
        auto phi = std::make_shared<const EmpiricalLaplace>(std::move(w.laplace));
        const auto small = GridSpec::log_spaced(1e-7, 1.0, 30);
        const Curve c = build_weibull_mixture(phi, PeriodicModulation::constant(1.0), alpha, small);
        const double t = c.grid().front();
        const double d = c.tails().front() / std::pow(t, alpha);
        const Estimate slope = phi->slope_at_zero();
        CHECK(std::fabs(d + slope.value) <= 3.0 * slope.standard_error);
        CHECK(c.origin());
    }
}

TEST_CASE("stable mixtures") {
    const auto grid = GridSpec::log_spaced(1e-3, 1e3, 64);
    const Curve c = build_stable_mixture(unit_w(0.6), PeriodicModulation::constant(1.5), 0.6, grid);
    CHECK(c.kind() == CurveKind::laplace);
    CHECK(c.convex());
    for (std::size_t j = 0; j < c.grid().size(); ++j)
        CHECK(c.values()[j] == doctest::Approx(std::exp(-1.5 * std::pow(c.grid()[j], 0.6))).epsilon(1e-14));
    CHECK_THROWS_WITH(build_stable_mixture(unit_w(1.2), PeriodicModulation::constant(1.0), 1.2, grid),
                      doctest::Contains("alpha > 1"));
    const auto wavy = PeriodicModulation::tabulated(std::exp(1.0), {1.0, 2.0}, {1.0, 1.1});
    CHECK_THROWS(build_stable_mixture(unit_w(1.0), wavy, 1.0, GridSpec::lattice(std::exp(1.0), {1.0, 2.0}, -5, 5)));
}

TEST_CASE("periodic modulation") {
    const auto h = PeriodicModulation::tabulated(2.0, {1.0, 1.5}, {1.0, 0.9});
    CHECK(h(1.0) == 1.0);
    CHECK(h(3.0) == 0.9);
    CHECK(h(0.75) == 0.9);
    CHECK_THROWS_AS(h(1.2), std::domain_error);
    CHECK_THROWS(PeriodicModulation::tabulated(2.0, {2.5}, {1.0}));
    CHECK_THROWS(PeriodicModulation::constant(0.0));
}

TEST_CASE("regularity diagnostic") {
    const LatticeInfo continuous{};
    const auto grid = GridSpec::log_spaced(1e-8, 1e2, 200);
    SUBCASE("Weibull curve at its own exponent") {
        const Curve c = weibull_curve(CurveKind::survival, grid, 2.5, 0.7);
        const auto rep = regularity_diagnostic(c, 0.7, continuous);
        CHECK(rep.classification == RegularityClass::elementary_candidate);
        CHECK(rep.liminf_estimate <= rep.limsup_estimate);
        for (const auto& r : rep.residue_limits) CHECK(r.limit_estimate == doctest::Approx(2.5).epsilon(1e-3));
    }
    SUBCASE("probing below the exponent") {
        const Curve c = weibull_curve(CurveKind::survival, grid, 2.5, 0.7);
        const auto rep = regularity_diagnostic(c, 0.5, continuous);
        CHECK(rep.classification == RegularityClass::not_regular);
        CHECK(rep.limsup_estimate < 2.5 * std::pow(1e-6, 0.2));
    }
    SUBCASE("explicit cascade solution") {
        const CascadeParams p{2, 0.25};
        const auto sol = explicit_solution(p, 1.0, 20);
        const auto rep = regularity_diagnostic(sol.curve, 1.0, detect_lattice(p.model()));
        CHECK(rep.classification == RegularityClass::not_regular);
    }
    SUBCASE("too shallow grids are refused") {
        const Curve c = weibull_curve(CurveKind::survival, GridSpec::log_spaced(1e-2, 1e2, 20), 1.0, 1.0);
        CHECK_THROWS_AS(regularity_diagnostic(c, 1.0, continuous), std::invalid_argument);
    }
}

TEST_CASE("disintegration identity") {
    const auto det = simulate_tree(WeightModel::deterministic({0.5, 0.5}), 5, 3);
    const Curve f = weibull_curve(CurveKind::survival, binary_lattice(), 0.8, 1.0);
    const auto zero = disintegration_check(f, det, 4.0, 0, 3);
    CHECK(zero.diff <= 1e-15);
    const auto r = disintegration_check(f, det, 4.0, 2, 3);
    CHECK(r.diff <= 1e-12);
    CHECK(r.lhs == doctest::Approx(std::exp(-0.8 * 4.0)).epsilon(1e-12));

    const CascadeParams p{2, 0.25};
    const auto sol = explicit_solution(p, 1.0, 10);
    const auto tree = simulate_tree(p.model(), 4, 8);
    const auto c = disintegration_check(sol.curve, tree, std::exp(2.0), 1, 1);
    CHECK(c.diff <= 1e-15);
}

TEST_CASE("psi decomposition") {
    const auto det = simulate_tree(WeightModel::deterministic({0.5, 0.5}), 5, 3);
    const Curve f = weibull_curve(CurveKind::survival, binary_lattice(), 0.8, 1.0);
    const double tl = 3 * std::log(2.0);
    for (int n : {0, 2}) {
        const auto r = psi_transform(f, det, tl, 1.0, n, 3);
        CHECK(r.lhs == doctest::Approx(0.8).epsilon(1e-12));
        CHECK(r.diff <= 1e-12);
    }

    const double alpha = std::log(3.0);
    auto w = sample_W_limit(WeightModel::cascade(2, 0.75), alpha, 8, 500, 21);
    auto phi = std::make_shared<const EmpiricalLaplace>(std::move(w.laplace));
    const Curve mix = build_weibull_mixture(phi, PeriodicModulation::constant(1.0), alpha,
                                            GridSpec::lattice(std::exp(1.0), {1.0}, -30, 10));
    const auto tree = simulate_tree(WeightModel::cascade(2, 0.75), 6, 5);
    const auto r = psi_transform(mix, tree, 1.0, alpha, 2, 3);
    CHECK(r.diff <= 1e-10);
}

TEST_CASE("involution") {
    CHECK(involution_transform(std::vector<double>{0.5, 0.5}) == std::vector<double>{2.0, 2.0});
    CHECK(involution_transform(std::vector<double>{0.0, 0.25}) == std::vector<double>{0.0, 4.0});
    const std::vector<double> w{0.3, 0.0, 1.7};
    const auto twice = involution_transform(involution_transform(w));
    for (std::size_t i = 0; i < w.size(); ++i) CHECK(twice[i] == doctest::Approx(w[i]));
}

TEST_CASE("operator iteration") {
    const Curve f = weibull_curve(CurveKind::survival, binary_lattice(), 2.0, 1.0);
    const auto fixed = iterate_operator(f, WeightModel::deterministic({0.5, 0.5}), OperatorKind::min, 5);
    REQUIRE(fixed.residuals.size() == 5);
    for (double r : fixed.residuals) CHECK(r <= 1e-12);

    // sup T = 2 > 1: iterates sink toward zero at fixed t
    const auto grid = GridSpec::lattice(2.0, {1.0}, -20, 20);
    Curve g = weibull_curve(CurveKind::survival, grid, 0.05, 1.0);
    double prev = g.eval(1.0).value;
    for (int k = 0; k < 6; ++k) {
        g = apply_min_operator(g, WeightModel::deterministic({2.0, 1.0})).curve;
        const double now = g.eval(1.0).value;
        CHECK(now < prev);
        prev = now;
    }
    CHECK(prev < 0.05);
}
