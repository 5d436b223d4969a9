// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <memory>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "sfpe/cascade.hpp"
#include "sfpe/fixpoint.hpp"
#include "sfpe/numeric.hpp"
#include "sfpe/wbp.hpp"
#include "sfpe/weights.hpp"

using namespace sfpe;

namespace {

constexpr std::uint64_t kSeed = 20240607;

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail << "[failed: " << what << "] ";
        }
    }
};

using Criterion = std::function<void(Outcome&)>;

std::string num(double x) { return format_number(x); }

// |residual| <= 3 SE at lattice points s e^n, n in [-10, 10], plus a
// floating-point floor for values that are exactly representable fixed points.
void check_mc_residual(Outcome& o, const Curve& curve, const WeightModel& model, OperatorKind op) {
    const ResidualReport rep = fixed_point_residual(curve, model, op);
    const auto t = curve.grid();
    const auto v = curve.values();
    const auto tails = curve.tails();
    int checked = 0, failed = 0;
    double worst_z = 0.0;
    for (std::size_t j = 0; j < t.size(); ++j) {
        const double n = std::log(t[j]);
        if (n < -10.0 - 1e-9 || n > 10.0 + 1e-9 || rep.clamped[j]) continue;
        ++checked;
        const double floor = 1e-12 * std::min(v[j], tails[j]);
        const double se = rep.standard_errors[j];
        if (!(std::fabs(rep.residuals[j]) <= 3.0 * se + floor)) ++failed;
        if (se > 0.0 && std::fabs(rep.residuals[j]) > floor)
            worst_z = std::max(worst_z, std::fabs(rep.residuals[j]) / se);
    }
    o.detail << checked << " lattice points, max |residual|/SE " << num(worst_z) << ", " << failed
             << " above 3 SE; ";
    o.require(checked >= 20, "at least 20 checked points");
    o.require(failed == 0, "residual within 3 SE");
}

void characteristic_exponents(Outcome& o) {
    const auto a = characteristic_exponent(WeightModel::cascade(2, 0.75));
    const auto b = characteristic_exponent(WeightModel::cascade(2, 0.9));
    const auto c = characteristic_exponent(WeightModel::cascade(2, 0.5));
    o.require(a.alpha && std::fabs(*a.alpha - std::log(3.0)) <= 1e-10, "(2, 3/4) gives ln 3");
    o.require(b.alpha && std::fabs(*b.alpha - std::log(9.0 / 4.0)) <= 1e-10, "(2, 0.9) gives log(9/4)");
    o.require(!c.alpha, "(2, 1/2) has none");
    o.detail << "alpha(2,3/4) - ln 3 = " << num(a.alpha.value_or(NAN) - std::log(3.0))
             << ", alpha(2,0.9) - log(9/4) = " << num(b.alpha.value_or(NAN) - std::log(2.25))
             << ", (2,1/2): " << (c.alpha ? "found" : "none (" + c.reason + ")");
}

void supercritical_exactness(Outcome& o) {
    const CascadeParams p{2, 0.25};
    const auto sol = explicit_solution(p, 1.0, 30);
    const double a0 = sol.a[0].to_double();
    const double q = extinction_probability(unit_count_distribution(p.model()));
    const auto res = recursion_residual(sol, -1, 30);
    o.require(std::fabs(a0 - 1.0 / 9.0) <= 1e-12, "a_0 = 1/9");
    o.require(std::fabs(a0 - q) <= 1e-12, "a_0 = extinction probability");
    o.require(res.exact() && res.cells == 32, "zero residual on n in [-1, 30]");
    o.detail << "a_0 = " << num(a0) << ", extinction probability " << num(q) << ", residual "
             << res.max_residual.to_string() << " over " << res.cells << " cells";
}

void martingale_mean(Outcome& o) {
    const auto model = WeightModel::cascade(2, 0.75);
    const auto tr = simulate_replicates(model, std::log(3.0), 12, 100000, kSeed);
    double worst = 0.0;
    for (int n = 0; n <= 12; ++n) {
        const auto col = tr.w_column(n);
        const Estimate e = mean_estimate(col);
        const double dev = std::fabs(e.value - 1.0);
        const bool ok = e.standard_error > 0.0 ? dev <= 3.0 * e.standard_error : dev <= 1e-15;
        o.require(ok, "n = " + std::to_string(n));
        if (e.standard_error > 0.0) worst = std::max(worst, dev / e.standard_error);
    }
    o.detail << "max |mean W_n - 1| / SE over n <= 12: " << num(worst);
}

void increment_distribution_check(Outcome& o) {
    const auto model = WeightModel::cascade(2, 0.75);
    const double alpha = std::log(3.0);
    const auto d = increment_distribution(model, alpha);
    const bool shape = d.atoms.size() == 2 && std::fabs(d.atoms[0].location) <= 1e-12 &&
                       std::fabs(d.atoms[0].mass - 0.5) <= 1e-12 &&
                       std::fabs(d.atoms[1].location - 1.0) <= 1e-12 &&
                       std::fabs(d.atoms[1].mass - 0.5) <= 1e-12;
    o.require(shape, "atoms {(0, 1/2), (1, 1/2)}");
    o.require(std::fabs(d.drift() - 0.5) <= 1e-12, "drift 1/2");
    const auto b = biggins_check(model, alpha);
    o.require(b.verdict == BigginsVerdict::holds && std::isfinite(b.integral_estimate), "Biggins holds");
    o.detail << d.atoms.size() << " atoms, drift " << num(d.drift()) << ", Biggins " << to_string(b.verdict)
             << " with integral " << num(b.integral_estimate);
}

void renewal_identity(Outcome& o) {
    const auto r = renewal_measure_check(WeightModel::cascade(2, 0.75), std::log(3.0), 0.0, 3.0, 12, 10000,
                                         kSeed);
    o.require(std::fabs(r.z_score) <= 3.0, "|z| <= 3");
    o.detail << "tree estimate " << num(r.empirical.value) << " +- " << num(r.empirical.standard_error)
             << ", convolution value " << num(r.exact) << ", z = " << num(r.z_score);
}

void fixed_point_closure(Outcome& o) {
    const auto model = WeightModel::deterministic({0.5, 0.5});
    const auto grid = GridSpec::lattice(2.0, {1.0}, -400, 111);
    for (double c : {0.5, 1.0, 3.0}) {
        const auto m = fixed_point_residual(weibull_curve(CurveKind::survival, grid, c, 1.0), model,
                                            OperatorKind::min);
        const auto s = fixed_point_residual(weibull_curve(CurveKind::laplace, grid, c, 1.0), model,
                                            OperatorKind::sum);
        o.require(m.residuals.size() == 512, "512 grid points");
        o.require(m.sup_norm <= 1e-12, "min residual, c = " + num(c));
        o.require(s.sup_norm <= 1e-12, "sum residual, c = " + num(c));
        o.detail << "c=" << num(c) << ": min " << num(m.sup_norm) << ", sum " << num(s.sup_norm) << "; ";
    }
}

std::shared_ptr<const EmpiricalLaplace> w_limit(const WeightModel& model, double alpha) {
    auto w = sample_W_limit(model, alpha, 12, 100000, kSeed);
    return std::make_shared<const EmpiricalLaplace>(std::move(w.laplace));
}

void weibull_mixture(Outcome& o) {
    const auto model = WeightModel::cascade(2, 0.75);
    const double alpha = std::log(3.0);
    const auto grid = GridSpec::lattice(std::numbers::e, {1.0}, -40, 40);
    const Curve f = build_weibull_mixture(w_limit(model, alpha), PeriodicModulation::constant(1.0), alpha, grid);
    check_mc_residual(o, f, model, OperatorKind::min);
    const auto reg = regularity_diagnostic(f, alpha, detect_lattice(model));
    o.require(reg.classification == RegularityClass::elementary_candidate, "elementary-candidate");
    for (const auto& lim : reg.residue_limits) {
        o.require(std::fabs(lim.limit_estimate - 1.0) <= 0.1, "residue limit within 10% of 1");
        o.detail << "limit at residue " << num(lim.residue) << " = " << num(lim.limit_estimate) << ", ";
    }
    o.detail << "regularity " << to_string(reg.classification);
}

void stable_mixture(Outcome& o) {
    const auto model = WeightModel::cascade(2, 0.9);
    const double alpha = std::log(9.0 / 4.0);
    const auto grid = GridSpec::lattice(std::numbers::e, {1.0}, -40, 40);
    const auto phi = w_limit(model, alpha);
    const Curve f = build_stable_mixture(phi, PeriodicModulation::constant(1.0), alpha, grid);
    check_mc_residual(o, f, model, OperatorKind::sum);
    bool rejected = false;
    try {
        (void)build_stable_mixture(phi, PeriodicModulation::constant(1.0), 1.2, grid);
    } catch (const std::invalid_argument& e) {
        rejected = true;
        o.detail << "alpha = 1.2 rejected: " << e.what();
    }
    o.require(rejected, "alpha = 1.2 rejected");
}

void maximin_extension(Outcome& o) {
    const CascadeParams p{2, 0.5};
    const Curve f = extend_from_seed(p, SeedFunction{{std::numbers::e}, {0.3}}, -20, 20);
    const double res = recursion_residual(p, f);
    o.require(f.size() == 41, "41 cells");
    o.require(res <= 1e-10, "recursion within 1e-10");
    bool rejected = false;
    try {
        (void)extend_from_seed(p, SeedFunction{{1.5, std::numbers::e}, {0.99, 0.01}}, -20, 20);
    } catch (const std::invalid_argument&) {
        rejected = true;
    }
    o.require(rejected, "violating seed rejected");
    o.detail << "max recursion residual " << num(res) << " over " << f.size()
             << " cells; violating seed " << (rejected ? "rejected" : "accepted");
}

void uniqueness_mechanism(Outcome& o) {
    const CascadeParams p{2, 0.25};
    const auto a = a_sequence_wide(p, 6);
    const auto mid = escape_check(p, (a[0].to_double() + a[1].to_double()) / 2.0, 10);
    const auto a5 = escape_check(p, a[5].to_double(), 10);
    o.require(mid.exceeded_at && *mid.exceeded_at <= 2, "(a_0 + a_1)/2 escapes within 2 steps");
    o.require(a5.reached_one_at && *a5.reached_one_at == 6 && !a5.exceeded_at, "a_5 reaches 1 at step 6");
    double peak = 0.0;
    for (double x : a5.trajectory) peak = std::max(peak, x);
    o.require(peak <= 1.0 + 1e-10, "a_5 trajectory never exceeds 1");
    o.detail << "(a_0+a_1)/2 exceeds 1 at step " << (mid.exceeded_at ? std::to_string(*mid.exceeded_at) : "-")
             << "; a_5 reaches 1 at step "
             << (a5.reached_one_at ? std::to_string(*a5.reached_one_at) : "-") << " (peak " << num(peak) << ")";
}

void property_suites(Outcome& o) {
#ifdef SFPE_PROPERTY_SUITE
    const int rc = std::system("\"" SFPE_PROPERTY_SUITE "\" --minimal > /dev/null 2>&1");
    o.require(rc == 0, "property suite exit status 0");
    o.detail << "property_suite exit status " << rc;
#else
    o.require(false, "property suite not built");
#endif
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, Criterion>> criteria{
        {"characteristic exponent", characteristic_exponents},
        {"supercritical exactness", supercritical_exactness},
        {"martingale mean", martingale_mean},
        {"increment distribution", increment_distribution_check},
        {"renewal identity", renewal_identity},
        {"fixed-point closure", fixed_point_closure},
        {"Weibull-mixture verification", weibull_mixture},
        {"stable-mixture verification", stable_mixture},
        {"maximin extension", maximin_extension},
        {"uniqueness mechanism", uniqueness_mechanism},
        {"property suites", property_suites},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        const auto start = std::chrono::steady_clock::now();
        try {
            criteria[i].second(o);
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail << "exception: " << e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (!o.pass) ++failures;
        std::printf("%s  criterion %2zu  %-30s %7.2f s  %s\n", o.pass ? "PASS" : "FAIL", i + 1,
                    criteria[i].first.c_str(), secs, o.detail.str().c_str());
        std::fflush(stdout);
    }
    std::printf("%zu/%zu criteria passed\n", criteria.size() - static_cast<std::size_t>(failures),
                criteria.size());
    return failures == 0 ? 0 : 1;
}
