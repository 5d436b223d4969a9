#include "sfpe/commands.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <sstream>

#include "sfpe/cascade.hpp"
#include "sfpe/numeric.hpp"
#include "sfpe/wbp.hpp"

namespace sfpe {

namespace {

class UsageError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

std::string fmt(double x) { return format_number(x); }

class Session {
  public:
    Session(const RunConfig& cfg, unsigned threads)
        : cfg(cfg), model(cfg.model.build()), threads(std::max(1u, threads)) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "# config_hash=%016" PRIx64 "\n# seed=%" PRIu64 "\n", config_hash(cfg),
                      cfg.mc.seed);
        metadata = buf;
    }

    const RunConfig& cfg;
    WeightModel model;
    unsigned threads;
    std::string metadata;
    std::ostringstream out;

    std::string path(const std::string& name) const { return cfg.output + "_" + name; }

    void csv(const std::string& name, const std::function<void(std::ostream&)>& body) {
        const std::string p = path(name + ".csv");
        ensure_parent(p);
        std::ofstream os(p, std::ios::binary);
        if (!os) throw UsageError("cannot write " + p);
        body(os);
        os << metadata;
        if (!os) throw std::runtime_error("write failed: " + p);
        out << "wrote " << p << '\n';
    }

    double alpha() const {
        std::string why;
        const auto a = resolve_alpha(cfg, &why);
        if (!a) throw UsageError("this command needs alpha: " + why);
        return *a;
    }

    CascadeParams cascade() const {
        if (cfg.model.type != "cascade") throw UsageError("this command needs a cascade model");
        return {cfg.model.n, cfg.model.theta};
    }

    double z_max() const { return cfg.options.z_max.value_or(3.0); }
    double clamp() const { return cfg.options.clamp_threshold.value_or(kDefaultClampThreshold); }

    static void ensure_parent(const std::string& p) {
        const auto parent = std::filesystem::path(p).parent_path();
        if (!parent.empty()) std::filesystem::create_directories(parent);
    }
};

OperatorKind operator_kind(const Session& s) {
    return s.cfg.options.op.value_or("min") == "sum" ? OperatorKind::sum : OperatorKind::min;
}

std::string equation_label(OperatorKind k) { return k == OperatorKind::min ? "min-equation" : "sum-equation"; }

// Mixture curve from the Monte Carlo law of W; the mixture type follows the operator.
Curve mixture_curve(Session& s, OperatorKind op, const GridSpec& grid) {
    const double alpha = s.alpha();
    const std::string type = s.cfg.options.mixture.value_or(op == OperatorKind::min ? "weibull" : "stable");
    const PeriodicModulation h =
        s.cfg.options.modulation ? s.cfg.options.modulation->build() : PeriodicModulation::constant(1.0);
    auto w = sample_W_limit(s.model, alpha, s.cfg.mc.depth, s.cfg.mc.replicates, s.cfg.mc.seed, s.cfg.mc.node_cap,
                            s.threads);
    s.out << "W sample: " << s.cfg.mc.replicates << " replicates at depth " << s.cfg.mc.depth << ", m(alpha) = "
          << fmt(w.m_alpha) << '\n';
    s.out << "  mean W_depth = " << fmt(w.mean_full_depth.value) << " +- " << fmt(w.mean_full_depth.standard_error)
          << ", mean W_depth/2 = " << fmt(w.mean_half_depth.value) << " +- "
          << fmt(w.mean_half_depth.standard_error) << '\n';
    if (w.warning) s.out << "  warning: " << *w.warning << '\n';
    auto phi = std::make_shared<const EmpiricalLaplace>(std::move(w.laplace));
    s.out << type << " mixture, alpha = " << fmt(alpha) << '\n';
    try {
        return type == "weibull" ? build_weibull_mixture(phi, h, alpha, grid) : build_stable_mixture(phi, h, alpha, grid);
    } catch (const std::invalid_argument& e) {
        throw UsageError(std::string("construction rejected: ") + e.what());
    }
}

Curve configured_curve(Session& s, OperatorKind op, const GridSpec& grid) {
    CurveConfig c = s.cfg.options.curve.value_or(CurveConfig{});
    if (!s.cfg.options.curve && (s.cfg.alpha || s.cfg.alpha_auto)) c.beta = s.alpha();
    const CurveKind kind = op == OperatorKind::min ? CurveKind::survival : CurveKind::laplace;
    if (c.type == "mixture") return mixture_curve(s, op, grid);
    if (c.type == "point_mass") {
        s.out << "curve: point mass at " << fmt(c.c) << '\n';
        return point_mass_curve(grid, c.c);
    }
    s.out << "curve: exp(-" << fmt(c.c) << " t^" << fmt(c.beta) << ")\n";
    return weibull_curve(kind, grid, c.c, c.beta);
}

// Statistical when a standard error exists, absolute otherwise. Round-off
// relative to the smaller of value and tail is allowed in both cases.
struct PointCheck {
    double z = 0.0;
    bool ok = true;
    bool roundoff = false;  // |residual| within the round-off floor
};

PointCheck check_point(double residual, double value, double tail, std::optional<double> se, double z_max,
                       double tol) {
    const double floor = 1e-12 * std::min(value, tail);
    PointCheck pc;
    pc.roundoff = std::fabs(residual) <= floor;
    if (se) {
        pc.z = *se > 0.0 ? residual / *se : (residual == 0.0 ? 0.0 : INFINITY);
        pc.ok = std::fabs(residual) <= z_max * *se + floor;
    } else {
        pc.ok = std::fabs(residual) <= tol + floor;
    }
    return pc;
}

int verify_residual(Session& s, const Curve& curve, OperatorKind op) {
    const ResidualReport rep = fixed_point_residual(curve, s.model, op, s.clamp());
    const double tol = s.cfg.options.tolerance.value_or(1e-12);
    const bool mc = !rep.standard_errors.empty();
    const auto t = curve.grid();
    const auto v = curve.values();
    const auto tails = curve.tails();
    std::size_t failures = 0, excluded = 0;
    double worst_z = 0.0;
    s.csv("residual", [&](std::ostream& os) {
        os << "t,value,image,residual,clamped" << (mc ? ",standard_error,z" : "") << '\n';
        for (std::size_t j = 0; j < t.size(); ++j) {
            const auto se = mc ? std::optional<double>(rep.standard_errors[j]) : std::nullopt;
            const PointCheck pc = check_point(rep.residuals[j], v[j], tails[j], se, s.z_max(), tol);
            if (rep.clamped[j]) {
                ++excluded;
            } else {
                if (!pc.ok) ++failures;
                if (!pc.roundoff) worst_z = std::max(worst_z, std::fabs(pc.z));
            }
            os << fmt(t[j]) << ',' << fmt(v[j]) << ',' << fmt(v[j] + rep.residuals[j]) << ','
               << fmt(rep.residuals[j]) << ',' << (rep.clamped[j] ? 1 : 0);
            if (mc) os << ',' << fmt(rep.standard_errors[j]) << ',' << fmt(pc.z);
            os << '\n';
        }
    });
    s.out << equation_label(op) << " residual: sup-norm " << fmt(rep.sup_norm) << " over " << t.size()
          << " grid points\n";
    s.out << "clamp fraction " << fmt(rep.clamp_fraction) << "; " << excluded
          << " point(s) whose image leaves the grid are not checked\n";
    if (rep.warning) s.out << "warning: " << *rep.warning << '\n';
    if (mc)
        s.out << "max |residual| / standard error above round-off = " << fmt(worst_z) << " (limit " << fmt(s.z_max()) << ")\n";
    else
        s.out << "tolerance " << fmt(tol) << '\n';
    if (failures) {
        s.out << "FAIL: " << failures << " grid point(s) outside tolerance\n";
        return kExitVerification;
    }
    s.out << "PASS\n";
    return kExitOk;
}

int cmd_weights_analyze(Session& s) {
    const WeightModel& m = s.model;
    s.out << "model: " << m.describe() << '\n';
    s.out << "m(0) = E N = " << fmt(moment_m(m, 0.0)) << '\n';
    s.out << "m(1) = " << fmt(moment_m(m, 1.0)) << '\n';
    const ExponentResult ex = characteristic_exponent(m);
    std::string regime;
    if (s.cfg.model.type == "cascade") regime = to_string(classify(s.cascade()));
    if (ex.alpha) {
        s.out << "characteristic exponent alpha = " << fmt(*ex.alpha) << '\n';
    } else {
        s.out << "no characteristic exponent" << (regime.empty() ? "" : "; " + regime + " regime") << '\n';
        s.out << "  (" << ex.reason << ")\n";
    }
    if (!regime.empty() && ex.alpha) s.out << "cascade regime: " << regime << '\n';
    const LatticeInfo lat = detect_lattice(m);
    if (lat.kind == LatticeKind::geometric)
        s.out << "lattice: geometric, r = " << fmt(lat.r) << '\n';
    else
        s.out << "lattice: " << (lat.kind == LatticeKind::trivial ? "trivial" : "continuous") << '\n';
    const AssumptionReport a = check_assumptions(m);
    auto yn = [](bool b) { return b ? "yes" : "no"; };
    s.out << "assumption 0 < P(N > 1) and P(N >= 1) = 1: " << yn(a.a1) << '\n';
    s.out << "assumption P(sup T < 1) > 0: " << yn(a.a2) << '\n';
    s.out << "assumption E N > 1: " << yn(a.a3) << '\n';
    s.out << "assumption P(T in {0,1}^N) < 1: " << yn(a.a4) << '\n';
    if (a.degenerate_sup_one) s.out << "degenerate case: sup T = 1 almost surely\n";
    if (a.sup_ge_one) s.out << "degenerate case: sup T >= 1 almost surely with P(sup T > 1) > 0\n";
    const auto units = unit_count_distribution(m);
    s.out << "extinction probability of the unit-weight subtree = " << fmt(extinction_probability(units)) << '\n';

    std::vector<double> betas = s.cfg.options.beta_grid.value_or(std::vector<double>{});
    if (betas.empty())
        for (int i = 0; i <= 100; ++i) betas.push_back(0.05 * i);
    s.csv("moments", [&](std::ostream& os) {
        os << "beta,m\n";
        for (double b : betas) os << fmt(b) << ',' << fmt(moment_m(m, b)) << '\n';
    });
    return kExitOk;
}

int cmd_wbp_simulate(Session& s) {
    const double alpha = s.alpha();
    const McConfig& mc = s.cfg.mc;
    const ReplicateTraces tr =
        simulate_replicates(s.model, alpha, mc.depth, mc.replicates, mc.seed, mc.node_cap, s.threads);
    s.csv("trace", [&](std::ostream& os) { write_trace_csv(os, tr); });
    const double m_alpha = moment_m(s.model, alpha);
    const bool martingale = std::fabs(m_alpha - 1.0) <= 1e-9;
    s.out << "alpha = " << fmt(alpha) << ", m(alpha) = " << fmt(m_alpha) << ", " << mc.replicates
          << " replicates, depth " << mc.depth << '\n';
    if (!martingale) s.out << "m(alpha) != 1: W_n is not a martingale, mean check skipped\n";
    std::size_t failures = 0;
    s.csv("martingale", [&](std::ostream& os) {
        os << "n,mean_W,standard_error,z,mean_R\n";
        for (int n = 0; n <= mc.depth; ++n) {
            const auto w = tr.w_column(n);
            const auto r = tr.r_column(n);
            const Estimate e = mean_estimate(w);
            const double z = e.standard_error > 0.0 ? (e.value - 1.0) / e.standard_error : 0.0;
            if (martingale && std::fabs(z) > s.z_max()) ++failures;
            os << n << ',' << fmt(e.value) << ',' << fmt(e.standard_error) << ',' << fmt(z) << ','
               << fmt(mean_estimate(r).value) << '\n';
            s.out << "  n = " << n << ": mean W = " << fmt(e.value) << " +- " << fmt(e.standard_error)
                  << " (z = " << fmt(z) << ")\n";
        }
    });
    if (failures) {
        s.out << "FAIL: martingale mean outside " << fmt(s.z_max()) << " standard errors at " << failures
              << " generation(s)\n";
        return kExitVerification;
    }
    if (martingale) s.out << "PASS: E W_n = 1 within " << fmt(s.z_max()) << " standard errors\n";
    return kExitOk;
}

int cmd_fixpoint_verify(Session& s) {
    const OperatorKind op = operator_kind(s);
    const GridSpec grid = resolve_grid(s.cfg, s.model);
    const Curve curve = configured_curve(s, op, grid);
    s.csv("curve", [&](std::ostream& os) { curve.write_csv(os); });
    return verify_residual(s, curve, op);
}

int cmd_fixpoint_construct(Session& s) {
    const std::string mixture = s.cfg.options.mixture.value_or("weibull");
    const OperatorKind op = mixture == "weibull" ? OperatorKind::min : OperatorKind::sum;
    if (s.cfg.options.op && (*s.cfg.options.op == "min") != (op == OperatorKind::min))
        throw UsageError("options.operator does not match the " + mixture + " mixture");
    const GridSpec grid = resolve_grid(s.cfg, s.model);
    const Curve curve = mixture_curve(s, op, grid);
    s.csv("curve", [&](std::ostream& os) { curve.write_csv(os); });
    const PeriodicModulation h =
        s.cfg.options.modulation ? s.cfg.options.modulation->build() : PeriodicModulation::constant(1.0);
    s.csv("modulation", [&](std::ostream& os) { h.write_csv(os); });
    if (mixture == "stable") s.out << "output convex: " << (curve.convex() ? "yes" : "no") << '\n';
    const int status = verify_residual(s, curve, op);
    try {
        const RegularityReport reg = regularity_diagnostic(curve, s.alpha(), detect_lattice(s.model));
        s.out << "regularity: " << to_string(reg.classification) << '\n';
    } catch (const std::invalid_argument& e) {
        s.out << "regularity: not assessed (" << e.what() << ")\n";
    }
    return status;
}

int cmd_cascade_solve(Session& s) {
    const CascadeParams p = s.cascade();
    const Regime regime = classify(p);
    s.out << "cascade N = " << p.n << ", theta = " << fmt(p.theta) << ": " << to_string(regime) << " regime\n";
    if (regime != Regime::supercritical)
        throw UsageError("the explicit solution exists only in the supercritical regime; use cascade-extend");
    const int depth = s.cfg.options.cascade_depth.value_or(30);
    const std::vector<int> range = s.cfg.options.check_range.value_or(std::vector<int>{-1, depth});
    const int n_min = s.cfg.grid ? s.cfg.grid->n_min : -40;
    if (range[1] > depth) throw UsageError("options.check_range exceeds options.cascade_depth");
    if (range[0] - 1 < n_min - 1) throw UsageError("options.check_range starts below the grid");
    const CascadeSolution sol = explicit_solution(p, s.cfg.options.scale.value_or(1.0), depth, n_min);

    s.csv("a_sequence", [&](std::ostream& os) {
        os << "n,a_n\n";
        for (std::size_t k = 0; k < sol.a.size(); ++k) os << k << ',' << sol.a[k].to_string() << '\n';
    });
    s.csv("solution", [&](std::ostream& os) { sol.write_csv(os); });

    const double a0 = sol.a[0].to_double();
    const double ext = extinction_probability(unit_count_distribution(s.model));
    s.out << "a_0 = " << fmt(a0) << '\n';
    s.out << "extinction probability of the unit-weight subtree = " << fmt(ext) << " (difference "
          << fmt(a0 - ext) << ")\n";
    if (sol.a.size() > 1) s.out << "a_" << depth << " = " << sol.a.back().to_string() << '\n';

    const RecursionResidual rr = recursion_residual(sol, range[0], range[1]);
    s.out << "cascade recursion residual " << rr.max_residual.to_string() << " over n in [" << rr.n_lo << ", "
          << rr.n_hi << "] (" << rr.cells << " cells)\n";

    std::vector<double> xs = s.cfg.options.escape_x.value_or(std::vector<double>{});
    if (!s.cfg.options.escape_x && sol.a.size() > 5) xs = {(sol.a[0].to_double() + sol.a[1].to_double()) / 2,
                                                           sol.a[5].to_double()};
    const int max_iter = s.cfg.options.max_iter.value_or(50);
    std::vector<EscapeResult> esc;
    for (double x : xs) esc.push_back(escape_check(p, x, max_iter));
    if (!esc.empty()) {
        s.csv("escape", [&](std::ostream& os) {
            os << "start,k,value\n";
            for (std::size_t i = 0; i < esc.size(); ++i)
                for (std::size_t k = 0; k < esc[i].trajectory.size(); ++k)
                    os << fmt(xs[i]) << ',' << k << ',' << fmt(esc[i].trajectory[k]) << '\n';
        });
        for (std::size_t i = 0; i < esc.size(); ++i) {
            s.out << "g-iteration from " << fmt(xs[i]) << ": ";
            if (esc[i].exceeded_at)
                s.out << "exceeds 1 at iteration " << *esc[i].exceeded_at << '\n';
            else if (esc[i].reached_one_at)
                s.out << "reaches 1 at iteration " << *esc[i].reached_one_at << " without exceeding it\n";
            else
                s.out << "stays below 1 for " << max_iter << " iterations\n";
        }
    }
    if (!rr.exact()) {
        s.out << "FAIL: recursion residual is not zero\n";
        return kExitVerification;
    }
    s.out << "PASS\n";
    return kExitOk;
}

int cmd_cascade_extend(Session& s) {
    const CascadeParams p = s.cascade();
    const Regime regime = classify(p);
    s.out << "cascade N = " << p.n << ", theta = " << fmt(p.theta) << ": " << to_string(regime) << " regime\n";
    if (regime == Regime::supercritical) throw UsageError("seed extension needs a subcritical or critical cascade");
    if (!s.cfg.options.seed_function) throw UsageError("options.seed_function is required");
    const SeedFunction seed{s.cfg.options.seed_function->s, s.cfg.options.seed_function->values};
    const std::vector<int> range = s.cfg.options.n_range.value_or(std::vector<int>{-20, 20});
    Curve curve = [&] {
        try {
            return extend_from_seed(p, seed, range[0], range[1]);
        } catch (const std::invalid_argument& e) {
            throw UsageError(std::string("seed rejected: ") + e.what());
        }
    }();
    s.csv("curve", [&](std::ostream& os) { curve.write_csv(os); });
    const double res = recursion_residual(p, curve);
    const double tol = s.cfg.options.tolerance.value_or(1e-10);
    s.out << "extended over n in [" << range[0] << ", " << range[1] << "], " << curve.grid().size() << " points\n";
    s.out << "cascade recursion residual " << fmt(res) << " (tolerance " << fmt(tol) << ")\n";
    if (!(res <= tol)) {
        s.out << "FAIL\n";
        return kExitVerification;
    }
    s.out << "PASS\n";
    return kExitOk;
}

int cmd_regularity(Session& s) {
    const double alpha = s.alpha();
    const OperatorKind op = operator_kind(s);
    const GridSpec grid = resolve_grid(s.cfg, s.model);
    const Curve curve = configured_curve(s, op, grid);
    const RegularityReport rep = [&] {
        try {
            return regularity_diagnostic(curve, alpha, detect_lattice(s.model));
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
    }();
    s.csv("regularity", [&](std::ostream& os) {
        os << "residue,limit_estimate,relative_spread\n";
        for (const ResidueLimit& r : rep.residue_limits)
            os << fmt(r.residue) << ',' << fmt(r.limit_estimate) << ',' << fmt(r.relative_spread) << '\n';
    });
    s.out << "D_alpha with alpha = " << fmt(alpha) << '\n';
    s.out << "liminf estimate " << fmt(rep.liminf_estimate) << ", limsup estimate " << fmt(rep.limsup_estimate)
          << ", trend slope " << fmt(rep.trend_slope) << '\n';
    s.out << "classification: " << to_string(rep.classification) << '\n';
    return kExitOk;
}

int cmd_biggins(Session& s) {
    const double alpha = s.alpha();
    const IncrementDistribution inc = increment_distribution(s.model, alpha);
    s.csv("increments", [&](std::ostream& os) {
        os << "location,mass\n";
        for (const IncrementAtom& a : inc.atoms) os << fmt(a.location) << ',' << fmt(a.mass) << '\n';
    });
    const BigginsReport rep = biggins_check(s.model, alpha);
    s.out << "alpha = " << fmt(alpha) << '\n';
    s.out << "increment total mass " << fmt(inc.total_mass()) << ", drift " << fmt(rep.drift) << '\n';
    s.out << "random walk drifts to +infinity: " << (rep.diverges_to_infinity ? "yes" : "no") << '\n';
    s.out << "integral of u log u / E(S+ min log u) over W_1 = u > 1: " << fmt(rep.integral_estimate) << '\n';
    s.out << "Biggins condition: " << to_string(rep.verdict) << '\n';
    return rep.verdict == BigginsVerdict::fails ? kExitVerification : kExitOk;
}

int cmd_renewal_check(Session& s) {
    const double alpha = s.alpha();
    const std::vector<double> iv = s.cfg.options.interval.value_or(std::vector<double>{0.0, 3.0});
    const McConfig& mc = s.cfg.mc;
    const RenewalCheck rc = renewal_measure_check(s.model, alpha, iv[0], iv[1], mc.depth, mc.replicates, mc.seed,
                                                  mc.node_cap, s.threads);
    const IncrementDistribution inc = increment_distribution(s.model, alpha);
    s.csv("renewal", [&](std::ostream& os) {
        os << "n,mass_in_interval\n";
        for (int n = 0; n <= mc.depth; ++n) os << n << ',' << fmt(convolution_power(inc, n).mass_in(iv[0], iv[1])) << '\n';
    });
    s.out << "renewal identity on [" << fmt(iv[0]) << ", " << fmt(iv[1]) << "], depth " << mc.depth << '\n';
    s.out << "tree estimate " << fmt(rc.empirical.value) << " +- " << fmt(rc.empirical.standard_error)
          << ", convolution value " << fmt(rc.exact) << ", z = " << fmt(rc.z_score) << '\n';
    if (!(std::fabs(rc.z_score) <= s.z_max())) {
        s.out << "FAIL: |z| > " << fmt(s.z_max()) << '\n';
        return kExitVerification;
    }
    s.out << "PASS\n";
    return kExitOk;
}

const std::map<std::string, int (*)(Session&)>& dispatch() {
    static const std::map<std::string, int (*)(Session&)> table{
        {"weights-analyze", cmd_weights_analyze}, {"wbp-simulate", cmd_wbp_simulate},
        {"fixpoint-verify", cmd_fixpoint_verify}, {"fixpoint-construct", cmd_fixpoint_construct},
        {"cascade-solve", cmd_cascade_solve},     {"cascade-extend", cmd_cascade_extend},
        {"regularity", cmd_regularity},           {"biggins", cmd_biggins},
        {"renewal-check", cmd_renewal_check}};
    return table;
}

}  // namespace

const std::vector<std::string>& command_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> v;
        for (const auto& [name, fn] : dispatch()) v.push_back(name);
        return v;
    }();
    return names;
}

int run_command(const RunConfig& config, const std::string& command, std::ostream& report, unsigned threads) {
    const auto it = dispatch().find(command);
    if (it == dispatch().end()) {
        report << "error: unknown command '" << command << "'\n";
        return kExitUsage;
    }
    Session s(config, threads);
    s.out << "command: " << command << '\n';
    int status = kExitOk;
    try {
        status = it->second(s);
    } catch (const UsageError& e) {
        s.out << "error: " << e.what() << '\n';
        status = kExitUsage;
    } catch (const NodeCapExceeded& e) {
        s.out << "error: " << e.what() << '\n';
        status = kExitUsage;
    } catch (const std::invalid_argument& e) {
        s.out << "error: " << e.what() << '\n';
        status = kExitUsage;
    } catch (const std::domain_error& e) {
        s.out << "error: " << e.what() << '\n';
        status = kExitUsage;
    }
    s.out << "exit status " << status << '\n';
    const std::string p = s.path("report.txt");
    Session::ensure_parent(p);
    std::ofstream(p, std::ios::binary) << s.out.str();
    report << s.out.str();
    return status;
}

}  // namespace sfpe
