#include "sfpe/fixpoint.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "sfpe/numeric.hpp"

namespace sfpe {

namespace {

constexpr double kResidueTol = 1e-9;
constexpr double kTrendThreshold = 0.05;
constexpr double kRegularSlack = 2.0;
constexpr double kCauchyTol = 0.01;
constexpr int kLatticeSteps = 12;
constexpr int kCauchyPoints = 4;

double reduce_log(double t, double span) {
    double x = std::fmod(std::log(t), span);
    if (x < 0.0) x += span;
    if (span - x <= kResidueTol) x = 0.0;
    return x;
}

bool same_residue(double a, double b, double span) {
    const double d = std::fabs(a - b);
    return d <= kResidueTol || span - d <= kResidueTol;
}

struct AtomTerm {
    double probability;
    std::vector<double> weights;  // positive weights only
};

std::vector<AtomTerm> atom_terms(const WeightModel& model) {
    std::vector<AtomTerm> out;
    for (const auto& a : model.atoms()) {
        AtomTerm t{a.probability, {}};
        for (double w : a.weights)
            if (w > 0.0) t.weights.push_back(w);
        out.push_back(std::move(t));
    }
    return out;
}

// Least-squares slope of y against x.
double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    return sxx > 0.0 ? sxy / sxx : 0.0;
}

std::string clamp_warning(double fraction, double threshold) {
    std::ostringstream os;
    os << "clamp fraction " << format_number(fraction) << " exceeds threshold "
       << format_number(threshold) << "; values outside the grid were held at the endpoints";
    return os.str();
}

}  // namespace

GridSpec GridSpec::log_spaced(double lo, double hi, std::size_t points) {
    GridSpec g;
    g.mode = CurveMode::interp_loglinear;
    g.lo = lo;
    g.hi = hi;
    g.points = points;
    return g;
}

GridSpec GridSpec::lattice(double r, std::vector<double> residues, int n_min, int n_max) {
    GridSpec g;
    g.mode = CurveMode::lattice_step;
    g.r = r;
    g.residues = std::move(residues);
    g.n_min = n_min;
    g.n_max = n_max;
    return g;
}

std::vector<double> GridSpec::build() const {
    std::vector<double> t;
    if (mode == CurveMode::interp_loglinear) {
        if (!(lo > 0.0 && hi > lo) || !std::isfinite(hi))
            throw std::invalid_argument("grid: need 0 < lo < hi");
        if (points < 2) throw std::invalid_argument("grid: need at least 2 points");
        const double a = std::log(lo), step = (std::log(hi) - a) / static_cast<double>(points - 1);
        for (std::size_t j = 0; j < points; ++j)
            t.push_back(j == 0 ? lo : j + 1 == points ? hi : std::exp(a + step * static_cast<double>(j)));
        return t;
    }
    if (!(r > 1.0) || !std::isfinite(r)) throw std::invalid_argument("grid: lattice ratio must be > 1");
    if (n_min > n_max) throw std::invalid_argument("grid: need n_min <= n_max");
    if (residues.empty()) throw std::invalid_argument("grid: need at least one residue");
    for (double s : residues) {
        if (!(s > 0.0) || !std::isfinite(s)) throw std::invalid_argument("grid: residues must be positive");
        for (int n = n_min; n <= n_max; ++n) t.push_back(s * std::pow(r, n));
    }
    std::sort(t.begin(), t.end());
    for (std::size_t j = 1; j < t.size(); ++j)
        if (t[j] <= t[j - 1] * (1.0 + kResidueTol))
            throw std::invalid_argument("grid: residues produce coinciding lattice points");
    return t;
}

Curve sample_curve(CurveKind kind, const GridSpec& grid, const std::function<double(double)>& f,
                   const std::function<double(double)>& tail) {
    auto t = grid.build();
    std::vector<double> v(t.size()), tl;
    for (std::size_t j = 0; j < t.size(); ++j) v[j] = f(t[j]);
    if (tail) {
        tl.resize(t.size());
        for (std::size_t j = 0; j < t.size(); ++j) tl[j] = tail(t[j]);
    }
    return grid.mode == CurveMode::lattice_step
               ? Curve::lattice(kind, grid.r, std::move(t), std::move(v), std::move(tl))
               : Curve::interpolated(kind, std::move(t), std::move(v), std::move(tl));
}

Curve weibull_curve(CurveKind kind, const GridSpec& grid, double c, double beta) {
    if (!(c > 0.0) || !(beta > 0.0)) throw std::invalid_argument("weibull_curve: need c > 0 and beta > 0");
    return sample_curve(
        kind, grid, [=](double t) { return std::exp(-c * std::pow(t, beta)); },
        [=](double t) { return -std::expm1(-c * std::pow(t, beta)); });
}

Curve point_mass_curve(const GridSpec& grid, double c) {
    if (!(c > 0.0)) throw std::invalid_argument("point_mass_curve: need c > 0");
    return sample_curve(CurveKind::survival, grid, [=](double t) { return t <= c ? 1.0 : 0.0; });
}

PeriodicModulation PeriodicModulation::constant(double c) {
    if (!(c > 0.0) || !std::isfinite(c)) throw std::invalid_argument("modulation: constant must be > 0");
    PeriodicModulation m;
    m.constant_ = true;
    m.h_ = {c};
    m.s_ = {1.0};
    return m;
}

PeriodicModulation PeriodicModulation::tabulated(double r, std::vector<double> residues,
                                                 std::vector<double> values) {
    if (!(r > 1.0) || !std::isfinite(r)) throw std::invalid_argument("modulation: period must be > 1");
    if (residues.empty() || residues.size() != values.size())
        throw std::invalid_argument("modulation: residues and values must be nonempty and equal in length");
    std::vector<std::pair<double, double>> rows;
    for (std::size_t q = 0; q < residues.size(); ++q) {
        if (!(residues[q] >= 1.0 && residues[q] < r))
            throw std::invalid_argument("modulation: residues must lie in [1, r)");
        if (!(values[q] > 0.0) || !std::isfinite(values[q]))
            throw std::invalid_argument("modulation: values must be positive");
        rows.emplace_back(residues[q], values[q]);
    }
    std::sort(rows.begin(), rows.end());
    PeriodicModulation m;
    m.constant_ = false;
    m.r_ = r;
    for (auto [s, h] : rows) {
        if (!m.s_.empty() && same_residue(std::log(s), std::log(m.s_.back()), std::log(r)))
            throw std::invalid_argument("modulation: duplicate residue");
        m.s_.push_back(s);
        m.h_.push_back(h);
    }
    return m;
}

double PeriodicModulation::operator()(double t) const {
    if (constant_) return h_.front();
    if (!(t > 0.0)) throw std::domain_error("modulation: argument must be > 0");
    const double span = std::log(r_);
    const double x = reduce_log(t, span);
    for (std::size_t q = 0; q < s_.size(); ++q)
        if (same_residue(x, std::log(s_[q]), span)) return h_[q];
    throw std::domain_error("modulation: t = " + format_number(t) + " is off the tabulated residues");
}

bool PeriodicModulation::weibull_admissible(double alpha, std::string* why) const {
    auto fail = [&](const std::string& msg) {
        if (why) *why = msg;
        return false;
    };
    if (!(alpha > 0.0)) return fail("alpha must be > 0");
    if (constant_) return true;
    std::vector<double> x(s_.size());
    for (std::size_t q = 0; q < s_.size(); ++q) x[q] = h_[q] * std::pow(s_[q], alpha);
    for (std::size_t q = 1; q < x.size(); ++q)
        if (x[q] < x[q - 1] * (1.0 - 1e-12))
            return fail("h(s) s^alpha decreases between residues " + format_number(s_[q - 1]) + " and " +
                        format_number(s_[q]));
    if (x.back() > h_.front() * std::pow(r_ * s_.front(), alpha) * (1.0 + 1e-12))
        return fail("h(s) s^alpha is not nondecreasing across the period boundary");
    return true;
}

bool PeriodicModulation::stable_admissible(double alpha, std::string* why) const {
    auto fail = [&](const std::string& msg) {
        if (why) *why = msg;
        return false;
    };
    if (!(alpha > 0.0)) return fail("alpha must be > 0");
    if (alpha > 1.0) return fail("no r-periodic stable law exists for alpha > 1");
    if (constant_) return true;
    if (alpha == 1.0) return fail("for alpha = 1 the modulation must be constant");
    std::vector<double> t, y;
    for (int period = 0; period < 2; ++period)
        for (std::size_t q = 0; q < s_.size(); ++q) {
            const double u = s_[q] * std::pow(r_, period);
            t.push_back(u);
            y.push_back(h_[q] * std::pow(u, alpha));
        }
    double prev_slope = std::numeric_limits<double>::infinity();
    for (std::size_t j = 1; j < t.size(); ++j) {
        if (y[j] < y[j - 1] * (1.0 - 1e-12)) return fail("p(t) t^alpha is not nondecreasing");
        const double slope = (y[j] - y[j - 1]) / (t[j] - t[j - 1]);
        if (slope > prev_slope * (1.0 + 1e-12)) return fail("p(t) t^alpha is not concave on the grid");
        prev_slope = slope;
    }
    return true;
}

void PeriodicModulation::write_csv(std::ostream& os) const {
    os << "s,h\n";
    for (std::size_t q = 0; q < s_.size(); ++q) os << format_number(s_[q]) << ',' << format_number(h_[q]) << '\n';
}

std::string to_string(OperatorKind k) { return k == OperatorKind::min ? "min" : "sum"; }

OperatorResult apply_operator(const Curve& curve, const WeightModel& model, OperatorKind kind,
                              double clamp_threshold) {
    const CurveKind expected = kind == OperatorKind::min ? CurveKind::survival : CurveKind::laplace;
    if (curve.kind() != expected)
        throw std::invalid_argument("apply_operator: the " + to_string(kind) + " operator expects a " +
                                    to_string(expected) + " curve");
    const auto atoms = atom_terms(model);
    const auto grid = curve.grid();
    std::vector<double> values(grid.size()), tails(grid.size());
    std::vector<bool> point_clamped(grid.size(), false);
    std::size_t evals = 0, clamped = 0;
    for (std::size_t j = 0; j < grid.size(); ++j) {
        double v = 0.0, tail = 0.0;
        for (const auto& a : atoms) {
            double prod = 1.0, log_prod = 0.0;
            for (double w : a.weights) {
                const auto p = curve.eval(grid[j] * w);
                ++evals;
                if (p.clamped) {
                    ++clamped;
                    point_clamped[j] = true;
                }
                prod *= p.value;
                log_prod += std::log1p(-p.tail);
            }
            v += a.probability * prod;
            tail += a.probability * -std::expm1(log_prod);
        }
        values[j] = std::clamp(v, 0.0, 1.0);
        tails[j] = std::clamp(tail, 0.0, 1.0);
    }
    OperatorResult out{curve.with_values(std::move(values), std::move(tails)), 0.0, std::nullopt,
                       std::move(point_clamped)};
    out.clamp_fraction = evals ? static_cast<double>(clamped) / static_cast<double>(evals) : 0.0;
    if (out.clamp_fraction > clamp_threshold) out.warning = clamp_warning(out.clamp_fraction, clamp_threshold);
    return out;
}

OperatorResult apply_min_operator(const Curve& curve, const WeightModel& model, double clamp_threshold) {
    return apply_operator(curve, model, OperatorKind::min, clamp_threshold);
}

OperatorResult apply_sum_operator(const Curve& curve, const WeightModel& model, double clamp_threshold) {
    return apply_operator(curve, model, OperatorKind::sum, clamp_threshold);
}

namespace {

// Signed image - curve, differenced on whichever side (value or tail) is small.
void fill_residuals(const Curve& curve, const Curve& image, ResidualReport& rep) {
    const auto v = curve.values(), tl = curve.tails();
    const auto ov = image.values(), otl = image.tails();
    rep.residuals.resize(v.size());
    rep.sup_norm = 0.0;
    for (std::size_t j = 0; j < v.size(); ++j) {
        rep.residuals[j] = (tl[j] <= 0.5 && otl[j] <= 0.5) ? tl[j] - otl[j] : ov[j] - v[j];
        rep.sup_norm = std::max(rep.sup_norm, std::fabs(rep.residuals[j]));
    }
}

}  // namespace

ResidualReport fixed_point_residual(const Curve& curve, const WeightModel& model, OperatorKind kind,
                                    double clamp_threshold) {
    const auto image = apply_operator(curve, model, kind, clamp_threshold);
    ResidualReport rep;
    rep.clamp_fraction = image.clamp_fraction;
    rep.warning = image.warning;
    rep.clamped = image.clamped;
    fill_residuals(curve, image.curve, rep);

    const auto& origin = curve.origin();
    if (!origin) return rep;
    // Delta method: the residual is a smooth function of the empirical
    // transform at finitely many arguments; its influence function is
    // psi(W) = sum_{k,i} p_k prod_{l != i} F(t T_l) e^{-x_ki W} - e^{-x_0 W}.
    const auto atoms = atom_terms(model);
    const auto samples = origin->phi->samples();
    const auto grid = curve.grid();
    rep.standard_errors.resize(grid.size());
    std::vector<double> psi(samples.size());
    for (std::size_t j = 0; j < grid.size(); ++j) {
        std::vector<std::pair<double, double>> terms;  // (coefficient, argument)
        for (const auto& a : atoms) {
            std::vector<double> f(a.weights.size());
            for (std::size_t i = 0; i < f.size(); ++i) f[i] = curve.eval(grid[j] * a.weights[i]).value;
            for (std::size_t i = 0; i < f.size(); ++i) {
                double c = a.probability;
                for (std::size_t l = 0; l < f.size(); ++l)
                    if (l != i) c *= f[l];
                terms.emplace_back(c, origin->argument(grid[j] * a.weights[i]));
            }
        }
        const double x0 = origin->argument(grid[j]);
        // Constant shifts do not change the variance: expm1 keeps precision
        // while the values are near 1, exp once they are small.
        const bool near_one = curve.values()[j] > 0.5;
        auto term = [near_one](double x, double w) {
            return near_one ? std::expm1(-x * w) : std::exp(-x * w);
        };
        for (std::size_t m = 0; m < samples.size(); ++m) {
            double s = -term(x0, samples[m]);
            for (auto [c, x] : terms) s += c * term(x, samples[m]);
            psi[m] = s;
        }
        rep.standard_errors[j] = mean_estimate(psi).standard_error;
    }
    return rep;
}

namespace {

Curve build_mixture(CurveKind kind, std::shared_ptr<const EmpiricalLaplace> phi,
                    const PeriodicModulation& h, double alpha, const GridSpec& grid) {
    if (!phi) throw std::invalid_argument("mixture: missing empirical Laplace transform");
    auto origin = std::make_shared<MixtureOrigin>();
    origin->phi = phi;
    origin->modulation = std::make_shared<const PeriodicModulation>(h);
    origin->alpha = alpha;
    Curve c = [&] {
        try {
            return sample_curve(
                kind, grid, [&](double t) { return (*phi)(origin->argument(t)).value; },
                [&](double t) { return phi->tail(origin->argument(t)).value; });
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument(std::string("mixture: non-monotone output: ") + e.what());
        }
    }();
    c.set_origin(std::move(origin));
    return c;
}

}  // namespace

Curve build_weibull_mixture(std::shared_ptr<const EmpiricalLaplace> phi, const PeriodicModulation& h,
                            double alpha, const GridSpec& grid) {
    std::string why;
    if (!h.weibull_admissible(alpha, &why)) throw std::invalid_argument("build_weibull_mixture: " + why);
    return build_mixture(CurveKind::survival, std::move(phi), h, alpha, grid);
}

Curve build_stable_mixture(std::shared_ptr<const EmpiricalLaplace> phi, const PeriodicModulation& p,
                           double alpha, const GridSpec& grid) {
    std::string why;
    if (!p.stable_admissible(alpha, &why)) throw std::invalid_argument("build_stable_mixture: " + why);
    Curve c = build_mixture(CurveKind::laplace, std::move(phi), p, alpha, grid);
    if (!c.convex()) throw std::invalid_argument("build_stable_mixture: output is not convex on the grid");
    return c;
}

std::string to_string(RegularityClass c) {
    switch (c) {
        case RegularityClass::bounded: return "bounded";
        case RegularityClass::regular: return "regular";
        case RegularityClass::elementary_candidate: return "elementary-candidate";
        case RegularityClass::not_regular: return "not-regular";
        case RegularityClass::inconclusive: return "inconclusive";
    }
    return "unknown";
}

RegularityReport regularity_diagnostic(const Curve& curve, double alpha, const LatticeInfo& lattice) {
    if (!(alpha > 0.0)) throw std::invalid_argument("regularity_diagnostic: alpha must be > 0");
    RegularityReport rep;
    rep.alpha = alpha;
    const auto grid = curve.grid();
    const double t_min = grid.front();
    auto D = [&](double t) { return curve.eval(t).tail / std::pow(t, alpha); };

    // One sequence of (t, D) pairs per residue, ordered by decreasing t.
    std::vector<std::pair<double, std::vector<std::pair<double, double>>>> sequences;
    if (lattice.kind == LatticeKind::geometric) {
        const double r = lattice.r;
        std::vector<double> residues;
        if (curve.mode() == CurveMode::lattice_step && nearly_equal(curve.ratio(), r, 1e-9)) {
            residues = curve.residues();
        } else {
            for (int q = 0; q < 8; ++q) residues.push_back(std::pow(r, q / 8.0));
        }
        for (double s : residues) {
            std::vector<std::pair<double, double>> seq;
            for (int n = 1;; ++n) {
                const double t = s * std::pow(r, -n);
                if (t < t_min * (1.0 - kResidueTol)) break;
                seq.emplace_back(t, D(t));
            }
            if (static_cast<int>(seq.size()) < kLatticeSteps)
                throw std::invalid_argument("regularity_diagnostic: insufficient grid depth (need " +
                                            std::to_string(kLatticeSteps) +
                                            " lattice steps below 1 per residue)");
            seq.erase(seq.begin(), seq.end() - kLatticeSteps);
            sequences.emplace_back(s, std::move(seq));
        }
    } else {
        if (t_min > 1e-6 * (1.0 + kResidueTol))
            throw std::invalid_argument("regularity_diagnostic: insufficient grid depth (need 6 decades below 1)");
        std::vector<std::pair<double, double>> seq;
        for (double t : grid)
            if (t <= 100.0 * t_min) seq.emplace_back(t, D(t));
        std::reverse(seq.begin(), seq.end());
        sequences.emplace_back(1.0, std::move(seq));
    }

    rep.liminf_estimate = std::numeric_limits<double>::infinity();
    rep.limsup_estimate = 0.0;
    bool finite = true, vanishing = false, all_zero = true, cauchy = true;
    for (auto& [s, seq] : sequences) {
        std::vector<double> x, y;
        for (auto [t, d] : seq) {
            finite = finite && std::isfinite(d);
            rep.liminf_estimate = std::min(rep.liminf_estimate, d);
            rep.limsup_estimate = std::max(rep.limsup_estimate, d);
            if (d > 0.0) {
                all_zero = false;
                x.push_back(std::log(t));
                y.push_back(std::log(d));
            }
        }
        if (seq.back().second == 0.0) vanishing = true;
        const double slope = x.size() >= 3 ? fit_slope(x, y) : 0.0;
        if (std::fabs(slope) > std::fabs(rep.trend_slope)) rep.trend_slope = slope;

        // Last few values toward t = 0.
        std::size_t tail_count = kCauchyPoints;
        if (lattice.kind != LatticeKind::geometric) {
            tail_count = 0;
            for (auto [t, d] : seq)
                if (t <= 10.0 * t_min) ++tail_count;
        }
        tail_count = std::clamp<std::size_t>(tail_count, 2, seq.size());
        double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
        for (std::size_t i = seq.size() - tail_count; i < seq.size(); ++i) {
            lo = std::min(lo, seq[i].second);
            hi = std::max(hi, seq[i].second);
        }
        const double mid = 0.5 * (lo + hi);
        const double spread = mid > 0.0 ? (hi - lo) / mid : 0.0;
        cauchy = cauchy && mid > 0.0 && spread <= kCauchyTol;
        rep.residue_limits.push_back({s, seq.back().second, spread});
    }

    if (!finite || sequences.empty()) {
        rep.classification = RegularityClass::inconclusive;
    } else if (all_zero || vanishing || rep.trend_slope > kTrendThreshold ||
               rep.trend_slope < -kTrendThreshold) {
        rep.classification = RegularityClass::not_regular;
    } else if (cauchy) {
        rep.classification = RegularityClass::elementary_candidate;
    } else if (rep.liminf_estimate > 0.0 && rep.limsup_estimate <= kRegularSlack * rep.liminf_estimate) {
        rep.classification = RegularityClass::regular;
    } else {
        rep.classification = RegularityClass::bounded;
    }
    return rep;
}

namespace {

void check_depths(const WeightedTree& tree, int j, int k, const char* who) {
    if (j < 0 || k < 0 || j + k > tree.depth)
        throw std::invalid_argument(std::string(who) + ": need 0 <= j, 0 <= k and j + k <= tree depth");
}

// ancestor[w] = index in generation j of the ancestor of vertex w in generation j + k.
std::vector<std::uint32_t> ancestors(const WeightedTree& tree, int j, int k) {
    const auto& leaves = tree.log_weights[static_cast<std::size_t>(j + k)];
    std::vector<std::uint32_t> idx(leaves.size());
    std::iota(idx.begin(), idx.end(), 0u);
    for (int g = j + k; g > j; --g) {
        const auto& par = tree.parents[static_cast<std::size_t>(g)];
        for (auto& i : idx) i = par[i];
    }
    return idx;
}

}  // namespace

IdentityCheck disintegration_check(const Curve& curve, const WeightedTree& tree, double t, int j, int k) {
    check_depths(tree, j, k, "disintegration_check");
    if (!(t >= 0.0)) throw std::invalid_argument("disintegration_check: t must be >= 0");
    const auto& top = tree.log_weights[static_cast<std::size_t>(j)];
    const auto& leaves = tree.log_weights[static_cast<std::size_t>(j + k)];
    const auto anc = ancestors(tree, j, k);

    IdentityCheck out;
    out.lhs = 1.0;
    for (double s : leaves) out.lhs *= curve.eval(t * std::exp(-s)).value;

    std::vector<double> sub(top.size(), 1.0);
    for (std::size_t w = 0; w < leaves.size(); ++w) {
        const double sv = top[anc[w]];
        sub[anc[w]] *= curve.eval(t * std::exp(-sv) * std::exp(-(leaves[w] - sv))).value;
    }
    out.rhs = 1.0;
    for (double x : sub) out.rhs *= x;
    out.diff = std::fabs(out.lhs - out.rhs);
    return out;
}

IdentityCheck psi_transform(const Curve& curve, const WeightedTree& tree, double t_log, double alpha,
                            int n, int k) {
    check_depths(tree, n, k, "psi_transform");
    const auto& top = tree.log_weights[static_cast<std::size_t>(n)];
    const auto& leaves = tree.log_weights[static_cast<std::size_t>(n + k)];
    const auto anc = ancestors(tree, n, k);
    auto neglog = [&](double arg) {
        const double v = curve.eval(arg).value;
        if (!(v > 0.0)) throw std::domain_error("psi_transform: curve vanishes at t = " + format_number(arg));
        return -std::log(v);
    };

    std::vector<double> terms;
    for (double s : leaves) terms.push_back(neglog(std::exp(t_log - s)));
    IdentityCheck out;
    out.lhs = std::exp(-alpha * t_log) * pairwise_sum(terms);

    std::vector<std::vector<double>> sub(top.size());
    for (std::size_t w = 0; w < leaves.size(); ++w) {
        const double sv = top[anc[w]];
        sub[anc[w]].push_back(neglog(std::exp((t_log - sv) - (leaves[w] - sv))));
    }
    std::vector<double> parts(top.size());
    for (std::size_t v = 0; v < top.size(); ++v) {
        const double shifted = t_log - top[v];
        parts[v] = std::exp(-alpha * top[v]) * std::exp(-alpha * shifted) * pairwise_sum(sub[v]);
    }
    out.rhs = pairwise_sum(parts);
    out.diff = std::fabs(out.lhs - out.rhs);
    return out;
}

std::vector<double> involution_transform(std::span<const double> weights) {
    std::vector<double> out(weights.begin(), weights.end());
    for (double& w : out) {
        if (w < 0.0) throw std::invalid_argument("involution_transform: weights must be >= 0");
        if (w > 0.0) w = 1.0 / w;
    }
    return out;
}

IterationTrace iterate_operator(const Curve& initial, const WeightModel& model, OperatorKind kind,
                                int n_iter, double clamp_threshold) {
    if (n_iter < 1) throw std::invalid_argument("iterate_operator: n_iter must be >= 1");
    IterationTrace trace{{}, {}, {}, initial};
    int consecutive = 0;
    for (int i = 0; i < n_iter; ++i) {
        auto next = apply_operator(trace.last, model, kind, clamp_threshold);
        ResidualReport rep;
        fill_residuals(trace.last, next.curve, rep);
        trace.residuals.push_back(rep.sup_norm);
        trace.clamp_fractions.push_back(next.clamp_fraction);
        if (next.warning) {
            ++consecutive;
            trace.warnings.push_back("iteration " + std::to_string(i + 1) + ": " + *next.warning);
            if (consecutive == 3)
                trace.warnings.push_back("clamp warnings on 3 consecutive iterations; endpoint values dominate the iterates");
        } else {
            consecutive = 0;
        }
        trace.last = std::move(next.curve);
    }
    return trace;
}

}  // namespace sfpe
