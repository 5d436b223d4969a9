#include "sfpe/wbp.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <sstream>

namespace sfpe {

namespace {

struct Generation {
    std::vector<double> s;
    std::vector<std::uint64_t> key;
    std::vector<std::uint32_t> parent;

    void clear() {
        s.clear();
        key.clear();
        parent.clear();
    }
};

class Sweeper {
  public:
    Sweeper(const WeightModel& model, std::size_t node_cap) : model_(model), cap_(node_cap) {}

    /// Calls visit(n, generation) for n = 0..depth.
    template <class Visit>
    void run(int depth, std::uint64_t root_key, Visit&& visit) {
        cur_.clear();
        cur_.s.push_back(0.0);
        cur_.key.push_back(root_key);
        cur_.parent.push_back(0);
        std::size_t count = 1;
        visit(0, cur_);
        for (int n = 1; n <= depth; ++n) {
            next_.clear();
            for (std::size_t j = 0; j < cur_.s.size(); ++j) {
                children_.clear();
                model_.sample_log_weights(cur_.key[j], children_);
                for (auto [i, ls] : children_) {
                    next_.s.push_back(cur_.s[j] + ls);
                    next_.key.push_back(child_key(cur_.key[j], i));
                    next_.parent.push_back(static_cast<std::uint32_t>(j));
                }
            }
            count += next_.s.size();
            if (count > cap_) throw NodeCapExceeded(cap_, n);
            std::swap(cur_, next_);
            visit(n, cur_);
        }
    }

  private:
    const WeightModel& model_;
    std::size_t cap_;
    Generation cur_, next_;
    std::vector<std::pair<std::uint32_t, double>> children_;
};

double generation_w(std::span<const double> s, double alpha, std::vector<double>& scratch) {
    scratch.resize(s.size());
    for (std::size_t j = 0; j < s.size(); ++j) scratch[j] = std::exp(-alpha * s[j]);
    return pairwise_sum(scratch);
}

double generation_r(std::span<const double> s) {
    if (s.empty()) return 0.0;
    return std::exp(-*std::min_element(s.begin(), s.end()));
}

bool within(double x, double a, double b) {
    constexpr double kEdge = 1e-9;
    return x >= a - kEdge * std::max(1.0, std::fabs(a)) && x <= b + kEdge * std::max(1.0, std::fabs(b));
}

IncrementDistribution merged(std::vector<IncrementAtom> atoms) {
    std::sort(atoms.begin(), atoms.end(),
              [](const IncrementAtom& x, const IncrementAtom& y) { return x.location < y.location; });
    IncrementDistribution out;
    for (const auto& a : atoms) {
        if (!out.atoms.empty() &&
            std::fabs(out.atoms.back().location - a.location) <=
                1e-12 * std::max(1.0, std::fabs(a.location))) {
            out.atoms.back().mass += a.mass;
        } else {
            out.atoms.push_back(a);
        }
    }
    return out;
}

IncrementDistribution convolve(const IncrementDistribution& x, const IncrementDistribution& y) {
    std::vector<IncrementAtom> raw;
    raw.reserve(x.atoms.size() * y.atoms.size());
    for (const auto& a : x.atoms)
        for (const auto& b : y.atoms) raw.push_back({a.location + b.location, a.mass * b.mass});
    return merged(std::move(raw));
}

}  // namespace

NodeCapExceeded::NodeCapExceeded(std::size_t cap, int generation)
    : std::runtime_error("node_cap exceeded: more than " + std::to_string(cap) +
                         " vertices by generation " + std::to_string(generation)),
      generation_(generation) {}

WeightedTree simulate_tree(const WeightModel& model, int depth, std::uint64_t seed,
                           std::size_t node_cap) {
    if (depth < 0) throw std::invalid_argument("simulate_tree: depth must be >= 0");
    if (node_cap < 1) throw std::invalid_argument("simulate_tree: node_cap must be >= 1");
    WeightedTree tree;
    tree.depth = depth;
    tree.seed = seed;
    Sweeper sweeper(model, node_cap);
    sweeper.run(depth, seed, [&](int, const Generation& g) {
        tree.log_weights.push_back(g.s);
        tree.parents.push_back(g.parent);
        tree.keys.push_back(g.key);
        tree.node_count += g.s.size();
    });
    return tree;
}

MartingaleTrace martingale_trace(const WeightedTree& tree, double alpha) {
    if (!(alpha >= 0.0)) throw std::invalid_argument("martingale_trace: alpha must be >= 0");
    MartingaleTrace out{alpha, {}};
    std::vector<double> scratch;
    for (const auto& gen : tree.log_weights) out.values.push_back(generation_w(gen, alpha, scratch));
    return out;
}

std::vector<double> sup_weight_trace(const WeightedTree& tree) {
    std::vector<double> out;
    for (const auto& gen : tree.log_weights) out.push_back(generation_r(gen));
    return out;
}

std::vector<double> ReplicateTraces::w_column(int n) const {
    std::vector<double> col(replicates);
    for (std::size_t i = 0; i < replicates; ++i) col[i] = W(i, n);
    return col;
}

std::vector<double> ReplicateTraces::r_column(int n) const {
    std::vector<double> col(replicates);
    for (std::size_t i = 0; i < replicates; ++i) col[i] = R(i, n);
    return col;
}

ReplicateTraces simulate_replicates(const WeightModel& model, double alpha, int depth,
                                    std::size_t replicates, std::uint64_t seed,
                                    std::size_t node_cap, unsigned threads) {
    if (depth < 0) throw std::invalid_argument("simulate_replicates: depth must be >= 0");
    if (replicates < 1) throw std::invalid_argument("simulate_replicates: need replicates >= 1");
    if (!(alpha >= 0.0)) throw std::invalid_argument("simulate_replicates: alpha must be >= 0");
    ReplicateTraces out;
    out.alpha = alpha;
    out.depth = depth;
    out.replicates = replicates;
    out.seed = seed;
    out.w.assign(replicates * out.stride(), 0.0);
    out.r.assign(replicates * out.stride(), 0.0);

    const unsigned workers = std::max(1u, threads);
    std::vector<std::vector<double>> scratch(workers);
    std::vector<std::unique_ptr<Sweeper>> sweepers;
    for (unsigned w = 0; w < workers; ++w) sweepers.push_back(std::make_unique<Sweeper>(model, node_cap));

    parallel_for(replicates, workers, [&](std::size_t rep, unsigned worker) {
        auto& sw = *sweepers[worker];
        auto& buf = scratch[worker];
        const std::size_t row = rep * out.stride();
        sw.run(depth, replicate_key(seed, rep), [&](int n, const Generation& g) {
            out.w[row + static_cast<std::size_t>(n)] = generation_w(g.s, alpha, buf);
            out.r[row + static_cast<std::size_t>(n)] = generation_r(g.s);
        });
    });
    return out;
}

void write_trace_csv(std::ostream& os, const ReplicateTraces& traces) {
    os << "replicate,n,W_n_alpha,R_n\n";
    for (std::size_t rep = 0; rep < traces.replicates; ++rep)
        for (int n = 0; n <= traces.depth; ++n)
            os << rep << ',' << n << ',' << format_number(traces.W(rep, n)) << ','
               << format_number(traces.R(rep, n)) << '\n';
}

EmpiricalLaplace::EmpiricalLaplace(double alpha, int depth, std::vector<double> samples)
    : alpha_(alpha), depth_(depth), samples_(std::move(samples)) {
    if (samples_.empty()) throw std::invalid_argument("EmpiricalLaplace: no samples");
    for (double w : samples_)
        if (!(w >= 0.0) || !std::isfinite(w))
            throw std::invalid_argument("EmpiricalLaplace: samples must be finite and >= 0");
}

Estimate EmpiricalLaplace::operator()(double x) const {
    if (!(x >= 0.0)) throw std::invalid_argument("EmpiricalLaplace: argument must be >= 0");
    if (x == 0.0) return {1.0, 0.0};
    std::vector<double> v(samples_.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::exp(-x * samples_[i]);
    return mean_estimate(v);
}

Estimate EmpiricalLaplace::tail(double x) const {
    if (!(x >= 0.0)) throw std::invalid_argument("EmpiricalLaplace: argument must be >= 0");
    if (x == 0.0) return {0.0, 0.0};
    std::vector<double> v(samples_.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = -std::expm1(-x * samples_[i]);
    return mean_estimate(v);
}

Estimate EmpiricalLaplace::slope_at_zero() const {
    const auto m = mean_estimate(samples_);
    return {-m.value, m.standard_error};
}

double EmpiricalLaplace::inverse(double y) const {
    if (!(y > 0.0 && y < 1.0)) throw std::invalid_argument("EmpiricalLaplace::inverse: y must lie in (0,1)");
    auto phi = [this](double x) { return (*this)(x).value; };
    double hi = 1.0;
    int guard = 0;
    while (phi(hi) > y) {
        hi *= 2.0;
        if (++guard > 1100)
            throw std::domain_error("EmpiricalLaplace::inverse: value below the atom at zero");
    }
    return bisect_boundary(0.0, hi, [&](double x) { return phi(x) <= y; }, 200);
}

WLimitSample sample_W_limit(const WeightModel& model, double alpha, int depth,
                            std::size_t replicates, std::uint64_t seed, std::size_t node_cap,
                            unsigned threads) {
    const double m = moment_m(model, alpha);
    auto traces = simulate_replicates(model, alpha, depth, replicates, seed, node_cap, threads);
    std::optional<std::string> warning;
    if (std::fabs(m - 1.0) > 1e-9) {
        std::ostringstream os;
        os.precision(12);
        os << "m(alpha) = " << m << " != 1";
        if (m < 1.0) os << "; W_n^(alpha) collapses toward 0 as depth grows";
        warning = os.str();
    }
    auto full = traces.w_column(depth);
    auto half = traces.w_column(depth / 2);
    const auto mf = mean_estimate(full);
    const auto mh = mean_estimate(half);
    return WLimitSample{EmpiricalLaplace(alpha, depth, std::move(full)), m, warning, mf, mh};
}

double IncrementDistribution::total_mass() const {
    std::vector<double> v;
    for (const auto& a : atoms) v.push_back(a.mass);
    return pairwise_sum(v);
}

double IncrementDistribution::drift() const {
    std::vector<double> v;
    for (const auto& a : atoms) v.push_back(a.mass * a.location);
    return pairwise_sum(v);
}

double IncrementDistribution::mass_in(double a, double b) const {
    double s = 0.0;
    for (const auto& at : atoms)
        if (within(at.location, a, b)) s += at.mass;
    return s;
}

IncrementDistribution increment_distribution(const WeightModel& model, double alpha) {
    if (!(alpha >= 0.0)) throw std::invalid_argument("increment_distribution: alpha must be >= 0");
    std::vector<IncrementAtom> raw;
    for (const auto& a : model.atoms())
        for (double w : a.weights) raw.push_back({-std::log(w), a.probability * std::pow(w, alpha)});
    return merged(std::move(raw));
}

IncrementDistribution convolution_power(const IncrementDistribution& d, int n) {
    if (n < 0) throw std::invalid_argument("convolution_power: n must be >= 0");
    IncrementDistribution cur{{{0.0, 1.0}}};
    for (int k = 0; k < n; ++k) cur = convolve(cur, d);
    return cur;
}

std::string to_string(BigginsVerdict v) {
    switch (v) {
        case BigginsVerdict::holds: return "holds";
        case BigginsVerdict::fails: return "fails";
        case BigginsVerdict::boundary: return "boundary (out of scope)";
    }
    return "unknown";
}

BigginsReport biggins_check(const WeightModel& model, double alpha,
                            std::span<const double> w1_samples, double tolerance) {
    const double m = moment_m(model, alpha);
    if (std::fabs(m - 1.0) > 1e-9)
        throw std::invalid_argument("biggins_check: requires m(alpha) = 1, got m(alpha) = " +
                                    format_number(m));
    const auto inc = increment_distribution(model, alpha);
    BigginsReport rep;
    rep.drift = inc.drift();

    std::vector<std::pair<double, double>> law;  // (value of W_1, probability)
    if (w1_samples.empty()) {
        for (const auto& a : model.atoms()) {
            double u = 0.0;
            for (double w : a.weights) u += std::pow(w, alpha);
            law.emplace_back(u, a.probability);
        }
    } else {
        const double p = 1.0 / static_cast<double>(w1_samples.size());
        for (double u : w1_samples) law.emplace_back(u, p);
    }
    double integral = 0.0;
    for (auto [u, p] : law) {
        if (!(u > 1.0)) continue;
        const double lu = std::log(u);
        double denom = 0.0;
        for (const auto& at : inc.atoms) denom += at.mass * std::min(std::max(at.location, 0.0), lu);
        integral += denom > 0.0 ? p * u * lu / denom : std::numeric_limits<double>::infinity();
    }
    rep.integral_estimate = integral;

    if (rep.drift > tolerance) {
        rep.diverges_to_infinity = true;
        rep.verdict = std::isfinite(integral) ? BigginsVerdict::holds : BigginsVerdict::fails;
    } else if (std::fabs(rep.drift) <= tolerance) {
        rep.verdict = BigginsVerdict::boundary;
    } else {
        rep.verdict = BigginsVerdict::fails;
    }
    return rep;
}

RenewalCheck renewal_measure_check(const WeightModel& model, double alpha, double a, double b,
                                   int depth, std::size_t replicates, std::uint64_t seed,
                                   std::size_t node_cap, unsigned threads) {
    if (!(a <= b)) throw std::invalid_argument("renewal_measure_check: need a <= b");
    if (replicates < 1) throw std::invalid_argument("renewal_measure_check: need replicates >= 1");

    const auto inc = increment_distribution(model, alpha);
    double exact = 0.0;
    IncrementDistribution power{{{0.0, 1.0}}};
    for (int n = 0; n <= depth; ++n) {
        exact += power.mass_in(a, b);
        if (n < depth) power = convolve(power, inc);
    }

    std::vector<double> per_tree(replicates, 0.0);
    const unsigned workers = std::max(1u, threads);
    std::vector<std::unique_ptr<Sweeper>> sweepers;
    for (unsigned w = 0; w < workers; ++w) sweepers.push_back(std::make_unique<Sweeper>(model, node_cap));
    parallel_for(replicates, workers, [&](std::size_t rep, unsigned worker) {
        auto& sw = *sweepers[worker];
        std::vector<double> terms;
        sw.run(depth, replicate_key(seed, rep), [&](int, const Generation& g) {
            for (double s : g.s)
                if (within(s, a, b)) terms.push_back(std::exp(-alpha * s));
        });
        per_tree[rep] = pairwise_sum(terms);
    });

    RenewalCheck out;
    out.empirical = mean_estimate(per_tree);
    out.exact = exact;
    const double diff = out.empirical.value - exact;
    if (out.empirical.standard_error > 0.0)
        out.z_score = diff / out.empirical.standard_error;
    else
        out.z_score = std::fabs(diff) <= 1e-12 * std::max(1.0, std::fabs(exact))
                          ? 0.0
                          : std::copysign(std::numeric_limits<double>::infinity(), diff);
    return out;
}

}  // namespace sfpe
