#include "sfpe/weights.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "sfpe/numeric.hpp"

namespace sfpe {

namespace {

constexpr double kProbabilityTolerance = 1e-12;

void validate_weights(const std::vector<double>& w, const char* what) {
    if (w.empty()) throw std::invalid_argument(std::string(what) + ": empty weight vector");
    bool positive = false;
    for (double x : w) {
        if (!std::isfinite(x) || x < 0.0)
            throw std::invalid_argument(std::string(what) + ": weights must be finite and >= 0");
        positive = positive || x > 0.0;
    }
    if (!positive)
        throw std::invalid_argument(std::string(what) +
                                    ": every outcome needs at least one positive weight");
}

std::vector<double> canonical(const std::vector<double>& w) {
    std::vector<double> out;
    out.reserve(w.size());
    for (double x : w)
        if (x > 0.0) out.push_back(x);
    std::sort(out.begin(), out.end(), std::greater<>());
    return out;
}

std::vector<Atom> merge(const std::vector<Atom>& raw) {
    std::map<std::vector<double>, double> pooled;
    for (const auto& a : raw) {
        if (a.probability <= 0.0) continue;
        pooled[canonical(a.weights)] += a.probability;
    }
    std::vector<Atom> out;
    out.reserve(pooled.size());
    for (auto& [w, p] : pooled) out.push_back({p, w});
    return out;
}

double binomial_pmf(int n, int k, double p) {
    double c = 1.0;
    for (int j = 1; j <= k; ++j) c = c * static_cast<double>(n - k + j) / static_cast<double>(j);
    return c * std::pow(p, k) * std::pow(1.0 - p, n - k);
}

}  // namespace

WeightModel::WeightModel(Variant v) : variant_(std::move(v)) {
    if (auto* fa = std::get_if<FiniteAtoms>(&variant_)) {
        double total = 0.0;
        for (const auto& a : fa->atoms) {
            if (!(a.probability >= 0.0) || !std::isfinite(a.probability))
                throw std::invalid_argument("finite atoms: probabilities must be >= 0");
            if (a.probability > 0.0) validate_weights(a.weights, "finite atoms");
            total += a.probability;
            width_ = std::max(width_, a.weights.size());
        }
        if (fa->atoms.empty() || std::fabs(total - 1.0) > kProbabilityTolerance)
            throw std::invalid_argument("finite atoms: probabilities must sum to 1");
        double acc = 0.0;
        for (const auto& a : fa->atoms) {
            acc += a.probability;
            cumulative_.push_back(acc);
            std::vector<double> nl;
            nl.reserve(a.weights.size());
            for (double x : a.weights)
                nl.push_back(x > 0.0 ? -std::log(x) : std::numeric_limits<double>::infinity());
            neg_logs_.push_back(std::move(nl));
        }
        merged_ = merge(fa->atoms);
    } else if (auto* bc = std::get_if<BernoulliCascade>(&variant_)) {
        if (bc->n < 2) throw std::invalid_argument("cascade: N must be at least 2");
        if (!(bc->theta >= 0.0 && bc->theta <= 1.0))
            throw std::invalid_argument("cascade: theta must lie in [0,1]");
        width_ = static_cast<std::size_t>(bc->n);
        const double down = std::exp(-1.0);
        for (int k = 0; k <= bc->n; ++k) {
            const double p = binomial_pmf(bc->n, k, bc->theta);
            if (p <= 0.0) continue;
            std::vector<double> w(static_cast<std::size_t>(bc->n - k), 1.0);
            w.insert(w.end(), static_cast<std::size_t>(k), down);
            merged_.push_back({p, std::move(w)});
        }
    } else {
        auto& d = std::get<Deterministic>(variant_);
        validate_weights(d.weights, "deterministic");
        width_ = d.weights.size();
        merged_ = merge({Atom{1.0, d.weights}});
        std::vector<double> nl;
        for (double x : d.weights)
            nl.push_back(x > 0.0 ? -std::log(x) : std::numeric_limits<double>::infinity());
        neg_logs_.push_back(std::move(nl));
    }
}

WeightModel WeightModel::finite_atoms(std::vector<Atom> atoms) {
    return WeightModel(FiniteAtoms{std::move(atoms)});
}

WeightModel WeightModel::cascade(int n, double theta) {
    return WeightModel(BernoulliCascade{n, theta});
}

WeightModel WeightModel::deterministic(std::vector<double> weights) {
    return WeightModel(Deterministic{std::move(weights)});
}

std::vector<Atom> WeightModel::enumerate_atoms() const {
    if (auto* fa = std::get_if<FiniteAtoms>(&variant_)) return fa->atoms;
    if (auto* d = std::get_if<Deterministic>(&variant_)) return {Atom{1.0, d->weights}};
    const auto& bc = std::get<BernoulliCascade>(variant_);
    if (bc.n > 20) throw std::invalid_argument("enumerate_atoms: cascade with N > 20");
    const double down = std::exp(-1.0);
    const std::size_t count = std::size_t{1} << bc.n;
    std::vector<Atom> out;
    out.reserve(count);
    for (std::size_t mask = 0; mask < count; ++mask) {
        Atom a;
        a.probability = 1.0;
        a.weights.resize(static_cast<std::size_t>(bc.n));
        for (int i = 0; i < bc.n; ++i) {
            const bool b = (mask >> i) & 1U;
            a.weights[static_cast<std::size_t>(i)] = b ? down : 1.0;
            a.probability *= b ? bc.theta : 1.0 - bc.theta;
        }
        out.push_back(std::move(a));
    }
    return out;
}

std::string WeightModel::describe() const {
    std::ostringstream os;
    os.precision(17);
    if (auto* bc = std::get_if<BernoulliCascade>(&variant_)) {
        os << "cascade(N=" << bc->n << ", theta=" << bc->theta << ")";
    } else if (auto* d = std::get_if<Deterministic>(&variant_)) {
        os << "deterministic(";
        for (std::size_t i = 0; i < d->weights.size(); ++i) os << (i ? ", " : "") << d->weights[i];
        os << ")";
    } else {
        os << "finite_atoms(" << std::get<FiniteAtoms>(variant_).atoms.size() << " outcomes)";
    }
    return os.str();
}

void WeightModel::sample_log_weights(std::uint64_t key,
                                     std::vector<std::pair<std::uint32_t, double>>& out) const {
    if (auto* bc = std::get_if<BernoulliCascade>(&variant_)) {
        SplitMix64 rng(key);
        for (int i = 0; i < bc->n; ++i) {
            const bool b = rng.uniform() < bc->theta;
            out.emplace_back(static_cast<std::uint32_t>(i), b ? 1.0 : 0.0);
        }
        return;
    }
    std::size_t idx = 0;
    if (std::holds_alternative<FiniteAtoms>(variant_)) {
        SplitMix64 rng(key);
        const double u = rng.uniform();
        idx = static_cast<std::size_t>(
            std::upper_bound(cumulative_.begin(), cumulative_.end(), u) - cumulative_.begin());
        if (idx >= cumulative_.size()) {
            const auto& atoms = std::get<FiniteAtoms>(variant_).atoms;
            idx = atoms.size() - 1;
            while (idx > 0 && atoms[idx].probability <= 0.0) --idx;
        }
    }
    const auto& nl = neg_logs_[idx];
    for (std::size_t i = 0; i < nl.size(); ++i)
        if (std::isfinite(nl[i])) out.emplace_back(static_cast<std::uint32_t>(i), nl[i]);
}

std::vector<double> sample_T(const WeightModel& model, std::uint64_t seed) {
    if (auto* d = std::get_if<Deterministic>(&model.variant())) return d->weights;
    if (auto* fa = std::get_if<FiniteAtoms>(&model.variant())) {
        // same single draw as sample_log_weights
        SplitMix64 rng(seed);
        const double u = rng.uniform();
        double acc = 0.0;
        const Atom* last = nullptr;
        for (const auto& a : fa->atoms) {
            if (a.probability <= 0.0) continue;
            acc += a.probability;
            last = &a;
            if (u < acc) return a.weights;
        }
        return last->weights;
    }
    const auto& bc = std::get<BernoulliCascade>(model.variant());
    std::vector<std::pair<std::uint32_t, double>> tmp;
    model.sample_log_weights(seed, tmp);
    std::vector<double> out(static_cast<std::size_t>(bc.n));
    for (auto [i, s] : tmp) out[i] = std::exp(-s);
    return out;
}

double moment_m(const WeightModel& model, double beta) {
    if (!(beta >= 0.0)) throw std::invalid_argument("moment_m: beta must be >= 0");
    double total = 0.0;
    for (const auto& a : model.atoms()) {
        double s = 0.0;
        for (double w : a.weights) s += beta == 0.0 ? 1.0 : std::pow(w, beta);
        total += a.probability * s;
    }
    return total;
}

ExponentResult characteristic_exponent(const WeightModel& model, double lo, double hi,
                                       double tol) {
    if (!(lo >= 0.0) || !(hi > lo) || !std::isfinite(hi))
        throw std::invalid_argument("characteristic_exponent: need 0 <= lo < hi");
    if (!(tol > 0.0)) throw std::invalid_argument("characteristic_exponent: tol must be > 0");

    // m(beta) - 1 with the unit weights summed separately: they contribute a
    // beta-independent constant, and 1 + tiny must not round to a root.
    double unit_mass = 0.0;
    std::vector<std::pair<double, double>> rest;  // (probability, weight)
    for (const auto& a : model.atoms())
        for (double w : a.weights) {
            if (w == 1.0)
                unit_mass += a.probability;
            else if (w > 0.0)
                rest.emplace_back(a.probability, w);
        }
    const double offset = unit_mass - 1.0;
    auto f = [&](double b) {
        double v = 0.0;
        for (auto [p, w] : rest) v += p * std::pow(w, b);
        if (!std::isfinite(v))
            throw std::domain_error("characteristic_exponent: m is not finite on the interval");
        return offset + v;
    };

    constexpr int kScan = 1024;
    std::vector<double> xs;
    xs.reserve(kScan + 1);
    xs.push_back(lo);
    const double start = lo > 0.0 ? lo : std::min(1e-6, hi * 1e-6);
    const double ratio = std::pow(hi / start, 1.0 / (kScan - 1));
    for (int i = 0; i < kScan; ++i) {
        const double x = i == kScan - 1 ? hi : start * std::pow(ratio, i);
        if (x > xs.back()) xs.push_back(x);
    }
    std::vector<double> fs(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) fs[i] = f(xs[i]);

    const bool any_above = std::any_of(fs.begin(), fs.end(), [](double v) { return v > 0.0; });
    const bool any_below = std::any_of(fs.begin(), fs.end(), [](double v) { return v < 0.0; });
    for (std::size_t i = 1; i < xs.size(); ++i) {
        const bool a_above = fs[i - 1] > 0.0;
        if (a_above == (fs[i] > 0.0)) continue;
        // A crossing needs m strictly below 1 on the far side (downward) or
        // before it (upward); otherwise m only touches 1 in rounding.
        const bool genuine = a_above ? std::any_of(fs.begin() + static_cast<std::ptrdiff_t>(i), fs.end(),
                                                   [](double v) { return v < 0.0; })
                                     : std::any_of(fs.begin(), fs.begin() + static_cast<std::ptrdiff_t>(i),
                                                   [](double v) { return v < 0.0; });
        if (!genuine) continue;
        if (fs[i - 1] == 0.0 && i - 1 > 0) return {xs[i - 1], {}};
        double a = xs[i - 1], b = xs[i];
        while (b - a > tol) {
            const double mid = 0.5 * (a + b);
            const double fm = f(mid);
            if (fm == 0.0) return {mid, {}};
            ((fm > 0.0) == a_above ? a : b) = mid;
        }
        return {0.5 * (a + b), {}};
    }
    if (any_above && !any_below) return {std::nullopt, "m(beta) > 1 on the whole search interval"};
    if (any_below && !any_above) return {std::nullopt, "m(beta) < 1 on the whole search interval"};
    return {std::nullopt, "m(beta) never crosses 1 on the search interval"};
}

LatticeInfo detect_lattice(const WeightModel& model) {
    std::vector<double> logs;
    for (const auto& a : model.atoms())
        for (double w : a.weights) {
            const double l = std::fabs(std::log(w));
            if (l > 0.0) logs.push_back(l);
        }
    if (logs.empty()) return {LatticeKind::trivial, 0.0, 0.0};
    std::sort(logs.begin(), logs.end());
    logs.erase(std::unique(logs.begin(), logs.end()), logs.end());
    const double smallest = logs.front();
    constexpr int kMaxSubdivision = 1024;
    constexpr double kRelTol = 1e-9;
    for (int k = 1; k <= kMaxSubdivision; ++k) {
        const double d = smallest / k;
        const bool ok = std::all_of(logs.begin(), logs.end(), [&](double x) {
            const double q = x / d;
            return std::fabs(q - std::round(q)) * d <= kRelTol * x;
        });
        if (ok) return {LatticeKind::geometric, std::exp(d), d};
    }
    return {LatticeKind::continuous, 0.0, 0.0};
}

AssumptionReport check_assumptions(const WeightModel& model) {
    double p_many = 0.0, p_sup_below = 0.0, p_sup_above = 0.0, p_sup_one = 0.0, p_nontrivial = 0.0;
    double mean_n = 0.0;
    for (const auto& a : model.atoms()) {
        const double sup = a.weights.front();
        const auto n = a.weights.size();
        mean_n += a.probability * static_cast<double>(n);
        if (n > 1) p_many += a.probability;
        if (sup < 1.0) p_sup_below += a.probability;
        if (sup > 1.0) p_sup_above += a.probability;
        if (sup == 1.0) p_sup_one += a.probability;
        if (std::any_of(a.weights.begin(), a.weights.end(), [](double w) { return w != 1.0; }))
            p_nontrivial += a.probability;
    }
    AssumptionReport r;
    r.a1 = p_many > 0.0;  // N >= 1 a.s. is a model invariant
    r.a2 = p_sup_below > 0.0;
    r.a3 = mean_n > 1.0;
    r.a4 = p_nontrivial > 0.0;
    r.degenerate_sup_one = p_sup_below == 0.0 && p_sup_above == 0.0 && p_sup_one > 0.0;
    r.sup_ge_one = p_sup_below == 0.0 && p_sup_above > 0.0;
    return r;
}

std::vector<double> positive_count_distribution(const WeightModel& model) {
    std::vector<double> dist;
    for (const auto& a : model.atoms()) {
        const auto n = a.weights.size();
        if (dist.size() <= n) dist.resize(n + 1, 0.0);
        dist[n] += a.probability;
    }
    return dist;
}

std::vector<double> unit_count_distribution(const WeightModel& model) {
    std::vector<double> dist(1, 0.0);
    for (const auto& a : model.atoms()) {
        const auto n = static_cast<std::size_t>(std::count(a.weights.begin(), a.weights.end(), 1.0));
        if (dist.size() <= n) dist.resize(n + 1, 0.0);
        dist[n] += a.probability;
    }
    return dist;
}

double extinction_probability(std::span<const double> offspring) {
    if (offspring.empty()) throw std::invalid_argument("extinction_probability: empty law");
    double total = 0.0;
    for (double p : offspring) {
        if (!(p >= 0.0)) throw std::invalid_argument("extinction_probability: negative probability");
        total += p;
    }
    if (std::fabs(total - 1.0) > kProbabilityTolerance)
        throw std::invalid_argument("extinction_probability: probabilities must sum to 1");

    auto pgf = [&](double s) {
        double v = 0.0;
        for (auto it = offspring.rbegin(); it != offspring.rend(); ++it) v = v * s + *it;
        return v;
    };
    constexpr long kMaxIter = 200'000'000;
    double s = 0.0;
    for (long i = 0; i < kMaxIter; ++i) {
        const double next = std::min(1.0, pgf(s));
        if (std::fabs(next - s) < 1e-14) return next;
        s = next;
    }
    return s;
}

}  // namespace sfpe
