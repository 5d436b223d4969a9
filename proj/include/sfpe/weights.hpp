#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace sfpe {

/// One outcome of the weight vector T together with its probability.
struct Atom {
    double probability = 0.0;
    std::vector<double> weights;
};

struct FiniteAtoms {
    std::vector<Atom> atoms;
};

/// T_i = exp(-B_i), B_i i.i.d. Bernoulli(theta), i = 1..n.
struct BernoulliCascade {
    int n = 2;
    double theta = 0.5;
};

struct Deterministic {
    std::vector<double> weights;
};

/// Distribution of the weight vector T. Only laws with finitely many
/// outcomes are representable; all exact operations enumerate them.
class WeightModel {
  public:
    using Variant = std::variant<FiniteAtoms, BernoulliCascade, Deterministic>;

    static WeightModel finite_atoms(std::vector<Atom> atoms);
    static WeightModel cascade(int n, double theta);
    static WeightModel deterministic(std::vector<double> weights);

    const Variant& variant() const noexcept { return variant_; }

    /// Outcomes merged up to permutation of coordinates: weights sorted in
    /// decreasing order, zeros dropped, equal vectors pooled. Every exact
    /// operation in the library is permutation invariant and runs on these.
    const std::vector<Atom>& atoms() const noexcept { return merged_; }

    /// Raw outcome list; 2^n atoms for a cascade (n <= 20).
    std::vector<Atom> enumerate_atoms() const;

    /// Length of a sampled weight vector (including zero weights).
    std::size_t width() const noexcept { return width_; }

    bool is_cascade() const noexcept { return std::holds_alternative<BernoulliCascade>(variant_); }
    std::string describe() const;

    /// Appends (child index, -log T_i) for every positive T_i of the
    /// realization determined by `key`. sample_T uses the same draws.
    void sample_log_weights(std::uint64_t key,
                            std::vector<std::pair<std::uint32_t, double>>& out) const;

  private:
    explicit WeightModel(Variant v);

    Variant variant_;
    std::vector<Atom> merged_;
    std::vector<double> cumulative_;             // FiniteAtoms sampling table
    std::vector<std::vector<double>> neg_logs_;  // -log of raw atom weights (inf for 0)
    std::size_t width_ = 0;
};

/// One realization of T; a deterministic function of (model, seed).
std::vector<double> sample_T(const WeightModel& model, std::uint64_t seed);

/// m(beta) = E sum_i T_i^beta over positive weights; m(0) = E N.
double moment_m(const WeightModel& model, double beta);

struct ExponentResult {
    std::optional<double> alpha;
    std::string reason;  // empty when alpha is set
};

/// Minimal root of m(alpha) = 1 in [lo, hi], located by a 1024-point
/// geometric scan and refined by bisection to absolute tolerance `tol`.
ExponentResult characteristic_exponent(const WeightModel& model, double lo = 0.0,
                                       double hi = 50.0, double tol = 1e-12);

enum class LatticeKind { continuous, geometric, trivial };

struct LatticeInfo {
    LatticeKind kind = LatticeKind::continuous;
    double r = 0.0;     // generator of r^Z, geometric only
    double span = 0.0;  // log r
};

/// Largest lattice span d (at most 1024 subdivisions of the smallest nonzero
/// |log T_i|) such that every |log T_i| is an integer multiple of d within
/// relative tolerance 1e-9.
LatticeInfo detect_lattice(const WeightModel& model);

struct AssumptionReport {
    bool a1 = false;  // 0 < P(N > 1) <= P(N >= 1) = 1
    bool a2 = false;  // P(sup T_i < 1) > 0
    bool a3 = false;  // E N > 1
    bool a4 = false;  // P(T in {0,1}^inf) < 1
    bool degenerate_sup_one = false;  // sup T_i = 1 a.s.
    bool sup_ge_one = false;          // sup T_i >= 1 a.s. and P(sup T_i > 1) > 0
};

AssumptionReport check_assumptions(const WeightModel& model);

/// P(N = k), k = 0..max, for N the number of positive weights.
std::vector<double> positive_count_distribution(const WeightModel& model);

/// P(#{i : T_i = 1} = k); the offspring law of the unit-weight subtree.
std::vector<double> unit_count_distribution(const WeightModel& model);

/// Minimal fixed point in [0,1] of f(s) = sum_j p_j s^j, by iterating
/// s <- f(s) from 0 until successive values differ by less than 1e-14.
double extinction_probability(std::span<const double> offspring);

}  // namespace sfpe
