#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sfpe/numeric.hpp"
#include "sfpe/weights.hpp"

namespace sfpe {

inline constexpr std::size_t kDefaultNodeCap = 10'000'000;

/// Realized branch weights of one weighted branching process, stored
/// generation-major. Only vertices with L(v) > 0 are kept.
struct WeightedTree {
    /// log_weights[n][j] = S(v) = -log L(v) of the j-th stored vertex in generation n.
    std::vector<std::vector<double>> log_weights;
    /// parents[n][j] = index of the parent in generation n - 1 (parents[0] = {0}).
    std::vector<std::vector<std::uint32_t>> parents;
    /// Per-vertex seed keys; the subtree rooted at a vertex is the tree
    /// simulate_tree produces from that key.
    std::vector<std::vector<std::uint64_t>> keys;
    int depth = 0;
    std::uint64_t seed = 0;
    std::size_t node_count = 0;
};

class NodeCapExceeded : public std::runtime_error {
  public:
    NodeCapExceeded(std::size_t cap, int generation);
    int generation() const noexcept { return generation_; }

  private:
    int generation_;
};

WeightedTree simulate_tree(const WeightModel& model, int depth, std::uint64_t seed,
                           std::size_t node_cap = kDefaultNodeCap);

struct MartingaleTrace {
    double alpha = 0.0;
    std::vector<double> values;  // W_0 .. W_depth
};

/// W_n^(alpha) = sum over generation n of exp(-alpha S(v)).
MartingaleTrace martingale_trace(const WeightedTree& tree, double alpha);

/// R_n = exp(-min S(v)) over generation n; 0 once the tree is extinct.
std::vector<double> sup_weight_trace(const WeightedTree& tree);

/// W_n^(alpha) and R_n for many independent trees. Row r holds replicate r;
/// contents do not depend on the worker count.
struct ReplicateTraces {
    double alpha = 0.0;
    int depth = 0;
    std::size_t replicates = 0;
    std::uint64_t seed = 0;
    std::vector<double> w;  // replicates x (depth + 1)
    std::vector<double> r;  // replicates x (depth + 1)

    double W(std::size_t rep, int n) const { return w[rep * stride() + static_cast<std::size_t>(n)]; }
    double R(std::size_t rep, int n) const { return r[rep * stride() + static_cast<std::size_t>(n)]; }
    std::size_t stride() const { return static_cast<std::size_t>(depth) + 1; }

    /// Generation-n column of W (or R).
    std::vector<double> w_column(int n) const;
    std::vector<double> r_column(int n) const;
};

ReplicateTraces simulate_replicates(const WeightModel& model, double alpha, int depth,
                                    std::size_t replicates, std::uint64_t seed,
                                    std::size_t node_cap = kDefaultNodeCap, unsigned threads = 1);

/// Rows (replicate, n, W_n_alpha, R_n) with a header; replicate-major order.
void write_trace_csv(std::ostream& os, const ReplicateTraces& traces);

/// Monte Carlo Laplace transform of W^(alpha), using W_depth^(alpha) as proxy.
class EmpiricalLaplace {
  public:
    EmpiricalLaplace(double alpha, int depth, std::vector<double> samples);

    double alpha() const noexcept { return alpha_; }
    int depth() const noexcept { return depth_; }
    std::span<const double> samples() const noexcept { return samples_; }
    std::size_t size() const noexcept { return samples_.size(); }

    /// phi(x) = mean exp(-x W) with its standard error.
    Estimate operator()(double x) const;
    /// 1 - phi(x), computed as mean(-expm1(-x W)) to keep precision at small x.
    Estimate tail(double x) const;
    /// phi'(0) = -mean W.
    Estimate slope_at_zero() const;
    /// x >= 0 with phi(x) = y, y in (0, 1); phi must be strictly decreasing.
    double inverse(double y) const;

  private:
    double alpha_;
    int depth_;
    std::vector<double> samples_;
};

struct WLimitSample {
    EmpiricalLaplace laplace;
    double m_alpha = 0.0;
    std::optional<std::string> warning;
    Estimate mean_full_depth;  // E W_depth
    Estimate mean_half_depth;  // E W_{depth/2}
};

WLimitSample sample_W_limit(const WeightModel& model, double alpha, int depth,
                            std::size_t replicates, std::uint64_t seed,
                            std::size_t node_cap = kDefaultNodeCap, unsigned threads = 1);

struct IncrementAtom {
    double location = 0.0;
    double mass = 0.0;
};

/// Sigma_{alpha,1}: mass p_k T_i^alpha at -log T_i, merged by location.
struct IncrementDistribution {
    std::vector<IncrementAtom> atoms;  // sorted by location

    double total_mass() const;
    double drift() const;
    /// Mass carried by [a, b], endpoints inclusive up to 1e-9.
    double mass_in(double a, double b) const;
};

IncrementDistribution increment_distribution(const WeightModel& model, double alpha);

/// n-fold convolution; n = 0 gives the unit mass at 0.
IncrementDistribution convolution_power(const IncrementDistribution& d, int n);

enum class BigginsVerdict { holds, fails, boundary };

std::string to_string(BigginsVerdict v);

struct BigginsReport {
    double drift = 0.0;
    bool diverges_to_infinity = false;
    double integral_estimate = 0.0;
    BigginsVerdict verdict = BigginsVerdict::fails;
};

/// Divergence of the associated random walk plus the u log u integral over
/// the law of W_1^(alpha). The law is enumerated exactly from the model
/// unless `w1_samples` is given, in which case its empirical law is used.
BigginsReport biggins_check(const WeightModel& model, double alpha,
                            std::span<const double> w1_samples = {}, double tolerance = 1e-9);

struct RenewalCheck {
    Estimate empirical;   // tree-based mean of sum_{|v| <= depth, S(v) in I} L(v)^alpha
    double exact = 0.0;   // sum_{n <= depth} Sigma_{alpha,1}^{*n}(I)
    double z_score = 0.0;
};

RenewalCheck renewal_measure_check(const WeightModel& model, double alpha, double a, double b,
                                   int depth, std::size_t replicates, std::uint64_t seed,
                                   std::size_t node_cap = kDefaultNodeCap, unsigned threads = 1);

}  // namespace sfpe
