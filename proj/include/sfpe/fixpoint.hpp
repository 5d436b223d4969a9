#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "sfpe/curve.hpp"
#include "sfpe/wbp.hpp"
#include "sfpe/weights.hpp"

namespace sfpe {

/// Grid description: log-spaced points for interpolated curves, or
/// s r^n for residues s and n in [n_min, n_max] for lattice curves.
struct GridSpec {
    CurveMode mode = CurveMode::interp_loglinear;
    double lo = 1e-6;
    double hi = 1e6;
    std::size_t points = 512;
    double r = 0.0;
    std::vector<double> residues{1.0};
    int n_min = -40;
    int n_max = 40;

    static GridSpec log_spaced(double lo = 1e-6, double hi = 1e6, std::size_t points = 512);
    static GridSpec lattice(double r, std::vector<double> residues = {1.0}, int n_min = -40,
                            int n_max = 40);

    /// Sorted grid points.
    std::vector<double> build() const;
};

/// Curve holding f(t_j) on the grid; `tail`, when given, supplies 1 - f(t_j).
Curve sample_curve(CurveKind kind, const GridSpec& grid, const std::function<double(double)>& f,
                   const std::function<double(double)>& tail = {});

/// exp(-c t^beta) with its tail computed by expm1.
Curve weibull_curve(CurveKind kind, const GridSpec& grid, double c, double beta);

/// Survival function of the point mass at c: 1 for t <= c, 0 after.
Curve point_mass_curve(const GridSpec& grid, double c);

/// Multiplicatively r-periodic positive function, tabulated on residues in
/// [1, r), or a constant.
class PeriodicModulation {
  public:
    static PeriodicModulation constant(double c);
    static PeriodicModulation tabulated(double r, std::vector<double> residues,
                                        std::vector<double> values);

    bool is_constant() const noexcept { return constant_; }
    double period() const noexcept { return r_; }
    const std::vector<double>& residues() const noexcept { return s_; }
    const std::vector<double>& values() const noexcept { return h_; }

    /// h(t); throws std::domain_error for t off the tabulated residues.
    double operator()(double t) const;

    /// Membership in the Weibull class: s -> h(s) s^alpha nondecreasing on
    /// the residues, and h(s_q) s_q^alpha <= h(s_1) (r s_1)^alpha.
    bool weibull_admissible(double alpha, std::string* why = nullptr) const;
    /// Discrete stand-in for the stable class: 0 < alpha <= 1, constant when
    /// alpha = 1, and p(t) t^alpha nondecreasing and concave over two periods.
    bool stable_admissible(double alpha, std::string* why = nullptr) const;

    /// Rows "s,h" with a header.
    void write_csv(std::ostream& os) const;

  private:
    bool constant_ = true;
    double r_ = 0.0;
    std::vector<double> s_;
    std::vector<double> h_;
};

enum class OperatorKind { min, sum };
std::string to_string(OperatorKind k);

struct OperatorResult {
    Curve curve;
    double clamp_fraction = 0.0;
    std::optional<std::string> warning;
    std::vector<bool> clamped;  // per grid point: some evaluation left the grid
};

inline constexpr double kDefaultClampThreshold = 0.05;

/// out(t_j) = sum_k p_k prod_i F(t_j T_i^(k)) over the merged atoms.
OperatorResult apply_min_operator(const Curve& curve, const WeightModel& model,
                                  double clamp_threshold = kDefaultClampThreshold);
/// Same expectation with Laplace-transform semantics.
OperatorResult apply_sum_operator(const Curve& curve, const WeightModel& model,
                                  double clamp_threshold = kDefaultClampThreshold);
OperatorResult apply_operator(const Curve& curve, const WeightModel& model, OperatorKind kind,
                              double clamp_threshold = kDefaultClampThreshold);

struct ResidualReport {
    double sup_norm = 0.0;
    std::vector<double> residuals;        // O(curve)(t_j) - curve(t_j), signed
    std::vector<double> standard_errors;  // Monte Carlo error, mixture curves only
    double clamp_fraction = 0.0;
    std::optional<std::string> warning;
    std::vector<bool> clamped;
};

/// Signed residuals on the grid. For curves carrying a MixtureOrigin the
/// standard error of each residual is propagated from the samples with the
/// delta method.
ResidualReport fixed_point_residual(const Curve& curve, const WeightModel& model, OperatorKind kind,
                                    double clamp_threshold = kDefaultClampThreshold);

/// phi(h(t) t^alpha) on the grid; a survival curve.
Curve build_weibull_mixture(std::shared_ptr<const EmpiricalLaplace> phi,
                            const PeriodicModulation& h, double alpha, const GridSpec& grid);
/// phi(p(t) t^alpha) on the grid; a Laplace curve. Requires alpha <= 1.
Curve build_stable_mixture(std::shared_ptr<const EmpiricalLaplace> phi,
                           const PeriodicModulation& p, double alpha, const GridSpec& grid);

enum class RegularityClass { bounded, regular, elementary_candidate, not_regular, inconclusive };
std::string to_string(RegularityClass c);

struct ResidueLimit {
    double residue = 1.0;
    double limit_estimate = 0.0;  // D_alpha at the smallest grid point of the residue
    double relative_spread = 0.0; // over the last few points
};

struct RegularityReport {
    double alpha = 0.0;
    double liminf_estimate = 0.0;
    double limsup_estimate = 0.0;
    double trend_slope = 0.0;  // d log D / d log t over the probed region
    std::vector<ResidueLimit> residue_limits;
    RegularityClass classification = RegularityClass::inconclusive;
};

/// D_alpha F(t) = t^-alpha (1 - F(t)) on the smallest part of the grid.
RegularityReport regularity_diagnostic(const Curve& curve, double alpha, const LatticeInfo& lattice);

struct IdentityCheck {
    double lhs = 0.0;
    double rhs = 0.0;
    double diff = 0.0;
};

/// prod_{|v| = j + k} F(t L(v)) against prod_{|v| = j} [F_k]_v(t L(v)).
IdentityCheck disintegration_check(const Curve& curve, const WeightedTree& tree, double t, int j,
                                   int k);

/// Psi(t) = e^{-alpha t} (-log prod_{|v| = n + k} F(e^t L(v))) against
/// sum_{|v| = n} L(v)^alpha [Psi_k]_v(t - S(v)).
IdentityCheck psi_transform(const Curve& curve, const WeightedTree& tree, double t_log,
                            double alpha, int n, int k);

/// Inverts positive entries and keeps zeros.
std::vector<double> involution_transform(std::span<const double> weights);

struct IterationTrace {
    std::vector<double> residuals;  // sup norm of O(c_i) - c_i
    std::vector<double> clamp_fractions;
    std::vector<std::string> warnings;
    Curve last;
};

IterationTrace iterate_operator(const Curve& initial, const WeightModel& model, OperatorKind kind,
                                int n_iter, double clamp_threshold = kDefaultClampThreshold);

}  // namespace sfpe
