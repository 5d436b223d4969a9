#pragma once

#include <memory>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace sfpe {

class EmpiricalLaplace;
class PeriodicModulation;

enum class CurveKind { survival, laplace };
enum class CurveMode { interp_loglinear, lattice_step };

std::string to_string(CurveKind k);
std::string to_string(CurveMode m);

/// Thrown when a lattice-step curve is queried away from its lattice.
class OffLatticeQuery : public std::domain_error {
  public:
    explicit OffLatticeQuery(double t);
};

struct CurvePoint {
    double value = 1.0;
    double tail = 0.0;  // 1 - value, kept separately for precision near t = 0
    bool clamped = false;
};

/// Curve built from an empirical Laplace transform as phi(h(t) t^alpha).
/// Residual checks use it to propagate Monte Carlo error.
struct MixtureOrigin {
    std::shared_ptr<const EmpiricalLaplace> phi;
    std::shared_ptr<const PeriodicModulation> modulation;
    double alpha = 1.0;

    /// Argument h(t) t^alpha at which phi is evaluated.
    double argument(double t) const;
};

/// Monotone nonincreasing function on a positive grid with value 1 at 0,
/// representing a survival function or a Laplace transform.
class Curve {
  public:
    static Curve interpolated(CurveKind kind, std::vector<double> t, std::vector<double> values,
                              std::vector<double> tails = {});
    /// Grid points must all lie on s r^Z for finitely many residues s.
    static Curve lattice(CurveKind kind, double r, std::vector<double> t,
                         std::vector<double> values, std::vector<double> tails = {});

    CurveKind kind() const noexcept { return kind_; }
    CurveMode mode() const noexcept { return mode_; }
    std::span<const double> grid() const noexcept { return t_; }
    std::span<const double> values() const noexcept { return v_; }
    std::span<const double> tails() const noexcept { return tail_; }
    std::size_t size() const noexcept { return t_.size(); }

    /// Lattice ratio r (lattice mode only) and the residues of the grid,
    /// normalized to [1, r).
    double ratio() const noexcept { return r_; }
    const std::vector<double>& residues() const noexcept { return residues_; }

    CurvePoint eval(double t) const;
    double operator()(double t) const { return eval(t).value; }

    /// Same values on the grid c * t; i.e. t -> F(t / c).
    Curve scaled(double c) const;
    /// Same grid and mode, new values.
    Curve with_values(std::vector<double> values, std::vector<double> tails) const;

    /// Discrete convexity of the values in t (slopes nondecreasing within 1e-9).
    bool convex() const;

    const std::shared_ptr<const MixtureOrigin>& origin() const noexcept { return origin_; }
    void set_origin(std::shared_ptr<const MixtureOrigin> o) { origin_ = std::move(o); }

    /// Rows "t,value" with a header.
    void write_csv(std::ostream& os) const;

  private:
    Curve() = default;
    void validate();
    bool on_lattice(double t) const;

    CurveKind kind_ = CurveKind::survival;
    CurveMode mode_ = CurveMode::interp_loglinear;
    std::vector<double> t_, v_, tail_;
    double r_ = 0.0;
    std::vector<double> residues_;
    std::shared_ptr<const MixtureOrigin> origin_;
};

using SurvivalCurve = Curve;
using LaplaceCurve = Curve;

}  // namespace sfpe
