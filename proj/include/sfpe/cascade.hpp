#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "sfpe/curve.hpp"
#include "sfpe/fixpoint.hpp"
#include "sfpe/wbp.hpp"

namespace sfpe {

/// Nonnegative real m * 2^e with a double mantissa m in [0.5, 1) and a
/// 64-bit exponent. Each operation rounds like the corresponding double
/// operation, but nothing underflows: the thresholds a_n of a supercritical
/// cascade shrink doubly exponentially.
class WideReal {
  public:
    WideReal() = default;
    explicit WideReal(double x);
    static WideReal from_parts(double mantissa, std::int64_t exponent);

    bool is_zero() const noexcept { return m_ == 0.0; }
    double mantissa() const noexcept { return m_; }
    std::int64_t exponent() const noexcept { return e_; }

    /// Nearest double; 0 below the subnormal range.
    double to_double() const;
    double log() const;
    /// x^(1/n).
    WideReal root(int n) const;
    /// Decimal scientific notation with 17 significant digits while the
    /// value is a double, 12 beyond.
    std::string to_string() const;

    friend WideReal operator+(const WideReal& a, const WideReal& b);
    /// Requires a >= b.
    friend WideReal operator-(const WideReal& a, const WideReal& b);
    friend WideReal operator*(const WideReal& a, const WideReal& b);
    friend WideReal operator/(const WideReal& a, const WideReal& b);
    friend bool operator==(const WideReal& a, const WideReal& b) noexcept {
        return a.m_ == b.m_ && (a.m_ == 0.0 || a.e_ == b.e_);
    }
    friend bool operator<(const WideReal& a, const WideReal& b) noexcept;
    friend bool operator<=(const WideReal& a, const WideReal& b) noexcept { return !(b < a); }
    friend bool operator>(const WideReal& a, const WideReal& b) noexcept { return b < a; }
    friend bool operator>=(const WideReal& a, const WideReal& b) noexcept { return !(a < b); }

  private:
    double m_ = 0.0;
    std::int64_t e_ = 0;
};

/// |a - b|.
WideReal abs_diff(const WideReal& a, const WideReal& b);

struct CascadeParams {
    int n = 2;
    double theta = 0.5;

    /// Throws unless n >= 2 and 0 < theta < 1.
    void validate() const;
    WeightModel model() const { return WeightModel::cascade(n, theta); }
};

enum class Regime { subcritical, critical, supercritical };
std::string to_string(Regime r);

/// theta against 1 - 1/N; |difference| <= 1e-12 counts as critical.
Regime classify(const CascadeParams& p);

/// g(u) = (u^(1/N) - (1 - theta) u) / theta on [0, 1].
double g_eval(const CascadeParams& p, double u);
WideReal g_eval(const CascadeParams& p, const WideReal& u);

/// Argmax (N(1 - theta))^(N / (1 - N)) of g; g is increasing to its left.
double g_argmax(const CascadeParams& p);

/// Inverse of g on its increasing branch: [0, 1] unless supercritical,
/// [0, argmax] when supercritical. Full-precision bisection returning the
/// representable x with g(x) nearest to y.
WideReal g_inverse(const CascadeParams& p, const WideReal& y);
/// Double version; throws if |g(x) - y| > tol.
double g_inverse(const CascadeParams& p, double y, double tol = 1e-13);

/// a_0 > a_1 > ... > a_n with g(a_0) = 1 and g(a_{k+1}) = a_k.
std::vector<WideReal> a_sequence_wide(const CascadeParams& p, int n);
/// Throws std::range_error once a term is no longer a normal double.
std::vector<double> a_sequence(const CascadeParams& p, int n, double tol = 1e-13);

/// F(t) = 1 on (0, c] and a_n on (c e^n, c e^(n+1)], n = 0..depth.
struct CascadeSolution {
    CascadeParams params;
    std::vector<WideReal> a;
    double scale = 1.0;
    /// Lattice-step curve (r = e) on c e^n, n in [n_min, depth + 1].
    Curve curve;

    /// Value on cell n, i.e. on (c e^n, c e^(n+1)]; 1 for n < 0.
    WideReal cell_value(int n) const;
    /// F(t) at any t >= 0.
    WideReal survival_wide(double t) const;
    double survival(double t) const { return survival_wide(t).to_double(); }
    int depth() const { return static_cast<int>(a.size()) - 1; }

    /// Rows "n,lower_t,upper_t,survival_value"; n = -1 is the cell (0, c].
    void write_csv(std::ostream& os) const;
};

CascadeSolution explicit_solution(const CascadeParams& p, double scale, int depth, int n_min = -40);

struct RecursionResidual {
    WideReal max_residual;  // max over cells of |F(t / e) - g(F(t))|
    int n_lo = 0;
    int n_hi = 0;
    std::size_t cells = 0;
    bool exact() const { return max_residual.is_zero(); }
};

/// Recursion F(t / e) = g(F(t)) on the cells n_lo..n_hi of the explicit
/// solution, evaluated without underflow.
RecursionResidual recursion_residual(const CascadeSolution& s, int n_lo, int n_hi);

/// Same recursion on every grid point t of a lattice curve (r = e) whose
/// neighbour t / e is also on the grid; double arithmetic.
double recursion_residual(const CascadeParams& p, const Curve& curve);

/// Nonincreasing seed on a grid in (1, e] that ends at e.
struct SeedFunction {
    std::vector<double> s;
    std::vector<double> values;

    /// Throws unless the grid and values are valid and f(s) <= g(f(e)).
    void validate(const CascadeParams& p) const;
};

/// F(s e^n) = g^{-n}(f(s)) for n in [n_lo, n_hi] and every seed point s.
/// Subcritical and critical regimes only.
Curve extend_from_seed(const CascadeParams& p, const SeedFunction& f, int n_lo, int n_hi,
                       double tol = 1e-13);

/// Grid points of a lattice curve (r = e) in (1, e] and their values.
SeedFunction restrict_to_seed(const Curve& curve);

struct EscapeResult {
    std::vector<double> trajectory;  // x, g(x), g(g(x)), ...
    std::optional<int> exceeded_at;  // first k with g^k(x) > 1 + tol
    std::optional<int> reached_one_at;  // first k with |g^k(x) - 1| <= tol
    /// Rows "k,value".
    void write_csv(std::ostream& os) const;
};

EscapeResult escape_check(const CascadeParams& p, double x, int max_iter, double tol = 1e-10);

/// h(t) = phi^{-1}(F(t)) t^-alpha on the residues of a lattice curve (r = e),
/// using for each residue the grid point nearest to 1.
PeriodicModulation extract_modulation(const CascadeParams& p, const Curve& curve,
                                      const EmpiricalLaplace& phi, double alpha);

}  // namespace sfpe
