#include "sfpe/cascade.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "sfpe/numeric.hpp"

namespace sfpe {

namespace {

constexpr std::int64_t kNegligibleShift = 1100;
constexpr double kCriticalTol = 1e-12;

}  // namespace

// ---------------------------------------------------------------- WideReal

WideReal::WideReal(double x) {
    if (!(x >= 0.0) || !std::isfinite(x)) throw std::invalid_argument("WideReal: value must be finite and >= 0");
    if (x == 0.0) return;
    int e = 0;
    m_ = std::frexp(x, &e);
    e_ = e;
}

WideReal WideReal::from_parts(double mantissa, std::int64_t exponent) {
    if (!(mantissa >= 0.0) || !std::isfinite(mantissa))
        throw std::invalid_argument("WideReal: mantissa must be finite and >= 0");
    WideReal w;
    if (mantissa == 0.0) return w;
    int e = 0;
    w.m_ = std::frexp(mantissa, &e);
    w.e_ = exponent + e;
    return w;
}

double WideReal::to_double() const {
    if (m_ == 0.0) return 0.0;
    if (e_ < -1100) return 0.0;
    if (e_ > 1100) return std::numeric_limits<double>::infinity();
    return std::ldexp(m_, static_cast<int>(e_));
}

double WideReal::log() const {
    if (m_ == 0.0) return -std::numeric_limits<double>::infinity();
    return std::log(m_) + static_cast<double>(e_) * std::numbers::ln2;
}

WideReal WideReal::root(int n) const {
    if (n < 1) throw std::invalid_argument("WideReal::root: n must be >= 1");
    if (m_ == 0.0 || n == 1) return *this;
    std::int64_t q = e_ / n, r = e_ % n;
    if (r < 0) {
        r += n;
        q -= 1;
    }
    const double base = std::ldexp(m_, static_cast<int>(r));
    const double rt = n == 2 ? std::sqrt(base) : std::pow(base, 1.0 / n);
    return from_parts(rt, q);
}

std::string WideReal::to_string() const {
    if (m_ == 0.0) return "0";
    const double d = to_double();
    if (d != 0.0 && std::isfinite(d) && std::fabs(d) >= std::numeric_limits<double>::min())
        return format_number(d);
    const double l10 = std::log10(m_) + static_cast<double>(e_) * std::numbers::log10e * std::numbers::ln2;
    double k = std::floor(l10);
    double mant = std::pow(10.0, l10 - k);
    if (mant >= 10.0) {
        mant /= 10.0;
        k += 1.0;
    }
    std::array<char, 64> buf{};
    std::snprintf(buf.data(), buf.size(), "%.11fe%lld", mant, static_cast<long long>(k));
    return buf.data();
}

WideReal operator+(const WideReal& a, const WideReal& b) {
    if (a.m_ == 0.0) return b;
    if (b.m_ == 0.0) return a;
    const WideReal& big = a.e_ >= b.e_ ? a : b;
    const WideReal& small = a.e_ >= b.e_ ? b : a;
    const std::int64_t d = big.e_ - small.e_;
    if (d > kNegligibleShift) return big;
    return WideReal::from_parts(big.m_ + std::ldexp(small.m_, -static_cast<int>(d)), big.e_);
}

WideReal operator-(const WideReal& a, const WideReal& b) {
    if (b.m_ == 0.0) return a;
    if (a < b) throw std::domain_error("WideReal: negative difference");
    const std::int64_t d = a.e_ - b.e_;
    if (d > kNegligibleShift) return a;
    return WideReal::from_parts(a.m_ - std::ldexp(b.m_, -static_cast<int>(d)), a.e_);
}

WideReal operator*(const WideReal& a, const WideReal& b) {
    if (a.m_ == 0.0 || b.m_ == 0.0) return {};
    return WideReal::from_parts(a.m_ * b.m_, a.e_ + b.e_);
}

WideReal operator/(const WideReal& a, const WideReal& b) {
    if (b.m_ == 0.0) throw std::domain_error("WideReal: division by zero");
    if (a.m_ == 0.0) return {};
    return WideReal::from_parts(a.m_ / b.m_, a.e_ - b.e_);
}

bool operator<(const WideReal& a, const WideReal& b) noexcept {
    if (a.m_ == 0.0) return b.m_ != 0.0;
    if (b.m_ == 0.0) return false;
    if (a.e_ != b.e_) return a.e_ < b.e_;
    return a.m_ < b.m_;
}

WideReal abs_diff(const WideReal& a, const WideReal& b) { return a < b ? b - a : a - b; }

// ---------------------------------------------------------------- g and regimes

void CascadeParams::validate() const {
    if (n < 2) throw std::invalid_argument("cascade: N must be an integer >= 2");
    if (!(theta > 0.0 && theta < 1.0)) throw std::invalid_argument("theta must lie in (0,1)");
}

std::string to_string(Regime r) {
    switch (r) {
        case Regime::subcritical: return "subcritical";
        case Regime::critical: return "critical";
        case Regime::supercritical: return "supercritical";
    }
    return "unknown";
}

Regime classify(const CascadeParams& p) {
    p.validate();
    const double threshold = 1.0 - 1.0 / p.n;
    if (std::fabs(p.theta - threshold) <= kCriticalTol) return Regime::critical;
    return p.theta > threshold ? Regime::subcritical : Regime::supercritical;
}

WideReal g_eval(const CascadeParams& p, const WideReal& u) {
    if (u.is_zero()) return u;
    if (WideReal(1.0) < u) throw std::domain_error("g: argument must lie in [0,1]");
    // (u^(1/N) - u) / theta + u equals the defining formula and gives g(1) = 1 exactly.
    return (u.root(p.n) - u) / WideReal(p.theta) + u;
}

double g_eval(const CascadeParams& p, double u) {
    if (!(u >= 0.0 && u <= 1.0)) throw std::domain_error("g: argument must lie in [0,1]");
    return g_eval(p, WideReal(u)).to_double();
}

double g_argmax(const CascadeParams& p) {
    return std::pow(p.n * (1.0 - p.theta), static_cast<double>(p.n) / (1.0 - p.n));
}

namespace {

// Smallest x in (0, hi] with g(x) >= y, for y in (0, g(hi)].
WideReal smallest_preimage(const CascadeParams& p, const WideReal& y, const WideReal& hi) {
    auto reaches = [&](const WideReal& x) { return g_eval(p, x) >= y; };
    // Binary search on the binary exponent of x = 2^e (x = from_parts(0.5, e + 1)).
    auto pow2 = [](std::int64_t e) { return WideReal::from_parts(0.5, e + 1); };
    std::int64_t e_hi = hi.exponent() - 1;  // 2^e_hi <= hi
    if (reaches(pow2(e_hi))) {
        // Start low enough: g(x) ~ x^(1/N) / theta near 0.
        std::int64_t step = 64;
        std::int64_t e_lo = e_hi - step;
        while (reaches(pow2(e_lo))) {
            step *= 2;
            e_lo = e_hi - step;
        }
        while (e_hi - e_lo > 1) {
            const std::int64_t mid = e_lo + (e_hi - e_lo) / 2;
            (reaches(pow2(mid)) ? e_hi : e_lo) = mid;
        }
        // Answer in (2^e_lo, 2^e_hi].
        double lo = 0.5, up = 1.0;  // mantissas at exponent e_lo + 1
        while (true) {
            const double mid = lo + 0.5 * (up - lo);
            if (mid <= lo || mid >= up) break;
            (reaches(WideReal::from_parts(mid, e_lo + 1)) ? up : lo) = mid;
        }
        return WideReal::from_parts(up, e_lo + 1);
    }
    // Answer in (2^e_hi, hi].
    const double cap = (hi / pow2(e_hi + 1)).to_double();  // hi in mantissa units, in (0.5, 1]
    double lo = 0.5, up = cap;
    while (true) {
        const double mid = lo + 0.5 * (up - lo);
        if (mid <= lo || mid >= up) break;
        (reaches(WideReal::from_parts(mid, e_hi + 1)) ? up : lo) = mid;
    }
    return WideReal::from_parts(up, e_hi + 1);
}

WideReal branch_end(const CascadeParams& p) {
    return classify(p) == Regime::supercritical ? WideReal(g_argmax(p)) : WideReal(1.0);
}

// Representable predecessor of x (x > 0, in mantissa steps).
WideReal predecessor(const WideReal& x) {
    const double m = std::nextafter(x.mantissa(), 0.0);
    return WideReal::from_parts(m, x.exponent());
}

}  // namespace

WideReal g_inverse(const CascadeParams& p, const WideReal& y) {
    p.validate();
    if (y.is_zero()) return y;
    const WideReal hi = branch_end(p);
    const WideReal top = g_eval(p, hi);
    if (top < y) throw std::domain_error("g_inverse: y = " + y.to_string() + " exceeds the branch maximum " + top.to_string());
    const WideReal x = smallest_preimage(p, y, hi);
    const WideReal below = predecessor(x);
    if (below.is_zero()) return x;
    return abs_diff(g_eval(p, below), y) < abs_diff(g_eval(p, x), y) ? below : x;
}

double g_inverse(const CascadeParams& p, double y, double tol) {
    if (!(y >= 0.0 && y <= 1.0)) throw std::domain_error("g_inverse: y must lie in [0,1]");
    const double x = g_inverse(p, WideReal(y)).to_double();
    const double err = std::fabs(g_eval(p, x) - y);
    if (err > tol) throw std::runtime_error("g_inverse: residual " + format_number(err) + " above tolerance");
    return x;
}

std::vector<WideReal> a_sequence_wide(const CascadeParams& p, int n) {
    if (classify(p) != Regime::supercritical)
        throw std::invalid_argument("a_sequence: requires the supercritical regime (theta < 1 - 1/N)");
    if (n < 0) throw std::invalid_argument("a_sequence: n must be >= 0");
    std::vector<WideReal> a{g_inverse(p, WideReal(1.0))};
    for (int k = 1; k <= n; ++k) {
        a.push_back(g_inverse(p, a.back()));
        if (!(a.back() < a[a.size() - 2]))
            throw std::runtime_error("a_sequence: strict decrease failed at k = " + std::to_string(k));
    }
    return a;
}

std::vector<double> a_sequence(const CascadeParams& p, int n, double tol) {
    auto wide = a_sequence_wide(p, n);
    std::vector<double> out;
    WideReal target(1.0);
    for (const auto& a : wide) {
        const WideReal err = abs_diff(g_eval(p, a), target);
        if (WideReal(tol) < err) throw std::runtime_error("a_sequence: inversion residual above tolerance");
        const double v = a.to_double();
        if (!std::isnormal(v))
            throw std::range_error("a_sequence: a_" + std::to_string(out.size()) +
                                   " underflows double; use a_sequence_wide");
        out.push_back(v);
        target = a;
    }
    return out;
}

// ---------------------------------------------------------------- explicit solution

WideReal CascadeSolution::cell_value(int n) const {
    if (n < 0) return WideReal(1.0);
    if (n >= static_cast<int>(a.size()))
        throw std::out_of_range("CascadeSolution: cell " + std::to_string(n) + " beyond the computed depth");
    return a[static_cast<std::size_t>(n)];
}

WideReal CascadeSolution::survival_wide(double t) const {
    if (!(t >= 0.0)) throw std::invalid_argument("CascadeSolution: t must be >= 0");
    if (t <= scale) return WideReal(1.0);
    double k = std::log(t / scale);
    const double nearest = std::round(k);
    if (std::fabs(k - nearest) <= 1e-12 * std::max(1.0, std::fabs(nearest))) k = nearest;
    return cell_value(static_cast<int>(std::ceil(k)) - 1);
}

void CascadeSolution::write_csv(std::ostream& os) const {
    os << "n,lower_t,upper_t,survival_value\n";
    os << "-1,0," << format_number(scale) << ",1\n";
    for (int n = 0; n <= depth(); ++n)
        os << n << ',' << format_number(scale * std::exp(static_cast<double>(n))) << ','
           << format_number(scale * std::exp(static_cast<double>(n + 1))) << ','
           << a[static_cast<std::size_t>(n)].to_string() << '\n';
}

CascadeSolution explicit_solution(const CascadeParams& p, double scale, int depth, int n_min) {
    if (!(scale > 0.0) || !std::isfinite(scale)) throw std::invalid_argument("explicit_solution: scale must be > 0");
    if (n_min > 0) throw std::invalid_argument("explicit_solution: n_min must be <= 0");
    auto a = a_sequence_wide(p, depth);
    std::vector<double> t, v, tail;
    for (int n = n_min; n <= depth + 1; ++n) {
        t.push_back(scale * std::exp(static_cast<double>(n)));
        const double value = n <= 0 ? 1.0 : a[static_cast<std::size_t>(n - 1)].to_double();
        v.push_back(value);
        tail.push_back(1.0 - value);
    }
    Curve curve = Curve::lattice(CurveKind::survival, std::numbers::e, std::move(t), std::move(v), std::move(tail));
    return CascadeSolution{p, std::move(a), scale, std::move(curve)};
}

RecursionResidual recursion_residual(const CascadeSolution& s, int n_lo, int n_hi) {
    if (n_lo > n_hi) throw std::invalid_argument("recursion_residual: need n_lo <= n_hi");
    RecursionResidual out;
    out.n_lo = n_lo;
    out.n_hi = n_hi;
    for (int n = n_lo; n <= n_hi; ++n) {
        const WideReal r = abs_diff(s.cell_value(n - 1), g_eval(s.params, s.cell_value(n)));
        if (out.max_residual < r) out.max_residual = r;
        ++out.cells;
    }
    return out;
}

double recursion_residual(const CascadeParams& p, const Curve& curve) {
    if (curve.mode() != CurveMode::lattice_step || !nearly_equal(curve.ratio(), std::numbers::e, 1e-12))
        throw std::invalid_argument("recursion_residual: expects a lattice curve with ratio e");
    const auto grid = curve.grid();
    double worst = 0.0;
    for (std::size_t j = 0; j < grid.size(); ++j) {
        const double below = grid[j] / std::numbers::e;
        if (below < grid.front() * (1.0 - 1e-9)) continue;
        const auto lower = curve.eval(below);
        worst = std::max(worst, std::fabs(lower.value - g_eval(p, curve.values()[j])));
    }
    return worst;
}

// ---------------------------------------------------------------- seeds

void SeedFunction::validate(const CascadeParams& p) const {
    if (s.empty() || s.size() != values.size())
        throw std::invalid_argument("seed: grid and values must be nonempty and equal in length");
    for (std::size_t q = 0; q < s.size(); ++q) {
        if (!(s[q] > 1.0 && s[q] <= std::numbers::e * (1.0 + 1e-12)))
            throw std::invalid_argument("seed: grid points must lie in (1, e]");
        if (q > 0 && !(s[q] > s[q - 1])) throw std::invalid_argument("seed: grid must be strictly increasing");
        if (!(values[q] > 0.0 && values[q] < 1.0)) throw std::invalid_argument("seed: values must lie in (0,1)");
        if (q > 0 && values[q] > values[q - 1]) throw std::invalid_argument("seed: values must be nonincreasing");
    }
    if (std::fabs(s.back() - std::numbers::e) > 1e-12 * std::numbers::e)
        throw std::invalid_argument("seed: the grid must end at e");
    const double bound = g_eval(p, values.back());
    for (std::size_t q = 0; q < s.size(); ++q)
        if (values[q] > bound)
            throw std::invalid_argument("seed violates f(t) <= g(f(e)) at t = " + format_number(s[q]) + ": f(t) = " +
                                        format_number(values[q]) + " > " + format_number(bound));
}

Curve extend_from_seed(const CascadeParams& p, const SeedFunction& f, int n_lo, int n_hi, double tol) {
    if (classify(p) == Regime::supercritical)
        throw std::invalid_argument("extend_from_seed: requires the subcritical or critical regime");
    if (n_lo > n_hi) throw std::invalid_argument("extend_from_seed: need n_lo <= n_hi");
    f.validate(p);
    std::vector<std::pair<double, double>> pts;
    for (std::size_t q = 0; q < f.s.size(); ++q) {
        // n = 0 .. n_hi by inversion, n = -1 .. n_lo by applying g.
        std::vector<double> up{f.values[q]};
        WideReal x(f.values[q]);
        for (int n = 1; n <= n_hi; ++n) {
            const WideReal next = g_inverse(p, x);
            if (WideReal(tol) < abs_diff(g_eval(p, next), x))
                throw std::runtime_error("extend_from_seed: inversion residual above tolerance");
            x = next;
            up.push_back(x.to_double());
        }
        for (int n = std::max(0, n_lo); n <= n_hi; ++n)
            pts.emplace_back(f.s[q] * std::exp(static_cast<double>(n)), up[static_cast<std::size_t>(n)]);
        double y = f.values[q];
        for (int n = -1; n >= n_lo; --n) {
            y = g_eval(p, y);
            if (n <= n_hi) pts.emplace_back(f.s[q] * std::exp(static_cast<double>(n)), y);
        }
    }
    std::sort(pts.begin(), pts.end());
    std::vector<double> t, v;
    for (auto [a, b] : pts) {
        t.push_back(a);
        v.push_back(b);
    }
    return Curve::lattice(CurveKind::survival, std::numbers::e, std::move(t), std::move(v));
}

SeedFunction restrict_to_seed(const Curve& curve) {
    if (curve.mode() != CurveMode::lattice_step || !nearly_equal(curve.ratio(), std::numbers::e, 1e-12))
        throw std::invalid_argument("restrict_to_seed: expects a lattice curve with ratio e");
    SeedFunction f;
    const auto grid = curve.grid();
    for (std::size_t j = 0; j < grid.size(); ++j)
        if (grid[j] > 1.0 * (1.0 + 1e-12) && grid[j] <= std::numbers::e * (1.0 + 1e-12)) {
            f.s.push_back(grid[j]);
            f.values.push_back(curve.values()[j]);
        }
    return f;
}

// ---------------------------------------------------------------- escape

void EscapeResult::write_csv(std::ostream& os) const {
    os << "k,value\n";
    for (std::size_t k = 0; k < trajectory.size(); ++k) os << k << ',' << format_number(trajectory[k]) << '\n';
}

EscapeResult escape_check(const CascadeParams& p, double x, int max_iter, double tol) {
    if (classify(p) != Regime::supercritical)
        throw std::invalid_argument("escape_check: requires the supercritical regime");
    if (!(x > 0.0 && x < 1.0)) throw std::invalid_argument("escape_check: x must lie in (0,1)");
    if (max_iter < 1) throw std::invalid_argument("escape_check: max_iter must be >= 1");
    EscapeResult out;
    out.trajectory.push_back(x);
    for (int k = 1; k <= max_iter; ++k) {
        x = g_eval(p, std::min(x, 1.0));
        out.trajectory.push_back(x);
        if (x > 1.0 + tol) {
            out.exceeded_at = k;
            break;
        }
        if (std::fabs(x - 1.0) <= tol) {
            out.reached_one_at = k;
            break;
        }
    }
    return out;
}

// ---------------------------------------------------------------- modulation

PeriodicModulation extract_modulation(const CascadeParams& p, const Curve& curve, const EmpiricalLaplace& phi,
                                      double alpha) {
    if (classify(p) != Regime::subcritical)
        throw std::invalid_argument("extract_modulation: requires the subcritical regime");
    if (curve.mode() != CurveMode::lattice_step || !nearly_equal(curve.ratio(), std::numbers::e, 1e-12))
        throw std::invalid_argument("extract_modulation: expects a lattice curve with ratio e");
    if (!(alpha > 0.0)) throw std::invalid_argument("extract_modulation: alpha must be > 0");
    const auto grid = curve.grid();
    std::vector<double> residues, h;
    for (double s : curve.residues()) {
        std::size_t best = grid.size();
        for (std::size_t j = 0; j < grid.size(); ++j) {
            double k = std::log(grid[j] / s);
            if (std::fabs(k - std::round(k)) > 1e-9) continue;
            if (best == grid.size() || std::fabs(std::log(grid[j])) < std::fabs(std::log(grid[best]))) best = j;
        }
        const double t = grid[best];
        const double v = curve.values()[best];
        if (!(v > 0.0 && v < 1.0))
            throw std::domain_error("extract_modulation: curve value " + format_number(v) + " at t = " +
                                    format_number(t) + " lies outside (0,1); solutions satisfy 0 < F(t) < 1 for t > 0");
        residues.push_back(s);
        h.push_back(phi.inverse(v) / std::pow(t, alpha));
    }
    return PeriodicModulation::tabulated(std::numbers::e, std::move(residues), std::move(h));
}

}  // namespace sfpe
