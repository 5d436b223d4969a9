#include "sfpe/curve.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sfpe/fixpoint.hpp"
#include "sfpe/numeric.hpp"
#include "sfpe/wbp.hpp"

namespace sfpe {

namespace {

constexpr double kLatticeTol = 1e-9;
constexpr double kMonotoneSlack = 1e-12;

// log t reduced modulo log r into [0, log r).
double log_residue(double t, double span) {
    double x = std::fmod(std::log(t), span);
    if (x < 0.0) x += span;
    if (span - x <= kLatticeTol) x = 0.0;
    return x;
}

}  // namespace

std::string to_string(CurveKind k) { return k == CurveKind::survival ? "survival" : "laplace"; }

std::string to_string(CurveMode m) {
    return m == CurveMode::interp_loglinear ? "interp-loglinear" : "lattice-step";
}

OffLatticeQuery::OffLatticeQuery(double t)
    : std::domain_error("off-lattice query at t = " + format_number(t)) {}

double MixtureOrigin::argument(double t) const {
    if (t == 0.0) return 0.0;
    const double h = modulation ? (*modulation)(t) : 1.0;
    return h * std::pow(t, alpha);
}

Curve Curve::interpolated(CurveKind kind, std::vector<double> t, std::vector<double> values,
                          std::vector<double> tails) {
    Curve c;
    c.kind_ = kind;
    c.mode_ = CurveMode::interp_loglinear;
    c.t_ = std::move(t);
    c.v_ = std::move(values);
    c.tail_ = std::move(tails);
    c.validate();
    return c;
}

Curve Curve::lattice(CurveKind kind, double r, std::vector<double> t, std::vector<double> values,
                     std::vector<double> tails) {
    if (!(r > 1.0) || !std::isfinite(r)) throw std::invalid_argument("Curve: lattice ratio must be > 1");
    Curve c;
    c.kind_ = kind;
    c.mode_ = CurveMode::lattice_step;
    c.r_ = r;
    c.t_ = std::move(t);
    c.v_ = std::move(values);
    c.tail_ = std::move(tails);
    c.validate();
    const double span = std::log(r);
    std::vector<double> res;
    for (double x : c.t_) res.push_back(log_residue(x, span));
    std::sort(res.begin(), res.end());
    for (double x : res)
        if (c.residues_.empty() || x - std::log(c.residues_.back()) > kLatticeTol)
            c.residues_.push_back(std::exp(x));
    return c;
}

void Curve::validate() {
    if (t_.empty()) throw std::invalid_argument("Curve: empty grid");
    if (v_.size() != t_.size()) throw std::invalid_argument("Curve: grid and values differ in length");
    if (tail_.empty()) {
        tail_.resize(v_.size());
        for (std::size_t j = 0; j < v_.size(); ++j) tail_[j] = 1.0 - v_[j];
    }
    if (tail_.size() != t_.size()) throw std::invalid_argument("Curve: grid and tails differ in length");
    for (std::size_t j = 0; j < t_.size(); ++j) {
        if (!(t_[j] > 0.0) || !std::isfinite(t_[j]))
            throw std::invalid_argument("Curve: grid points must be positive and finite");
        if (j > 0 && !(t_[j] > t_[j - 1])) throw std::invalid_argument("Curve: grid must be strictly increasing");
        if (!(v_[j] >= 0.0 && v_[j] <= 1.0)) throw std::invalid_argument("Curve: values must lie in [0,1]");
        if (!(tail_[j] >= 0.0 && tail_[j] <= 1.0)) throw std::invalid_argument("Curve: tails must lie in [0,1]");
        if (j > 0 && v_[j] > v_[j - 1] + kMonotoneSlack)
            throw std::invalid_argument("Curve: values must be nonincreasing (violated at t = " +
                                        format_number(t_[j]) + ")");
    }
}

bool Curve::on_lattice(double t) const {
    const double span = std::log(r_);
    const double x = log_residue(t, span);
    for (double s : residues_) {
        const double d = std::fabs(x - std::log(s));
        if (d <= kLatticeTol || span - d <= kLatticeTol) return true;
    }
    return false;
}

CurvePoint Curve::eval(double t) const {
    if (!(t >= 0.0)) throw std::invalid_argument("Curve::eval: t must be >= 0");
    if (t == 0.0) return {1.0, 0.0, false};
    const std::size_t m = t_.size();

    if (mode_ == CurveMode::lattice_step) {
        auto it = std::lower_bound(t_.begin(), t_.end(), t * (1.0 - kLatticeTol));
        if (it != t_.end() && std::fabs(*it - t) <= kLatticeTol * t) {
            const auto j = static_cast<std::size_t>(it - t_.begin());
            return {v_[j], tail_[j], false};
        }
        if (!on_lattice(t)) throw OffLatticeQuery(t);
        if (t < t_.front()) return {v_.front(), tail_.front(), true};
        if (t > t_.back()) return {v_.back(), tail_.back(), true};
        throw OffLatticeQuery(t);
    }

    if (t <= t_.front()) return {v_.front(), tail_.front(), t < t_.front()};
    if (t >= t_.back()) return {v_.back(), tail_.back(), t > t_.back()};
    const auto j = static_cast<std::size_t>(std::upper_bound(t_.begin(), t_.end(), t) - t_.begin());
    const std::size_t i = std::min(j, m - 1);
    const double lt = std::log(t), l0 = std::log(t_[i - 1]), l1 = std::log(t_[i]);
    const double w = (lt - l0) / (l1 - l0);
    if (w == 0.0) return {v_[i - 1], tail_[i - 1], false};
    return {v_[i - 1] + w * (v_[i] - v_[i - 1]), tail_[i - 1] + w * (tail_[i] - tail_[i - 1]), false};
}

Curve Curve::scaled(double c) const {
    if (!(c > 0.0) || !std::isfinite(c)) throw std::invalid_argument("Curve::scaled: c must be > 0");
    std::vector<double> t(t_);
    for (double& x : t) x *= c;
    Curve out = mode_ == CurveMode::lattice_step ? lattice(kind_, r_, std::move(t), v_, tail_)
                                                 : interpolated(kind_, std::move(t), v_, tail_);
    return out;
}

Curve Curve::with_values(std::vector<double> values, std::vector<double> tails) const {
    std::vector<double> t(t_);
    return mode_ == CurveMode::lattice_step
               ? lattice(kind_, r_, std::move(t), std::move(values), std::move(tails))
               : interpolated(kind_, std::move(t), std::move(values), std::move(tails));
}

bool Curve::convex() const {
    double prev = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 1; j < t_.size(); ++j) {
        const double slope = (v_[j] - v_[j - 1]) / (t_[j] - t_[j - 1]);
        if (slope < prev - 1e-9) return false;
        prev = slope;
    }
    return true;
}

void Curve::write_csv(std::ostream& os) const {
    os << "t,value\n";
    for (std::size_t j = 0; j < t_.size(); ++j) os << format_number(t_[j]) << ',' << format_number(v_[j]) << '\n';
}

}  // namespace sfpe
