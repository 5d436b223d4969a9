#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>

namespace sfpe {

/// splitmix64 finalizer. Every derived seed in the library goes through this.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Key of child `index` (0-based position in the parent's weight vector).
/// Depends only on the parent key, so a subtree is reproduced by simulating
/// from its root key.
constexpr std::uint64_t child_key(std::uint64_t parent, std::size_t index) noexcept {
    return mix64(parent ^ mix64(0x632be59bd9b4e019ULL + static_cast<std::uint64_t>(index)));
}

/// Root key of replicate `r` under a master seed.
constexpr std::uint64_t replicate_key(std::uint64_t master, std::uint64_t r) noexcept {
    return mix64(mix64(master) ^ (0xd1b54a32d192ed03ULL * (r + 1)));
}

/// Counter-based stream seeded from a single 64-bit key.
class SplitMix64 {
  public:
    explicit constexpr SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

    constexpr std::uint64_t next() noexcept {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform on [0, 1) with 53 random bits.
    constexpr double uniform() noexcept {
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }

  private:
    std::uint64_t state_;
};

/// Pairwise (cascade) summation; the result depends only on the order of `xs`.
double pairwise_sum(std::span<const double> xs);

struct Estimate {
    double value = 0.0;
    double standard_error = 0.0;
};

/// Sample mean and its standard error (n - 1 denominator).
Estimate mean_estimate(std::span<const double> xs);

/// Runs body(i, worker) for i in [0, count) on `threads` workers with a
/// static partition; worker < threads. Each index is visited exactly once,
/// so results written to slot i do not depend on the thread count.
void parallel_for(std::size_t count, unsigned threads,
                  const std::function<void(std::size_t, unsigned)>& body);

/// CSV number formatting: '.' decimal, scientific for 0 < |x| < 1e-4,
/// shortest round-trip representation otherwise.
std::string format_number(double x);

/// Largest x in [lo, hi] with pred(x) false, assuming pred is monotone
/// (false ... false true ... true) and pred(hi) is true. Bisects until the
/// bracket cannot be split further in double precision.
double bisect_boundary(double lo, double hi, const std::function<bool(double)>& pred,
                       int max_iter = 2200);

inline bool nearly_equal(double a, double b, double rel, double abs = 0.0) {
    return std::fabs(a - b) <= std::max(abs, rel * std::max(std::fabs(a), std::fabs(b)));
}

}  // namespace sfpe
