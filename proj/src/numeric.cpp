#include "sfpe/numeric.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <stdexcept>
#include <system_error>
#include <thread>
#include <vector>

namespace sfpe {

double pairwise_sum(std::span<const double> xs) {
    constexpr std::size_t kBlock = 32;
    if (xs.size() <= kBlock) {
        double s = 0.0;
        for (double x : xs) s += x;
        return s;
    }
    const std::size_t half = xs.size() / 2;
    return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

Estimate mean_estimate(std::span<const double> xs) {
    if (xs.empty()) throw std::invalid_argument("mean_estimate: empty sample");
    const double n = static_cast<double>(xs.size());
    const double mean = pairwise_sum(xs) / n;
    if (xs.size() == 1) return {mean, 0.0};
    // Deviations are rescaled before squaring so tiny samples do not underflow.
    double scale = 0.0;
    for (double x : xs) scale = std::max(scale, std::fabs(x - mean));
    if (scale == 0.0 || !std::isfinite(scale)) return {mean, scale};
    std::vector<double> sq(xs.size());
    std::transform(xs.begin(), xs.end(), sq.begin(), [mean, scale](double x) {
        const double d = (x - mean) / scale;
        return d * d;
    });
    const double var = pairwise_sum(sq) / (n - 1.0);
    return {mean, scale * std::sqrt(var / n)};
}

void parallel_for(std::size_t count, unsigned threads,
                  const std::function<void(std::size_t, unsigned)>& body) {
    if (count == 0) return;
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(count)));
    if (threads == 1) {
        for (std::size_t i = 0; i < count; ++i) body(i, 0);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    const std::size_t chunk = (count + threads - 1) / threads;
    for (unsigned w = 0; w < threads; ++w) {
        const std::size_t begin = w * chunk;
        const std::size_t end = std::min(count, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back([&, w, begin, end] {
            try {
                for (std::size_t i = begin; i < end; ++i) body(i, w);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

std::string format_number(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    std::array<char, 64> buf{};
    std::to_chars_result res{};
    if (x != 0.0 && std::fabs(x) < 1e-4) {
        res = std::to_chars(buf.data(), buf.data() + buf.size(), x, std::chars_format::scientific);
    } else {
        res = std::to_chars(buf.data(), buf.data() + buf.size(), x);
    }
    if (res.ec != std::errc{}) throw std::runtime_error("format_number: conversion failed");
    return std::string(buf.data(), res.ptr);
}

double bisect_boundary(double lo, double hi, const std::function<bool(double)>& pred,
                       int max_iter) {
    for (int i = 0; i < max_iter; ++i) {
        const double mid = lo + 0.5 * (hi - lo);
        if (mid <= lo || mid >= hi) break;
        if (pred(mid))
            hi = mid;
        else
            lo = mid;
    }
    return lo;
}

}  // namespace sfpe
