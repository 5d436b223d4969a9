#include <doctest.h>

#include <atomic>
#include <numeric>
#include <set>
#include <vector>

#include "sfpe/numeric.hpp"

using namespace sfpe;

TEST_CASE("splitmix64 matches the reference stream") {
    // First outputs of the published splitmix64 generator seeded with 0.
    SplitMix64 g(0);
    CHECK(g.next() == 0xe220a8397b1dcdafULL);
    CHECK(g.next() == 0x6e789e6aa1b965f4ULL);
    CHECK(g.next() == 0x06c45d188009454fULL);
}

TEST_CASE("uniform draws lie in [0,1)") {
    SplitMix64 g(42);
    for (int i = 0; i < 10000; ++i) {
        const double u = g.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
    }
}

TEST_CASE("derived keys are distinct") {
    std::set<std::uint64_t> keys;
    for (std::size_t i = 0; i < 64; ++i) keys.insert(child_key(12345, i));
    for (std::uint64_t r = 0; r < 64; ++r) keys.insert(replicate_key(12345, r));
    CHECK(keys.size() == 128);
    CHECK(child_key(1, 0) != child_key(2, 0));
}

TEST_CASE("pairwise_sum") {
    CHECK(pairwise_sum(std::vector<double>{}) == 0.0);
    std::vector<double> xs(1000);
    std::iota(xs.begin(), xs.end(), 1.0);
    CHECK(pairwise_sum(xs) == 500500.0);
    // 1e6 copies of 0.1: naive summation drifts by ~1e-6, pairwise stays near ulp level.
    std::vector<double> tenths(1'000'000, 0.1);
    CHECK(pairwise_sum(tenths) == doctest::Approx(100000.0).epsilon(1e-14));
}

TEST_CASE("mean_estimate") {
    const std::vector<double> xs{1.0, 2.0, 3.0, 4.0};
    const Estimate e = mean_estimate(xs);
    CHECK(e.value == doctest::Approx(2.5));
    // sample variance 5/3, SE = sqrt(5/3 / 4)
    CHECK(e.standard_error == doctest::Approx(std::sqrt(5.0 / 12.0)));
    const std::vector<double> same(10, 7.0);
    CHECK(mean_estimate(same).standard_error == 0.0);

    SUBCASE("tiny magnitudes keep a nonzero standard error") {
        const std::vector<double> tiny{1e-300, 3e-300};
        const Estimate t = mean_estimate(tiny);
        CHECK(t.value == doctest::Approx(2e-300));
        CHECK(t.standard_error == doctest::Approx(1e-300));
    }
}

TEST_CASE("parallel_for visits every index once with valid worker ids") {
    for (unsigned threads : {1u, 3u, 8u}) {
        std::vector<std::atomic<int>> hits(1000);
        std::atomic<bool> bad_worker{false};
        parallel_for(hits.size(), threads, [&](std::size_t i, unsigned w) {
            hits[i]++;
            if (w >= threads) bad_worker = true;
        });
        for (auto& h : hits) REQUIRE(h.load() == 1);
        CHECK_FALSE(bad_worker.load());
    }
}

TEST_CASE("parallel_for propagates exceptions") {
    CHECK_THROWS_AS(parallel_for(10, 4, [](std::size_t i, unsigned) {
                        if (i == 7) throw std::runtime_error("boom");
                    }),
                    std::runtime_error);
}

TEST_CASE("format_number") {
    CHECK(format_number(0.0) == "0");
    CHECK(format_number(1.5) == "1.5");
    CHECK(format_number(0.1) == "0.1");
    CHECK(format_number(1e-5) == "1e-05");
    CHECK(format_number(-2.5e-7).find('e') != std::string::npos);
    CHECK(format_number(0.25) == "0.25");
    CHECK(format_number(1234.5) == "1234.5");
    CHECK(std::stod(format_number(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("bisect_boundary") {
    const double x = bisect_boundary(0.0, 2.0, [](double v) { return v * v >= 2.0; });
    CHECK(x == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
    CHECK(x * x < 2.0);
    CHECK(std::nextafter(x, 3.0) * std::nextafter(x, 3.0) >= 2.0);
}
