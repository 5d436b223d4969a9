#include <doctest.h>

#include <cmath>
#include <string>

#include "sfpe/config.hpp"

using namespace sfpe;

namespace {

std::string errors_of(const std::string& doc) {
    try {
        parse_config(doc);
    } catch (const ConfigError& e) {
        std::string all;
        for (const auto& m : e.errors()) all += m + "\n";
        return all;
    }
    return "";
}

}  // namespace

TEST_CASE("alpha auto resolves to the characteristic exponent") {
    const auto cfg = parse_config(R"({"model": {"type": "cascade", "N": 2, "theta": 0.75},
                                      "alpha": "auto", "mc": {"seed": 1}})");
    CHECK(cfg.alpha_auto);
    const auto a = resolve_alpha(cfg);
    REQUIRE(a);
    CHECK(std::fabs(*a - std::log(3.0)) <= 1e-10);

    const auto crit = parse_config(R"({"model": {"type": "cascade", "N": 2, "theta": 0.5},
                                       "alpha": "auto", "mc": {"seed": 1}})");
    std::string why;
    CHECK_FALSE(resolve_alpha(crit, &why));
    CHECK_FALSE(why.empty());
}

TEST_CASE("validation errors carry key paths") {
    CHECK(errors_of(R"({"model": {"type": "cascade", "N": 2, "theta": 1.5}, "mc": {"seed": 1}})")
              .find("model.theta: theta must lie in (0,1)") != std::string::npos);
    const std::string missing = errors_of(R"({"model": {"type": "cascade", "N": 2, "theta": 0.5}})");
    CHECK(missing.find("missing required key(s)") != std::string::npos);
    CHECK(missing.find("mc.seed") != std::string::npos);
    CHECK(errors_of(R"({"model": {"type": "cascade", "N": 2, "theta": 0.5}, "mc": {"seed": 1, "sed": 2}})")
              .find("mc.sed: unknown key") != std::string::npos);
    CHECK(errors_of(R"({"model": {"type": "cascade", "N": 2, "theta": 0.5}, "mc": {"seed": 1},
                        "options": {"curve": {"type": "weibull", "colour": 1}}})")
              .find("options.curve.colour: unknown key") != std::string::npos);
    CHECK(errors_of(R"({"model": {"type": "cascade", "N": "two", "theta": 0.5}, "mc": {"seed": 1}})")
              .find("model.N: expected integer, got string") != std::string::npos);
    CHECK(errors_of(R"({"model": {"type": "cascade", "N": 2, "theta": 0.5}, "mc": {"seed": -1}})")
              .find("mc.seed") != std::string::npos);
    CHECK(errors_of(R"({"model": {"type": "finite_atoms", "atoms": [{"probability": 0.4, "weights": [1]}]},
                        "mc": {"seed": 1}})")
              .find("model:") != std::string::npos);
    CHECK(errors_of("{not json").find("syntax error") != std::string::npos);
    CHECK(errors_of(R"({"model": {"type": "cascade", "N": 2, "theta": 0.5}, "mc": {"seed": 1},
                        "grid": {"mode": "spline"}})")
              .find("grid.mode") != std::string::npos);
}

TEST_CASE("several errors are reported together") {
    try {
        parse_config(R"({"model": {"type": "cascade", "N": 1, "theta": 2}, "extra": 1})");
        FAIL("expected a ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.errors().size() >= 4);
    }
}

TEST_CASE("round trip is lossless") {
    const std::string doc = R"({
      "model": {"type": "finite_atoms", "atoms": [{"probability": 0.3, "weights": [0.5, 0.1]},
                                                 {"probability": 0.7, "weights": [0.9]}]},
      "alpha": 0.123456789012345678,
      "grid": {"mode": "lattice-step", "r": 2, "residues": [1, 1.5], "n_min": -7, "n_max": 9},
      "mc": {"seed": 18446744073709551615, "depth": 9, "replicates": 123, "node_cap": 5000},
      "options": {"curve": {"type": "mixture"}, "operator": "sum", "mixture": "stable",
                  "modulation": {"type": "tabulated", "r": 2, "residues": [1, 1.5], "values": [1, 0.8]},
                  "tolerance": 1e-9, "z_max": 4, "clamp_threshold": 0.1, "scale": 2.5, "cascade_depth": 12,
                  "check_range": [-1, 12], "seed_function": {"s": [1.5, 2.718281828459045], "values": [0.4, 0.3]},
                  "n_range": [-3, 4], "interval": [0, 3], "escape_x": [0.01], "max_iter": 7, "beta_grid": [0, 1]},
      "output": "runs/x"
    })";
    const auto cfg = parse_config(doc);
    CHECK(cfg.mc.seed == 18446744073709551615ULL);
    const std::string once = to_json(cfg);
    const auto back = parse_config(once);
    CHECK(to_json(back) == once);
    CHECK(config_hash(back) == config_hash(cfg));
    CHECK(*back.alpha == *cfg.alpha);

    auto other = cfg;
    other.mc.seed = 7;
    CHECK(config_hash(other) != config_hash(cfg));
    other = cfg;
    other.output = "elsewhere";
    CHECK(config_hash(other) == config_hash(cfg));
}

TEST_CASE("grid resolution") {
    const auto cfg = parse_config(R"({"model": {"type": "cascade", "N": 2, "theta": 0.75}, "mc": {"seed": 1},
                                      "grid": {"mode": "lattice-step", "n_min": -2, "n_max": 2}})");
    const auto g = resolve_grid(cfg, cfg.model.build());
    CHECK(g.r == doctest::Approx(std::exp(1.0)));
    CHECK(g.build().size() == 5);

    const auto cont = parse_config(R"({"model": {"type": "deterministic", "weights": [0.5, 0.3333]},
                                       "mc": {"seed": 1}, "grid": {"mode": "lattice-step"}})");
    CHECK_THROWS(resolve_grid(cont, cont.model.build()));
}
