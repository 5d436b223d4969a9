#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sfpe/fixpoint.hpp"
#include "sfpe/weights.hpp"

namespace sfpe {

/// Validation failure; carries one message per offending key path.
class ConfigError : public std::runtime_error {
  public:
    explicit ConfigError(std::vector<std::string> errors);
    const std::vector<std::string>& errors() const noexcept { return errors_; }

  private:
    std::vector<std::string> errors_;
};

struct ModelSpec {
    std::string type = "cascade";  // cascade | deterministic | finite_atoms
    int n = 2;
    double theta = 0.5;
    std::vector<double> weights;
    std::vector<Atom> atoms;

    WeightModel build() const;
};

struct GridConfig {
    std::string mode = "interp-loglinear";  // or lattice-step
    double lo = 1e-6;
    double hi = 1e6;
    std::size_t points = 512;
    std::optional<double> r;  // lattice ratio; detected from the model when absent
    std::vector<double> residues{1.0};
    int n_min = -40;
    int n_max = 40;
};

struct McConfig {
    int depth = 12;
    std::size_t replicates = 10000;
    std::uint64_t seed = 0;
    std::size_t node_cap = kDefaultNodeCap;
};

struct CurveConfig {
    std::string type = "weibull";  // weibull | point_mass | mixture
    double c = 1.0;
    double beta = 1.0;
};

struct ModulationConfig {
    std::string type = "constant";  // constant | tabulated
    double c = 1.0;
    double r = 0.0;
    std::vector<double> residues;
    std::vector<double> values;

    PeriodicModulation build() const;
};

struct SeedConfig {
    std::vector<double> s;
    std::vector<double> values;
};

/// Command-specific settings; every field is optional in the document.
struct Options {
    std::optional<CurveConfig> curve;
    std::optional<std::string> op;       // "min" | "sum"
    std::optional<std::string> mixture;  // "weibull" | "stable"
    std::optional<ModulationConfig> modulation;
    std::optional<double> tolerance;
    std::optional<double> z_max;
    std::optional<double> clamp_threshold;
    std::optional<double> scale;
    std::optional<int> cascade_depth;
    std::optional<std::vector<int>> check_range;
    std::optional<SeedConfig> seed_function;
    std::optional<std::vector<int>> n_range;
    std::optional<std::vector<double>> interval;
    std::optional<std::vector<double>> escape_x;
    std::optional<int> max_iter;
    std::optional<std::vector<double>> beta_grid;
};

struct RunConfig {
    ModelSpec model;
    bool alpha_auto = false;
    std::optional<double> alpha;
    std::optional<GridConfig> grid;
    McConfig mc;
    Options options;
    std::string output = "sfpe";
};

/// Parses and validates a JSON document. Unknown keys, type mismatches and
/// invariant violations are collected with their key paths.
RunConfig parse_config(const std::string& document);

/// Canonical JSON (sorted keys, two-space indent); parse_config inverts it.
std::string to_json(const RunConfig& config);

/// FNV-1a 64-bit hash of the canonical JSON, ignoring the output prefix.
std::uint64_t config_hash(const RunConfig& config);

/// Explicit alpha, or the characteristic exponent when alpha is "auto".
/// Empty when "auto" finds no exponent or alpha is absent.
std::optional<double> resolve_alpha(const RunConfig& config, std::string* reason = nullptr);

/// Grid from the config; a lattice grid without r uses the model's lattice.
GridSpec resolve_grid(const RunConfig& config, const WeightModel& model);

}  // namespace sfpe
