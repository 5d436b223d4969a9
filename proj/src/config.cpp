#include "sfpe/config.hpp"

#include <cmath>
#include <set>

#include <json.hpp>

namespace sfpe {

using nlohmann::json;

namespace {

std::string join(const std::vector<std::string>& xs, const char* sep) {
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? sep : "") + xs[i];
    return out;
}

std::string child_path(const std::string& parent, const std::string& key) {
    return parent.empty() ? key : parent + "." + key;
}

const char* type_name(const json& j) {
    if (j.is_null()) return "null";
    if (j.is_boolean()) return "boolean";
    if (j.is_number()) return "number";
    if (j.is_string()) return "string";
    if (j.is_array()) return "array";
    return "object";
}

// Walks one JSON object, recording errors with key paths.
class Reader {
  public:
    Reader(const json& j, std::string path, std::vector<std::string>& errors,
           std::vector<std::string>& missing, std::set<std::string> allowed)
        : j_(j), path_(std::move(path)), errors_(errors), missing_(missing) {
        for (const auto& [key, value] : j_.items())
            if (!allowed.count(key)) errors_.push_back(child_path(path_, key) + ": unknown key");
    }

    bool has(const std::string& key) const { return j_.contains(key); }
    const json& raw(const std::string& key) const { return j_.at(key); }
    std::string path(const std::string& key) const { return child_path(path_, key); }
    void error(const std::string& key, const std::string& msg) { errors_.push_back(path(key) + ": " + msg); }

    void require(const std::string& key) {
        if (!has(key)) missing_.push_back(path(key));
    }

    template <class T>
    bool get(const std::string& key, T& out) {
        if (!has(key)) return false;
        return convert(j_.at(key), path(key), out);
    }

    template <class T>
    bool get(const std::string& key, std::optional<T>& out) {
        if (!has(key)) return false;
        T v{};
        if (!convert(j_.at(key), path(key), v)) return false;
        out = std::move(v);
        return true;
    }

    bool convert(const json& v, const std::string& p, double& out) {
        if (!v.is_number()) return mismatch(p, "number", v);
        out = v.get<double>();
        if (!std::isfinite(out)) return fail(p, "must be finite");
        return true;
    }
    bool convert(const json& v, const std::string& p, int& out) {
        if (!v.is_number_integer()) return mismatch(p, "integer", v);
        const auto x = v.get<std::int64_t>();
        if (x < -1'000'000'000 || x > 1'000'000'000) return fail(p, "integer out of range");
        out = static_cast<int>(x);
        return true;
    }
    bool convert(const json& v, const std::string& p, std::uint64_t& out) {
        if (!v.is_number_unsigned()) return mismatch(p, "nonnegative integer", v);
        out = v.get<std::uint64_t>();
        return true;
    }
    bool convert(const json& v, const std::string& p, std::string& out) {
        if (!v.is_string()) return mismatch(p, "string", v);
        out = v.get<std::string>();
        return true;
    }
    template <class T>
    bool convert(const json& v, const std::string& p, std::vector<T>& out) {
        if (!v.is_array()) return mismatch(p, "array", v);
        out.clear();
        bool ok = true;
        for (std::size_t i = 0; i < v.size(); ++i) {
            T x{};
            ok = convert(v[i], p + "[" + std::to_string(i) + "]", x) && ok;
            out.push_back(x);
        }
        return ok;
    }

  private:
    bool mismatch(const std::string& p, const char* want, const json& v) {
        errors_.push_back(p + ": expected " + std::string(want) + ", got " + type_name(v));
        return false;
    }
    bool fail(const std::string& p, const std::string& msg) {
        errors_.push_back(p + ": " + msg);
        return false;
    }

    const json& j_;
    std::string path_;
    std::vector<std::string>& errors_;
    std::vector<std::string>& missing_;
};

struct Ctx {
    std::vector<std::string> errors;
    std::vector<std::string> missing;

    bool object(const json& j, const std::string& p) {
        if (j.is_object()) return true;
        errors.push_back(p + ": expected object, got " + type_name(j));
        return false;
    }
};

void parse_model(const json& j, Ctx& ctx, ModelSpec& m) {
    if (!ctx.object(j, "model")) return;
    Reader r(j, "model", ctx.errors, ctx.missing, {"type", "N", "theta", "weights", "atoms"});
    r.require("type");
    if (!r.get("type", m.type)) return;
    auto forbid = [&](std::initializer_list<const char*> keys) {
        for (const char* k : keys)
            if (r.has(k)) r.error(k, "not used by model type '" + m.type + "'");
    };
    if (m.type == "cascade") {
        forbid({"weights", "atoms"});
        r.require("N");
        r.require("theta");
        if (r.get("N", m.n) && m.n < 2) r.error("N", "cascade: N must be an integer >= 2");
        if (r.get("theta", m.theta) && !(m.theta > 0.0 && m.theta < 1.0))
            r.error("theta", "theta must lie in (0,1)");
    } else if (m.type == "deterministic") {
        forbid({"N", "theta", "atoms"});
        r.require("weights");
        r.get("weights", m.weights);
    } else if (m.type == "finite_atoms") {
        forbid({"N", "theta", "weights"});
        r.require("atoms");
        if (!r.has("atoms")) return;
        const json& a = r.raw("atoms");
        if (!a.is_array()) {
            r.error("atoms", std::string("expected array, got ") + type_name(a));
            return;
        }
        for (std::size_t i = 0; i < a.size(); ++i) {
            const std::string p = "model.atoms[" + std::to_string(i) + "]";
            if (!ctx.object(a[i], p)) continue;
            Reader ar(a[i], p, ctx.errors, ctx.missing, {"probability", "weights"});
            ar.require("probability");
            ar.require("weights");
            Atom atom;
            ar.get("probability", atom.probability);
            ar.get("weights", atom.weights);
            m.atoms.push_back(std::move(atom));
        }
    } else {
        r.error("type", "unknown model type '" + m.type + "' (expected cascade, deterministic or finite_atoms)");
    }
}

void parse_grid(const json& j, Ctx& ctx, GridConfig& g) {
    if (!ctx.object(j, "grid")) return;
    Reader r(j, "grid", ctx.errors, ctx.missing, {"mode", "lo", "hi", "points", "r", "residues", "n_min", "n_max"});
    r.get("mode", g.mode);
    if (g.mode != "interp-loglinear" && g.mode != "lattice-step")
        r.error("mode", "expected 'interp-loglinear' or 'lattice-step'");
    if (r.get("lo", g.lo) && !(g.lo > 0.0)) r.error("lo", "must be > 0");
    if (r.get("hi", g.hi) && !(g.hi > g.lo)) r.error("hi", "must exceed lo");
    if (r.get("points", g.points) && g.points < 2) r.error("points", "must be >= 2");
    if (r.get("r", g.r) && !(*g.r > 1.0)) r.error("r", "must be > 1");
    if (r.get("residues", g.residues) && g.residues.empty()) r.error("residues", "must not be empty");
    r.get("n_min", g.n_min);
    if (r.get("n_max", g.n_max) && g.n_max < g.n_min) r.error("n_max", "must be >= n_min");
}

void parse_mc(const json& j, Ctx& ctx, McConfig& m) {
    if (!ctx.object(j, "mc")) return;
    Reader r(j, "mc", ctx.errors, ctx.missing, {"depth", "replicates", "seed", "node_cap"});
    r.require("seed");
    r.get("seed", m.seed);
    if (r.get("depth", m.depth) && (m.depth < 0 || m.depth > 64)) r.error("depth", "must lie in [0, 64]");
    if (r.get("replicates", m.replicates) && m.replicates < 2) r.error("replicates", "must be >= 2");
    if (r.get("node_cap", m.node_cap) && m.node_cap < 1) r.error("node_cap", "must be >= 1");
}

void parse_pair(Reader& r, const char* key, auto& out) {
    if (r.get(key, out) && (out->size() != 2 || (*out)[0] > (*out)[1]))
        r.error(key, "expected [lo, hi] with lo <= hi");
}

void parse_options(const json& j, Ctx& ctx, Options& o) {
    if (!ctx.object(j, "options")) return;
    Reader r(j, "options", ctx.errors, ctx.missing,
             {"curve", "operator", "mixture", "modulation", "tolerance", "z_max", "clamp_threshold", "scale",
              "cascade_depth", "check_range", "seed_function", "n_range", "interval", "escape_x", "max_iter",
              "beta_grid"});
    if (r.has("curve") && ctx.object(r.raw("curve"), r.path("curve"))) {
        Reader c(r.raw("curve"), r.path("curve"), ctx.errors, ctx.missing, {"type", "c", "beta"});
        CurveConfig cc;
        c.get("type", cc.type);
        if (cc.type != "weibull" && cc.type != "point_mass" && cc.type != "mixture")
            c.error("type", "expected weibull, point_mass or mixture");
        if (c.get("c", cc.c) && !(cc.c > 0.0)) c.error("c", "must be > 0");
        if (c.get("beta", cc.beta) && !(cc.beta > 0.0)) c.error("beta", "must be > 0");
        o.curve = cc;
    }
    if (r.get("operator", o.op) && *o.op != "min" && *o.op != "sum") r.error("operator", "expected 'min' or 'sum'");
    if (r.get("mixture", o.mixture) && *o.mixture != "weibull" && *o.mixture != "stable")
        r.error("mixture", "expected 'weibull' or 'stable'");
    if (r.has("modulation") && ctx.object(r.raw("modulation"), r.path("modulation"))) {
        Reader m(r.raw("modulation"), r.path("modulation"), ctx.errors, ctx.missing,
                 {"type", "c", "r", "residues", "values"});
        ModulationConfig mc;
        m.get("type", mc.type);
        if (mc.type == "constant") {
            if (m.get("c", mc.c) && !(mc.c > 0.0)) m.error("c", "must be > 0");
            for (const char* k : {"r", "residues", "values"})
                if (m.has(k)) m.error(k, "not used by a constant modulation");
        } else if (mc.type == "tabulated") {
            if (m.has("c")) m.error("c", "not used by a tabulated modulation");
            m.require("r");
            m.require("residues");
            m.require("values");
            m.get("r", mc.r);
            m.get("residues", mc.residues);
            m.get("values", mc.values);
        } else {
            m.error("type", "expected 'constant' or 'tabulated'");
        }
        o.modulation = mc;
    }
    if (r.get("tolerance", o.tolerance) && !(*o.tolerance > 0.0)) r.error("tolerance", "must be > 0");
    if (r.get("z_max", o.z_max) && !(*o.z_max > 0.0)) r.error("z_max", "must be > 0");
    if (r.get("clamp_threshold", o.clamp_threshold) && !(*o.clamp_threshold >= 0.0 && *o.clamp_threshold <= 1.0))
        r.error("clamp_threshold", "must lie in [0,1]");
    if (r.get("scale", o.scale) && !(*o.scale > 0.0)) r.error("scale", "must be > 0");
    if (r.get("cascade_depth", o.cascade_depth) && (*o.cascade_depth < 0 || *o.cascade_depth > 10000))
        r.error("cascade_depth", "must lie in [0, 10000]");
    parse_pair(r, "check_range", o.check_range);
    parse_pair(r, "n_range", o.n_range);
    parse_pair(r, "interval", o.interval);
    if (r.has("seed_function") && ctx.object(r.raw("seed_function"), r.path("seed_function"))) {
        Reader s(r.raw("seed_function"), r.path("seed_function"), ctx.errors, ctx.missing, {"s", "values"});
        SeedConfig sc;
        s.require("s");
        s.require("values");
        s.get("s", sc.s);
        s.get("values", sc.values);
        o.seed_function = sc;
    }
    r.get("escape_x", o.escape_x);
    if (r.get("max_iter", o.max_iter) && *o.max_iter < 1) r.error("max_iter", "must be >= 1");
    r.get("beta_grid", o.beta_grid);
}

json model_json(const ModelSpec& m) {
    json j{{"type", m.type}};
    if (m.type == "cascade") {
        j["N"] = m.n;
        j["theta"] = m.theta;
    } else if (m.type == "deterministic") {
        j["weights"] = m.weights;
    } else {
        json atoms = json::array();
        for (const Atom& a : m.atoms) atoms.push_back({{"probability", a.probability}, {"weights", a.weights}});
        j["atoms"] = atoms;
    }
    return j;
}

json options_json(const Options& o) {
    json j = json::object();
    if (o.curve) j["curve"] = {{"type", o.curve->type}, {"c", o.curve->c}, {"beta", o.curve->beta}};
    if (o.op) j["operator"] = *o.op;
    if (o.mixture) j["mixture"] = *o.mixture;
    if (o.modulation) {
        const auto& m = *o.modulation;
        if (m.type == "constant")
            j["modulation"] = {{"type", m.type}, {"c", m.c}};
        else
            j["modulation"] = {{"type", m.type}, {"r", m.r}, {"residues", m.residues}, {"values", m.values}};
    }
    if (o.tolerance) j["tolerance"] = *o.tolerance;
    if (o.z_max) j["z_max"] = *o.z_max;
    if (o.clamp_threshold) j["clamp_threshold"] = *o.clamp_threshold;
    if (o.scale) j["scale"] = *o.scale;
    if (o.cascade_depth) j["cascade_depth"] = *o.cascade_depth;
    if (o.check_range) j["check_range"] = *o.check_range;
    if (o.seed_function) j["seed_function"] = {{"s", o.seed_function->s}, {"values", o.seed_function->values}};
    if (o.n_range) j["n_range"] = *o.n_range;
    if (o.interval) j["interval"] = *o.interval;
    if (o.escape_x) j["escape_x"] = *o.escape_x;
    if (o.max_iter) j["max_iter"] = *o.max_iter;
    if (o.beta_grid) j["beta_grid"] = *o.beta_grid;
    return j;
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> errors)
    : std::runtime_error("invalid config: " + join(errors, "; ")), errors_(std::move(errors)) {}

WeightModel ModelSpec::build() const {
    if (type == "cascade") return WeightModel::cascade(n, theta);
    if (type == "deterministic") return WeightModel::deterministic(weights);
    if (type == "finite_atoms") return WeightModel::finite_atoms(atoms);
    throw std::invalid_argument("unknown model type '" + type + "'");
}

PeriodicModulation ModulationConfig::build() const {
    if (type == "constant") return PeriodicModulation::constant(c);
    return PeriodicModulation::tabulated(r, residues, values);
}

RunConfig parse_config(const std::string& document) {
    json root;
    try {
        root = json::parse(document);
    } catch (const json::parse_error& e) {
        throw ConfigError({std::string("syntax error: ") + e.what()});
    }
    Ctx ctx;
    RunConfig cfg;
    if (!ctx.object(root, "<document>")) throw ConfigError(ctx.errors);

    Reader top(root, "", ctx.errors, ctx.missing, {"model", "alpha", "grid", "mc", "options", "output"});
    top.require("model");
    if (top.has("model")) parse_model(root.at("model"), ctx, cfg.model);
    if (top.has("alpha")) {
        const json& a = root.at("alpha");
        if (a.is_string() && a.get<std::string>() == "auto") {
            cfg.alpha_auto = true;
        } else if (a.is_number() && std::isfinite(a.get<double>()) && a.get<double>() > 0.0) {
            cfg.alpha = a.get<double>();
        } else {
            ctx.errors.push_back("alpha: expected a positive number or \"auto\"");
        }
    }
    if (top.has("grid")) {
        GridConfig g;
        parse_grid(root.at("grid"), ctx, g);
        cfg.grid = g;
    }
    if (top.has("mc"))
        parse_mc(root.at("mc"), ctx, cfg.mc);
    else
        ctx.missing.push_back("mc.seed");
    if (top.has("options")) parse_options(root.at("options"), ctx, cfg.options);
    if (top.get("output", cfg.output) && cfg.output.empty()) top.error("output", "must not be empty");

    if (!ctx.missing.empty())
        ctx.errors.insert(ctx.errors.begin(), "missing required key(s): " + join(ctx.missing, ", ") +
                                                  " (required: model.type, model parameters, mc.seed)");
    if (ctx.errors.empty()) {
        try {
            (void)cfg.model.build();
        } catch (const std::exception& e) {
            ctx.errors.push_back(std::string("model: ") + e.what());
        }
        if (cfg.options.modulation) {
            try {
                (void)cfg.options.modulation->build();
            } catch (const std::exception& e) {
                ctx.errors.push_back(std::string("options.modulation: ") + e.what());
            }
        }
    }
    if (!ctx.errors.empty()) throw ConfigError(std::move(ctx.errors));
    return cfg;
}

std::string to_json(const RunConfig& c) {
    json j;
    j["model"] = model_json(c.model);
    if (c.alpha_auto)
        j["alpha"] = "auto";
    else if (c.alpha)
        j["alpha"] = *c.alpha;
    if (c.grid) {
        const GridConfig& g = *c.grid;
        json gj{{"mode", g.mode}, {"lo", g.lo}, {"hi", g.hi}, {"points", g.points},
                {"residues", g.residues}, {"n_min", g.n_min}, {"n_max", g.n_max}};
        if (g.r) gj["r"] = *g.r;
        j["grid"] = gj;
    }
    j["mc"] = {{"depth", c.mc.depth}, {"replicates", c.mc.replicates}, {"seed", c.mc.seed},
               {"node_cap", c.mc.node_cap}};
    j["options"] = options_json(c.options);
    j["output"] = c.output;
    return j.dump(2);
}

std::uint64_t config_hash(const RunConfig& config) {
    RunConfig c = config;
    c.output.clear();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : to_json(c)) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::optional<double> resolve_alpha(const RunConfig& config, std::string* reason) {
    if (config.alpha) return config.alpha;
    if (!config.alpha_auto) {
        if (reason) *reason = "alpha not set";
        return std::nullopt;
    }
    const ExponentResult r = characteristic_exponent(config.model.build());
    if (!r.alpha && reason) *reason = r.reason;
    return r.alpha;
}

GridSpec resolve_grid(const RunConfig& config, const WeightModel& model) {
    const GridConfig g = config.grid.value_or(GridConfig{});
    if (g.mode == "interp-loglinear") return GridSpec::log_spaced(g.lo, g.hi, g.points);
    double r = 0.0;
    if (g.r) {
        r = *g.r;
    } else {
        const LatticeInfo lat = detect_lattice(model);
        if (lat.kind != LatticeKind::geometric)
            throw std::invalid_argument("grid.r: lattice-step grid needs r, and the model is not geometric");
        r = lat.r;
    }
    return GridSpec::lattice(r, g.residues, g.n_min, g.n_max);
}

}  // namespace sfpe
