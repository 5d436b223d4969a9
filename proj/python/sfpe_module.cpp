#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <utility>
#include <vector>

#include "sfpe/cascade.hpp"
#include "sfpe/fixpoint.hpp"
#include "sfpe/wbp.hpp"
#include "sfpe/weights.hpp"

namespace py = pybind11;
using namespace sfpe;

namespace {

WeightModel finite_atoms(const std::vector<std::pair<double, std::vector<double>>>& atoms) {
    std::vector<Atom> out;
    for (const auto& [p, w] : atoms) out.push_back({p, w});
    return WeightModel::finite_atoms(std::move(out));
}

std::optional<double> exponent(const WeightModel& m) { return characteristic_exponent(m).alpha; }

std::vector<std::pair<double, double>> increments(const WeightModel& m, double alpha) {
    std::vector<std::pair<double, double>> out;
    for (const auto& a : increment_distribution(m, alpha).atoms) out.emplace_back(a.location, a.mass);
    return out;
}

// (mean, standard error) of W_n for n = 0..depth.
std::vector<std::pair<double, double>> martingale_means(const WeightModel& m, double alpha, int depth,
                                                        std::size_t replicates, std::uint64_t seed,
                                                        unsigned threads) {
    py::gil_scoped_release release;
    const auto tr = simulate_replicates(m, alpha, depth, replicates, seed, kDefaultNodeCap, threads);
    std::vector<std::pair<double, double>> out;
    for (int n = 0; n <= depth; ++n) {
        const auto col = tr.w_column(n);
        const auto e = mean_estimate(col);
        out.emplace_back(e.value, e.standard_error);
    }
    return out;
}

py::dict escape(int n, double theta, double x, int max_iter) {
    const auto r = escape_check({n, theta}, x, max_iter);
    py::dict d;
    d["trajectory"] = r.trajectory;
    d["exceeded_at"] = r.exceeded_at;
    d["reached_one_at"] = r.reached_one_at;
    return d;
}

std::pair<std::vector<double>, std::vector<double>> extend(int n, double theta, std::vector<double> s,
                                                           std::vector<double> values, int n_lo, int n_hi) {
    const Curve c = extend_from_seed({n, theta}, SeedFunction{std::move(s), std::move(values)}, n_lo, n_hi);
    return {{c.grid().begin(), c.grid().end()}, {c.values().begin(), c.values().end()}};
}

// Sup-norm residual of exp(-c t^beta) on the lattice r^n, n in [n_min, n_max].
double weibull_residual(const WeightModel& m, const std::string& op, double r, int n_min, int n_max, double c,
                        double beta) {
    const auto grid = GridSpec::lattice(r, {1.0}, n_min, n_max);
    const bool is_min = op == "min";
    if (!is_min && op != "sum") throw py::value_error("op must be 'min' or 'sum'");
    const Curve f = weibull_curve(is_min ? CurveKind::survival : CurveKind::laplace, grid, c, beta);
    return fixed_point_residual(f, m, is_min ? OperatorKind::min : OperatorKind::sum).sup_norm;
}

}  // namespace

PYBIND11_MODULE(_core, mod) {
    mod.doc() = "Smoothing-transform fixed points: weights, branching processes and cascades";

    py::class_<WeightModel>(mod, "WeightModel")
        .def_static("cascade", &WeightModel::cascade, py::arg("n"), py::arg("theta"))
        .def_static("deterministic", &WeightModel::deterministic, py::arg("weights"))
        .def_static("finite_atoms", &finite_atoms, py::arg("atoms"),
                    "atoms: list of (probability, weights) pairs")
        .def("describe", &WeightModel::describe)
        .def("__repr__", &WeightModel::describe);

    mod.def("moment_m", &moment_m, py::arg("model"), py::arg("beta"));
    mod.def("characteristic_exponent", &exponent, py::arg("model"),
            "Minimal root of m(alpha) = 1, or None.");
    mod.def("unit_count_distribution", &unit_count_distribution, py::arg("model"));
    mod.def("extinction_probability",
            [](const std::vector<double>& p) { return extinction_probability(p); }, py::arg("offspring"));
    mod.def("increment_distribution", &increments, py::arg("model"), py::arg("alpha"));
    mod.def("martingale_means", &martingale_means, py::arg("model"), py::arg("alpha"), py::arg("depth"),
            py::arg("replicates"), py::arg("seed"), py::arg("threads") = 1);
    mod.def("weibull_residual", &weibull_residual, py::arg("model"), py::arg("op"), py::arg("r"),
            py::arg("n_min"), py::arg("n_max"), py::arg("c") = 1.0, py::arg("beta") = 1.0);

    mod.def("classify", [](int n, double theta) { return to_string(classify({n, theta})); }, py::arg("n"),
            py::arg("theta"));
    mod.def("g_eval", [](int n, double theta, double u) { return g_eval({n, theta}, u); }, py::arg("n"),
            py::arg("theta"), py::arg("u"));
    mod.def("g_inverse", [](int n, double theta, double y) { return g_inverse({n, theta}, y); }, py::arg("n"),
            py::arg("theta"), py::arg("y"));
    mod.def("a_sequence", [](int n, double theta, int depth) { return a_sequence({n, theta}, depth); },
            py::arg("n"), py::arg("theta"), py::arg("depth"));
    mod.def("escape_check", &escape, py::arg("n"), py::arg("theta"), py::arg("x"), py::arg("max_iter") = 20);
    mod.def("extend_from_seed", &extend, py::arg("n"), py::arg("theta"), py::arg("s"), py::arg("values"),
            py::arg("n_lo"), py::arg("n_hi"));
}
