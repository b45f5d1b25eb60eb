#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "pushforward/dynamics.hpp"
#include "pushforward/entropy.hpp"
#include "pushforward/errors.hpp"
#include "pushforward/experiment.hpp"
#include "pushforward/measures.hpp"
#include "pushforward/metrics.hpp"
#include "pushforward/spaces.hpp"

namespace py = pybind11;
using namespace pushforward;

namespace {

// Points cross the boundary as a float (1-D and finite spaces) or a tuple.
Point to_point(const py::handle& h) {
    if (py::isinstance<py::float_>(h) || py::isinstance<py::int_>(h)) return Point(h.cast<double>());
    return Point::from_coords(h.cast<std::vector<double>>());
}

py::object from_point(const Point& p) {
    if (p.dim() == 1) return py::float_(p[0]);
    py::tuple t(p.dim());
    for (std::size_t k = 0; k < p.dim(); ++k) t[k] = p[k];
    return std::move(t);
}

AtomicMeasure make_measure(const ModelSpace& space, const py::sequence& points, std::optional<std::vector<double>> weights) {
    const std::size_t n = py::len(points);
    if (n == 0) throw ParameterError("a measure needs at least one atom");
    std::vector<double> w = weights ? *weights : std::vector<double>(n, 1.0 / static_cast<double>(n));
    if (w.size() != n) throw ParameterError("points and weights differ in length");
    std::vector<Atom> atoms;
    for (std::size_t i = 0; i < n; ++i) atoms.push_back({to_point(points[i]), w[i]});
    return AtomicMeasure(space, std::move(atoms));
}

py::dict estimate_dict(const EntropyEstimate& e) {
    py::dict d;
    d["h_estimate"] = e.h_estimate;
    d["h_eps"] = e.h_eps;
    d["eps_list"] = e.eps_list;
    d["n_values"] = e.n_values;
    d["counts"] = e.counts;
    d["saturated"] = e.saturated;
    d["slopes"] = e.slopes;
    d["sample_size"] = e.sample_size;
    d["sample"] = e.sample;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Push-forward dynamics on spaces of probability measures";

    auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<ParameterError>(m, "ParameterError", base.ptr());
    py::register_exception<InvalidPoint>(m, "InvalidPoint", base.ptr());
    py::register_exception<EstimateInvalid>(m, "EstimateInvalid", base.ptr());
    py::register_exception<ConvergenceFailure>(m, "ConvergenceFailure", base.ptr());

    py::class_<ModelSpace>(m, "Space")
        .def_static("finite", &ModelSpace::finite, py::arg("n"))
        .def_static("circle", &ModelSpace::circle)
        .def_static("interval", &ModelSpace::interval)
        .def_static("square", &ModelSpace::square)
        .def_static("solid_torus", &ModelSpace::solid_torus)
        .def_property_readonly("name", &ModelSpace::name)
        .def_property_readonly("size", &ModelSpace::size)
        .def_property_readonly("dim", &ModelSpace::dim)
        .def("distance", [](const ModelSpace& s, py::handle a, py::handle b) { return s.distance(to_point(a), to_point(b)); })
        .def("__repr__", [](const ModelSpace& s) { return "Space(" + s.name() + ")"; });

    py::class_<SystemMap>(m, "System")
        .def_static("finite_table", &SystemMap::finite_table, py::arg("table"))
        .def_static("cycle", &SystemMap::cycle, py::arg("n"))
        .def_static("finite_doubling", &SystemMap::finite_doubling, py::arg("n"))
        .def_static("shift", &SystemMap::shift, py::arg("n"))
        .def_static("identity", &SystemMap::identity, py::arg("space"))
        .def_static("rotation", &SystemMap::rotation, py::arg("alpha"))
        .def_static("circle_doubling", &SystemMap::circle_doubling, py::arg("degree") = 2)
        .def_static("contraction", &SystemMap::contraction, py::arg("c") = 0.5, py::arg("fixed_point") = 0.5)
        .def_static("square_attractor", &SystemMap::square_attractor)
        .def_static("solenoid", &SystemMap::solenoid, py::arg("lam") = 0.25)
        .def_property_readonly("space", &SystemMap::space)
        .def_property_readonly("name", &SystemMap::name)
        .def("__call__", [](const SystemMap& s, py::handle x) -> py::object {
            auto y = s.try_evaluate(to_point(x));
            return y ? from_point(*y) : py::none();
        })
        .def("__repr__", [](const SystemMap& s) { return "System(" + s.name() + ")"; });

    py::class_<AtomicMeasure>(m, "Measure")
        .def(py::init(&make_measure), py::arg("space"), py::arg("points"), py::arg("weights") = py::none())
        .def_static("dirac", [](const ModelSpace& s, py::handle x) { return AtomicMeasure::dirac(s, to_point(x)); })
        .def_static("from_simplex",
                    [](const ModelSpace& s, std::vector<double> w) { return AtomicMeasure::from_simplex(s, w); })
        .def_property_readonly("space", &AtomicMeasure::space)
        .def_property_readonly("points", [](const AtomicMeasure& mu) {
            py::list out;
            for (const auto& a : mu.atoms()) out.append(from_point(a.point));
            return out;
        })
        .def_property_readonly("weights", [](const AtomicMeasure& mu) {
            std::vector<double> w;
            for (const auto& a : mu.atoms()) w.push_back(a.weight);
            return w;
        })
        .def_property_readonly("escaped_mass", &AtomicMeasure::escaped_mass)
        .def("to_simplex", &AtomicMeasure::to_simplex)
        .def("__len__", &AtomicMeasure::size)
        .def(py::self == py::self);

    m.def("push_forward", &push_forward, py::arg("system"), py::arg("mu"));
    m.def("iterate", [](const SystemMap& s, const AtomicMeasure& mu, std::size_t n) {
        std::vector<AtomicMeasure> out;
        for (auto& step : iterate(s, mu, n, 1).steps) out.push_back(std::move(step.measure));
        return out;
    }, py::arg("system"), py::arg("mu"), py::arg("n"));
    m.def("matrices", [](const SystemMap& s) {
        const auto mat = matrix_of(s);
        return py::make_tuple(mat.t_rows(), mat.phi_rows());
    }, py::arg("system"), "(t_matrix, phi_matrix) rows of a finite system");
    m.def("apply_matrix", [](const SystemMap& s, std::vector<double> p) { return apply_matrix(matrix_of(s), p); },
          py::arg("system"), py::arg("p"));
    m.def("invariant_measure", [](const SystemMap& s) { return invariant_measure_finite(matrix_of(s)).weights; },
          py::arg("system"));

    m.def("wasserstein", [](const AtomicMeasure& a, const AtomicMeasure& b, double p) { return wasserstein(a, b, p).value; },
          py::arg("mu"), py::arg("nu"), py::arg("p") = 1.0);
    m.def("prokhorov", py::overload_cast<const AtomicMeasure&, const AtomicMeasure&>(&prokhorov), py::arg("mu"),
          py::arg("nu"));
    m.def("weak_star", [](const AtomicMeasure& a, const AtomicMeasure& b, std::size_t terms) {
        const auto d = weak_star(a, b, WeakStarBasis(a.space(), terms));
        return py::make_tuple(d.value, d.tail_bound);
    }, py::arg("mu"), py::arg("nu"), py::arg("terms") = 20, "(truncated value, tail bound)");

    m.def("quantize", [](const AtomicMeasure& mu, double delta) { return quantize(mu, GridPartition(mu.space(), delta)); },
          py::arg("mu"), py::arg("delta"));
    m.def("dense_periodic_measure", [](const SystemMap& s, const AtomicMeasure& target, double delta) {
        auto r = dense_periodic_measure(s, target, GridPartition(s.space(), delta));
        py::list orbit;
        for (const auto& q : r.orbit) orbit.append(from_point(q));
        return py::make_tuple(r.measure, orbit);
    }, py::arg("system"), py::arg("target"), py::arg("delta"));

    m.def("entropy_base", [](const SystemMap& s, std::vector<double> eps, std::vector<std::size_t> n, std::size_t per_axis,
                             std::size_t threads) { return estimate_dict(entropy_base(s, eps, n, per_axis, threads)); },
          py::arg("system"), py::arg("eps_list"), py::arg("n_range"), py::arg("per_axis") = 1 << 14,
          py::arg("threads") = 1);
    m.def("entropy_embedded", [](const SystemMap& s, std::size_t k, const std::string& metric, std::vector<double> eps,
                                 std::vector<std::size_t> n, std::size_t per_axis, std::size_t threads) {
        return estimate_dict(entropy_embedded_Dn(s, k, parse_metric(metric), eps, n, per_axis, threads));
    }, py::arg("system"), py::arg("n_embed"), py::arg("metric"), py::arg("eps_list"), py::arg("n_range"),
          py::arg("per_axis") = 0, py::arg("threads") = 1);
    m.def("entropy_product", [](const SystemMap& a, const SystemMap& b, std::vector<double> eps,
                                std::vector<std::size_t> n, std::size_t per_axis, std::size_t threads) {
        return estimate_dict(entropy_product(a, b, eps, n, per_axis, threads));
    }, py::arg("a"), py::arg("b"), py::arg("eps_list"), py::arg("n_range"), py::arg("per_axis") = 256,
          py::arg("threads") = 1);

    m.def("run_config", [](const std::string& text, std::optional<std::size_t> threads) {
        auto config = parse_config(text);
        if (threads) config.threads = *threads;
        const auto r = run(config);
        return py::make_tuple(r.summary.dump(), r.csv);
    }, py::arg("toml_text"), py::arg("threads") = py::none(), "(summary JSON text, CSV text)");
}
