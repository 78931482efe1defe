#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "spectra/error.hpp"
#include "spectra/io.hpp"
#include "spectra/separable.hpp"

namespace py = pybind11;
using namespace spectra;

namespace {

Edge edge_from(const std::string& name)
{
    if (name == "left") return Edge::Left;
    if (name == "right") return Edge::Right;
    if (name == "down") return Edge::Down;
    if (name == "up") return Edge::Up;
    throw py::value_error("unknown edge '" + name + "' (use left, right, down, up)");
}

py::dict diagnostics_dict(const PdeDiagnostics& d)
{
    py::list steps;
    for (const auto& s : d.steps) {
        py::dict e;
        e["nx"] = s.nx;
        e["ny"] = s.ny;
        e["residual"] = s.residual;
        e["x_resolved"] = s.x_ok;
        e["y_resolved"] = s.y_ok;
        steps.append(e);
    }
    py::dict r;
    r["nx"] = d.nx;
    r["ny"] = d.ny;
    r["splitting_rank"] = d.rank;
    r["singular_values"] = d.singular_values;
    r["steps"] = steps;
    r["compat_defect"] = d.compat_defect;
    r["path"] = d.path;
    r["orientation"] = d.orientation;
    r["subproblems"] = d.subproblems;
    r["resolved"] = d.resolved;
    r["wall_time"] = d.wall_time;
    return r;
}

Solution run(const PdeProblem& p, PdeOptions o)
{
    py::gil_scoped_release release;
    return solve_pde(p, o);
}

}  // namespace

PYBIND11_MODULE(_core, m)
{
    m.doc() = "Ultraspherical spectral solver for linear PDEs on rectangles";

    auto base = py::register_exception<Error>(m, "SpectraError", PyExc_RuntimeError);
    py::register_exception<UnresolvedError>(m, "UnresolvedError", base.ptr());
    auto ill = py::register_exception<IllPosedError>(m, "IllPosedError", base.ptr());
    py::register_exception<CompatibilityError>(m, "CompatibilityError", ill.ptr());
    py::register_exception<ParseError>(m, "ParseError", base.ptr());
    py::register_exception<SchemaError>(m, "SchemaError", base.ptr());

    py::class_<Solution>(m, "Solution")
        .def_property_readonly("coeffs", [](const Solution& s) { return s.u.coeffs(); },
                               "Chebyshev coefficients, rows T_i(y), columns T_j(x)")
        .def_property_readonly("domain",
                               [](const Solution& s) {
                                   return py::make_tuple(s.u.xinterval().a(), s.u.xinterval().b(),
                                                         s.u.yinterval().a(), s.u.yinterval().b());
                               })
        .def_property_readonly("diagnostics", [](const Solution& s) { return diagnostics_dict(s.diagnostics); })
        .def("__call__", [](const Solution& s, double x, double y) { return eval2(s.u, x, y); }, py::arg("x"),
             py::arg("y"))
        .def(
            "grid",
            [](const Solution& s, const std::vector<double>& xs, const std::vector<double>& ys) {
                Matrix V(static_cast<Eigen::Index>(ys.size()), static_cast<Eigen::Index>(xs.size()));
                for (std::size_t i = 0; i < ys.size(); ++i)
                    for (std::size_t j = 0; j < xs.size(); ++j)
                        V(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = eval2(s.u, xs[j], ys[i]);
                return V;
            },
            py::arg("xs"), py::arg("ys"), "values with rows following ys and columns following xs")
        .def("to_json", [](const Solution& s) { return result_to_json(s); });

    m.def(
        "solve",
        [](const std::string& op, const std::map<std::string, std::string>& bc, const std::string& rhs,
           std::array<double, 4> domain, double tol, std::size_t max_n, double rank_tol, bool parity,
           bool strict) {
            if (!(domain[0] < domain[1]) || !(domain[2] < domain[3])) throw py::value_error("domain must be ordered");
            std::map<Edge, std::string> edges;
            for (const auto& [k, v] : bc) edges[edge_from(k)] = v;
            const PdeProblem p = make_problem(op, rhs, Interval(domain[0], domain[1]), Interval(domain[2], domain[3]), edges);
            PdeOptions o;
            o.tol = tol;
            o.max_n = max_n;
            o.rank_tol = rank_tol;
            o.parity = parity;
            o.sylvester.enforce_compatibility = strict;
            return run(p, o);
        },
        py::arg("operator"), py::arg("bc"), py::arg("rhs") = "0",
        py::arg("domain") = std::array<double, 4>{-1.0, 1.0, -1.0, 1.0}, py::arg("tol") = 1e-14,
        py::arg("max_n") = 2049, py::arg("rank_tol") = 1e-12, py::arg("parity") = true, py::arg("strict") = true,
        "Solve operator(u) = rhs with edge conditions such as {'left': 'dirichlet: 0'}.");

    m.def(
        "solve_file",
        [](const std::string& path) {
            const ProblemFile f = read_problem(path);
            return run(build_problem(f), f.options);
        },
        py::arg("path"), "Solve a spectra-pde/1 problem document.");

    m.def(
        "splitting_rank",
        [](const std::string& op, std::array<double, 4> domain, double tol) {
            const SeparableRep r = splitting_rank(
                extract_coeffs(parse_pdo(op), Interval(domain[0], domain[1]), Interval(domain[2], domain[3])), tol);
            return py::make_tuple(r.k, r.singular_values);
        },
        py::arg("operator"), py::arg("domain") = std::array<double, 4>{-1.0, 1.0, -1.0, 1.0}, py::arg("tol") = 1e-12,
        "(k, singular values) of the operator's coefficient unfolding.");

    m.def(
        "solve_ode",
        [](const std::string& op, const std::vector<std::string>& bcs, const std::string& rhs,
           std::array<double, 2> domain, double tol) {
            const Interval I(domain[0], domain[1]);
            OdeProblem p;
            p.op = extract_odo(parse_pdo(op), I);
            for (const auto& t : bcs) {
                OdeCondition c = parse_ode_bc(t);
                p.constraints.push_back(std::move(c.functional));
                p.values.push_back(c.value);
            }
            const Function2 f = to_function(parse_pdo(rhs));
            p.rhs = interp1_adaptive([&f](double x) { return f(x, 0.0); }, I);
            OdeOptions o;
            o.tol = tol;
            const OdeSolution s = solve_ode(p, o);
            return s.u.coeffs();
        },
        py::arg("operator"), py::arg("bc"), py::arg("rhs") = "0",
        py::arg("domain") = std::array<double, 2>{-1.0, 1.0}, py::arg("tol") = 1e-14,
        "Chebyshev coefficients of the solution of a boundary-value ODE in x.");
}
