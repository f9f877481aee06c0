#include "npsh/errors.hpp"
#include "npsh/form_algebra.hpp"
#include "npsh/ma_solver.hpp"
#include "npsh/run.hpp"
#include "npsh/verifier.hpp"

#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <sstream>

namespace py = pybind11;
using namespace npsh;

namespace {

using ComplexArray = py::array_t<Complex, py::array::c_style | py::array::forcecast>;
using RealArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

HermitianMatrix herm(const ComplexMatrix& m)
{
    return HermitianMatrix(m);
}

TorusGrid make_grid(int n, int N, int active)
{
    return TorusGrid(n, N, active);
}

ScalarField scalar_from(const TorusGrid& grid, const RealArray& a)
{
    if (static_cast<std::size_t>(a.size()) != grid.size()) throw std::invalid_argument("scalar field has the wrong size");
    return ScalarField(grid, std::vector<double>(a.data(), a.data() + a.size()));
}

MatrixField matrix_from(const TorusGrid& grid, const ComplexArray& a)
{
    const auto n = static_cast<std::size_t>(grid.n());
    if (static_cast<std::size_t>(a.size()) != grid.size() * n * n) {
        throw std::invalid_argument("matrix field must have grid.size() * n * n entries");
    }
    return MatrixField(grid, std::vector<Complex>(a.data(), a.data() + a.size()));
}

py::array_t<double> to_numpy(const ScalarField& f, int N, int axes)
{
    std::vector<py::ssize_t> shape(static_cast<std::size_t>(axes), N);
    py::array_t<double> out(shape);
    std::copy(f.values().begin(), f.values().end(), out.mutable_data());
    return out;
}

ProblemSpec make_problem(const ComplexMatrix& g, const ComplexArray& h, const RealArray& F, int N, int active)
{
    const TorusGrid grid = make_grid(static_cast<int>(g.rows()), N, active);
    ProblemSpec spec{herm(g), matrix_from(grid, h), scalar_from(grid, F)};
    spec.validate();
    return spec;
}

py::dict report_dict(const CheckReport& r)
{
    py::dict d;
    d["check_name"] = r.check_name;
    d["instances"] = r.instances;
    d["max_residual"] = r.max_residual;
    d["tolerance"] = r.tolerance;
    d["pass"] = r.pass;
    d["hard"] = r.hard;
    d["notes"] = r.notes;
    d["values"] = r.values;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m)
{
    m.doc() = "Monge-Ampere equation for (n-1)-plurisubharmonic functions on flat complex tori";

    static py::exception<Error> base(m, "NpshError");
    py::register_exception<ConeError>(m, "ConeError", base.ptr());
    py::register_exception<SingularMetricError>(m, "SingularMetricError", base.ptr());
    py::register_exception<LinearSolveError>(m, "LinearSolveError", base.ptr());
    py::register_exception<ContinuationError>(m, "ContinuationError", base.ptr());
    py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
    py::register_exception<FieldIoError>(m, "FieldIoError", base.ptr());

    m.def("trace_pair", [](const ComplexMatrix& g, const ComplexMatrix& a) { return trace_pair(herm(g), herm(a)); });
    m.def("wedge11_invariant", [](const ComplexMatrix& g, const ComplexMatrix& a, const ComplexMatrix& b) {
        return wedge11_invariant(herm(g), herm(a), herm(b));
    });
    m.def("wedge_power", [](const ComplexMatrix& a) { return wedge_power(herm(a)).matrix(); },
          "Coefficient matrix of a^{n-1}.");
    m.def("hodge_star_11", [](const ComplexMatrix& g, const ComplexMatrix& a) { return hodge_star_11(herm(g), herm(a)).matrix(); });
    m.def("hodge_star_n1", [](const ComplexMatrix& g, const ComplexMatrix& psi) {
        return hodge_star_n1(herm(g), FormTopMinusOne(herm(psi))).matrix();
    });
    m.def("det_form_top_minus_one", [](const ComplexMatrix& psi) { return det_form_top_minus_one(FormTopMinusOne(herm(psi))); });
    m.def("root_n_minus_one", [](const ComplexMatrix& g, const ComplexMatrix& psi) {
        return root_n_minus_one(herm(g), FormTopMinusOne(herm(psi))).matrix();
    });
    m.def("p_operator", [](const ComplexMatrix& g, const ComplexMatrix& h, const ComplexMatrix& hess) {
        return p_operator(herm(g), herm(h), herm(hess)).matrix();
    });
    m.def("cone_margin", [](const ComplexMatrix& g, const ComplexMatrix& gt) { return cone_margin(herm(g), herm(gt)); });
    m.def("is_n_minus_one_psh", [](const ComplexMatrix& hess, double tol) { return is_n_minus_one_psh(herm(hess), tol); },
          py::arg("hess"), py::arg("tol") = 1e-10);

    m.def(
        "manufacture",
        [](const ComplexMatrix& g, const ComplexArray& h, const RealArray& u_star, int N, int active, double margin_min) {
            const TorusGrid grid = make_grid(static_cast<int>(g.rows()), N, active);
            const ProblemSpec spec = manufacture(herm(g), matrix_from(grid, h), scalar_from(grid, u_star), margin_min);
            return to_numpy(spec.F, N, grid.real_axes());
        },
        py::arg("g"), py::arg("h"), py::arg("u_star"), py::arg("N"), py::arg("active") = -1, py::arg("margin_min") = 0.1,
        "F such that (u_star, 0) solves the discrete equation.");

    m.def(
        "residual",
        [](const ComplexMatrix& g, const ComplexArray& h, const RealArray& F, const RealArray& u, double b, double t, int N,
           int active) {
            const ProblemSpec spec = make_problem(g, h, F, N, active);
            return to_numpy(residual(spec, scalar_from(spec.grid(), u), b, t), N, spec.grid().real_axes());
        },
        py::arg("g"), py::arg("h"), py::arg("F"), py::arg("u"), py::arg("b"), py::arg("t") = 1.0, py::arg("N"),
        py::arg("active") = -1);

    m.def(
        "solve",
        [](const ComplexMatrix& g, const ComplexArray& h, const RealArray& F, int N, int active, int steps, double tol) {
            const ProblemSpec spec = make_problem(g, h, F, N, active);
            SolverOptions opts;
            opts.tol = tol;
            std::optional<SolveResult> solved;
            {
                py::gil_scoped_release release;
                solved.emplace(continuity_solve(spec, uniform_schedule(steps), opts));
            }
            const SolveResult& res = *solved;
            const int axes = spec.grid().real_axes();
            py::dict d;
            d["u"] = to_numpy(res.state.u, N, axes);
            d["u_sup"] = to_numpy(res.u_sup, N, axes);
            d["b"] = res.state.b;
            d["residual_inf"] = res.state.residual_inf;
            d["min_cone_margin"] = res.min_accepted_margin;
            d["krylov_iterations"] = res.krylov_iterations;
            return d;
        },
        py::arg("g"), py::arg("h"), py::arg("F"), py::arg("N"), py::arg("active") = -1, py::arg("steps") = 8,
        py::arg("tol") = 1e-10,
        "Continuity-method solve. h has shape (size, n, n) in row-major grid order, F has size entries.");

    m.def(
        "identity_suite",
        [](const std::vector<int>& dims, int trials, std::uint64_t seed) {
            py::list out;
            for (const auto& r : identity_suite(dims, trials, seed)) out.append(report_dict(r));
            return out;
        },
        py::arg("dims") = std::vector<int>{2, 3, 4}, py::arg("trials") = 1000, py::arg("seed") = 0);

    m.def(
        "run",
        [](const std::string& config, bool quiet, int threads) {
            std::ostringstream log;
            int code = 0;
            {
                py::gil_scoped_release release;
                code = run(config, RunOptions{quiet, threads}, log);
            }
            return py::make_tuple(code, log.str());
        },
        py::arg("config"), py::arg("quiet") = true, py::arg("threads") = 0,
        "Runs a YAML configuration; returns (exit_code, log).");
}
