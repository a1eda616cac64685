// Python bindings: registered example systems, integration, boundary-value
// solves, isotropy certificates, constraints and scenario runs.

#include "hamfield/constraints.hpp"
#include "hamfield/example_systems.hpp"
#include "hamfield/lagrangian.hpp"
#include "hamfield/scenario.hpp"
#include "hamfield/selftest.hpp"

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace hamfield;

namespace {

IntegratorConfig integrator(double step, const std::string& scheme) {
  IntegratorConfig c;
  c.step = step;
  c.scheme = scheme_from_string(scheme);
  c.validate();
  return c;
}

ShootingConfig shooting(double step, int seed_count, double seed_box) {
  ShootingConfig c;
  c.integrator.step = step;
  c.seed_count = seed_count;
  c.seed_box = seed_box;
  c.validate();
  return c;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Hamiltonian mechanics on [0, 1] as a field theory with boundary";
  m.attr("__version__") = library_version();

  py::register_exception<Error>(m, "HamfieldError", PyExc_RuntimeError);
  py::register_exception<SchemaError>(m, "SchemaError", PyExc_ValueError);

  py::class_<HamiltonianSystem>(m, "HamiltonianSystem")
      .def_readonly("name", &HamiltonianSystem::name)
      .def_property_readonly("dim", &HamiltonianSystem::dim)
      .def_readonly("separable", &HamiltonianSystem::separable)
      .def("hamiltonian", [](const HamiltonianSystem& s, const Vec& u, const Vec& p, double t) { return s.hamiltonian(t, u, p); },
           py::arg("u"), py::arg("p"), py::arg("t") = 0.0)
      .def("vector_field",
           [](const HamiltonianSystem& s, const Vec& u, const Vec& p, double t) {
             const auto v = hamiltonian_vector_field(s, t, u, p);
             return std::make_pair(v.du, v.dp);
           },
           py::arg("u"), py::arg("p"), py::arg("t") = 0.0)
      .def("__repr__", [](const HamiltonianSystem& s) { return "<HamiltonianSystem " + s.name + ">"; });

  m.def("example_names", &example_names);
  m.def("make_system", [](const std::string& name, const std::map<std::string, double>& params) { return make_example(name, params).system; },
        py::arg("name"), py::arg("params") = std::map<std::string, double>{});
  m.def("check_facts",
        [](const std::string& name, const std::map<std::string, double>& params) {
          py::list out;
          for (const auto& f : make_example(name, params).facts) {
            const double v = f.measure();
            out.append(py::dict(py::arg("key") = f.key, py::arg("measured") = v, py::arg("tolerance") = f.tolerance,
                                py::arg("pass") = v <= f.tolerance));
          }
          return out;
        },
        py::arg("name"), py::arg("params") = std::map<std::string, double>{});

  py::class_<FlowResult>(m, "FlowResult")
      .def_readonly("times", &FlowResult::times)
      .def_readonly("positions", &FlowResult::positions)
      .def_readonly("momenta", &FlowResult::momenta)
      .def_property_readonly("status", [](const FlowResult& f) { return std::string(to_string(f.status.kind)); })
      .def_property_readonly("t_end", [](const FlowResult& f) { return f.status.t; })
      .def_property_readonly("completed", &FlowResult::completed);

  m.def("integrate_flow",
        [](const HamiltonianSystem& s, const Vec& u0, const Vec& p0, double step, const std::string& scheme) {
          return integrate_flow(s, u0, p0, integrator(step, scheme));
        },
        py::arg("system"), py::arg("u0"), py::arg("p0"), py::arg("step") = 1e-3, py::arg("scheme") = "implicit-midpoint");
  m.def("flow_jacobian",
        [](const HamiltonianSystem& s, const Vec& u0, const Vec& p0, double step, const std::string& scheme) {
          return flow_jacobian(s, u0, p0, integrator(step, scheme));
        },
        py::arg("system"), py::arg("u0"), py::arg("p0"), py::arg("step") = 1e-3, py::arg("scheme") = "implicit-midpoint");
  m.def("symplecticity_defect", &symplecticity_defect, py::arg("jacobian"));

  py::class_<BvpSolution>(m, "BvpSolution")
      .def_readonly("p0", &BvpSolution::p0)
      .def_readonly("residual_norm", &BvpSolution::residual_norm)
      .def_readonly("condition", &BvpSolution::condition)
      .def_property_readonly("times", [](const BvpSolution& s) { return s.trajectory.grid.nodes(); })
      .def_property_readonly("positions", [](const BvpSolution& s) { return s.trajectory.positions; })
      .def_property_readonly("momenta", [](const BvpSolution& s) { return s.trajectory.momenta; });
  py::class_<BvpSolutionSet>(m, "BvpSolutionSet")
      .def_readonly("solutions", &BvpSolutionSet::solutions)
      .def_property_readonly("classification", [](const BvpSolutionSet& s) { return std::string(to_string(s.classification)); })
      .def_readonly("isolation_stable", &BvpSolutionSet::isolation_stable)
      .def_readonly("family_spread", &BvpSolutionSet::family_spread);

  m.def("solve_dirichlet",
        [](const HamiltonianSystem& s, const Vec& u0, const Vec& u1, double step, int seeds, double box) {
          return solve_dirichlet(s, u0, u1, shooting(step, seeds, box));
        },
        py::arg("system"), py::arg("u0"), py::arg("u1"), py::arg("step") = 1e-3, py::arg("seed_count") = 32,
        py::arg("seed_box") = 6.0);
  m.def("principal_function",
        [](const HamiltonianSystem& s, const Vec& u0, const Vec& u1, std::size_t branch) {
          return hamilton_principal_function(s, u0, u1, ShootingConfig{}, branch);
        },
        py::arg("system"), py::arg("u0"), py::arg("u1"), py::arg("branch") = 0);
  m.def("generating_function_check",
        [](const HamiltonianSystem& s, const Vec& u0, const Vec& u1, std::size_t branch) {
          const auto g = generating_function_check(s, u0, u1, ShootingConfig{}, branch);
          return py::dict(py::arg("w") = g.w, py::arg("defect_u0") = g.defect_u0, py::arg("defect_u1") = g.defect_u1,
                          py::arg("symmetry_defect") = g.symmetry_defect);
        },
        py::arg("system"), py::arg("u0"), py::arg("u1"), py::arg("branch") = 0);
  m.def("classify_theory",
        [](const HamiltonianSystem& s, const std::vector<std::pair<Vec, Vec>>& pairs) {
          const auto r = classify_theory(s, pairs, ShootingConfig{});
          return py::dict(py::arg("verdict") = to_string(r.verdict), py::arg("witness") = r.witness,
                          py::arg("evidence") = r.evidence);
        },
        py::arg("system"), py::arg("pairs"));

  m.def("random_phase_points", &random_phase_points, py::arg("r"), py::arg("count"), py::arg("box"), py::arg("seed"));
  m.def("isotropy_defect_flow",
        [](const HamiltonianSystem& s, const std::vector<std::pair<Vec, Vec>>& points, double step, const std::string& scheme) {
          const auto r = isotropy_defect_flow(s, points, integrator(step, scheme));
          return py::dict(py::arg("max_defect") = r.max_defect, py::arg("rank_estimate") = r.rank_estimate,
                          py::arg("samples") = r.samples, py::arg("applicable") = r.applicable,
                          py::arg("caveat") = r.caveat);
        },
        py::arg("system"), py::arg("points"), py::arg("step") = 1e-3, py::arg("scheme") = "implicit-midpoint");

  m.def("topological_limit_study",
        [](double c, const std::vector<double>& lambdas, double u0, double u1) {
          const auto r = topological_limit_study(constant_field(Vec::Constant(1, c)), lambdas, Vec::Constant(1, u0),
                                                 Vec::Constant(1, u1), ShootingConfig{});
          py::list rows;
          for (const auto& row : r.rows)
            rows.append(py::dict(py::arg("lambda") = row.lambda, py::arg("solved") = row.solved, py::arg("p0") = row.p0,
                                 py::arg("w") = row.w, py::arg("second_order_residual") = row.second_order_residual));
          return py::dict(py::arg("rows") = rows, py::arg("p0_slope") = r.p0_slope,
                          py::arg("distance_to_flow_line") = r.distance_to_flow_line);
        },
        py::arg("c"), py::arg("lambdas"), py::arg("u0"), py::arg("u1"));

  m.def("constraint_names", &constraint_names);
  m.def("gotay_step",
        [](const HamiltonianSystem& s, const std::string& constraint, const Vec& u, const Vec& p, const Vec& lambda, const Vec& e) {
          const auto g = gotay_step(s, make_constraint(constraint, s.dim()), {u, p, lambda, e});
          return py::dict(py::arg("stability") = to_string(g.stability), py::arg("terminated") = g.terminated,
                          py::arg("kernel_dim") = g.kernel_basis.cols(), py::arg("phi") = g.phi, py::arg("psi") = g.psi,
                          py::arg("D") = g.D, py::arg("C") = g.C);
        },
        py::arg("system"), py::arg("constraint"), py::arg("u"), py::arg("p"), py::arg("lam"), py::arg("e"));
  m.def("integrate_constrained",
        [](const HamiltonianSystem& s, const std::string& constraint, const Vec& u0, const Vec& e0, double step) {
          const auto r = integrate_constrained(s, make_constraint(constraint, s.dim()), u0, e0, integrator(step, "implicit-midpoint"));
          return py::dict(py::arg("times") = r.flow.times, py::arg("positions") = r.flow.positions,
                          py::arg("momenta") = r.flow.momenta, py::arg("e") = r.e, py::arg("unstable_at") = r.unstable_at,
                          py::arg("energy_drift") = r.energy_drift, py::arg("constraint_drift") = r.constraint_drift);
        },
        py::arg("system"), py::arg("constraint"), py::arg("u0"), py::arg("e0"), py::arg("step") = 1e-3);

  // Reports cross the boundary as JSON text; the Python wrapper parses them.
  m.def("_run_scenario",
        [](const std::string& text, std::optional<std::string> out_dir, bool write_files) {
          RunOverrides ov;
          ov.out_dir = std::move(out_dir);
          json doc;
          try {
            doc = json::parse(text);
          } catch (const json::parse_error& e) {
            throw SchemaError(e.what());
          }
          const auto r = run_scenario(doc, ov, write_files);
          return std::make_pair(r.exit_code, r.report.dump());
        },
        py::arg("text"), py::arg("out_dir") = std::nullopt, py::arg("write_files") = false);
  m.def("_run_selftest",
        [](bool strict, std::uint64_t seed) {
          py::gil_scoped_release release;
          return selftest_to_json(run_selftest({strict, seed})).dump();
        },
        py::arg("strict") = false, py::arg("seed") = SelftestOptions{}.seed);
}
