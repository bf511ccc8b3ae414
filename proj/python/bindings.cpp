// Python module oscilab._oscilab. Fields travel as shared handles; reports
// come back as JSON text and are decoded by the package wrapper.

#include "oscilab/harness.hpp"

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace oscilab;

namespace {

FamilySpec make_spec(const std::string& family, const std::vector<double>& params) {
  FamilySpec s;
  s.family = parse_family(family);
  if (params.empty()) {
    for (const auto& b : builtin_families()) {
      if (b.family == s.family) s = b;
    }
  } else {
    s.params = params;
  }
  return s;
}

BoundaryData make_boundary(const std::vector<double>& a, const std::vector<double>& b) {
  BoundaryData g;
  g.a = a;
  g.b = b;
  g.validate();
  return g;
}

struct Cell {
  CorrectorSolution corrector;
  CoefficientField field;
};

}  // namespace

PYBIND11_MODULE(_oscilab, m) {
  m.doc() = "oscilab core bindings";

  // Translators run last-registered first, so the base class goes first.
  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<BudgetError>(m, "BudgetError", PyExc_ValueError);
  py::register_exception<LockError>(m, "LockError", PyExc_RuntimeError);

  m.def("families", [] {
    std::vector<std::string> out;
    for (const auto& s : builtin_families()) out.emplace_back(family_name(s.family));
    return out;
  });

  py::class_<CoefficientField>(m, "CoefficientField")
      .def(py::init([](const std::string& family, const std::vector<double>& params) {
             return build_family(make_spec(family, params));
           }),
           py::arg("family"), py::arg("params") = std::vector<double>{})
      .def("__call__", [](const CoefficientField& f, double y1, double y2) -> Mat2 { return f(Vec2(y1, y2)); })
      .def_property_readonly("family", [](const CoefficientField& f) { return std::string(family_name(f.family())); })
      .def_property_readonly("normalized", &CoefficientField::normalized)
      .def_property_readonly("eig_lower", &CoefficientField::eig_lower)
      .def_property_readonly("eig_upper", &CoefficientField::eig_upper);

  py::class_<Cell>(m, "Corrector")
      .def_property_readonly("A_hat", [](const Cell& c) -> Mat2 { return c.corrector.A_hat; })
      .def_property_readonly("mu_min", [](const Cell& c) { return c.corrector.mu_min; })
      .def_property_readonly("residual", [](const Cell& c) { return c.corrector.residual; })
      .def_property_readonly("n", [](const Cell& c) { return c.corrector.grid.n; })
      .def("chi", [](const Cell& c, int j) -> Vector {
        if (j != 0 && j != 1) throw ConfigError("chi index must be 0 or 1");
        return c.corrector.chi[static_cast<std::size_t>(j)];
      });

  m.def(
      "solve_cell",
      [](const CoefficientField& f, int n) {
        py::gil_scoped_release release;
        return Cell{solve_cell_problem(f, n), f};
      },
      py::arg("field"), py::arg("n") = 256);
  m.def("normalize", [](const Cell& c) {
    auto [t, g] = normalize(c.corrector, c.field);
    return py::make_tuple(Mat2(t.P), g);
  });

  py::class_<PlanarField, std::shared_ptr<PlanarField>>(m, "Field")
      .def("value", [](const PlanarField& u, double x, double y) { return u.value(Vec2(x, y)); })
      .def("gradient", [](const PlanarField& u, double x, double y) -> Vec2 { return u.gradient(Vec2(x, y)); })
      .def_property_readonly("mesh_size", &PlanarField::mesh_size)
      .def_property_readonly("oscillation_scale", &PlanarField::oscillation_scale);

  py::class_<SolutionField, PlanarField, std::shared_ptr<SolutionField>>(m, "Solution")
      .def_property_readonly("nodal_values", [](const SolutionField& s) -> Vector { return s.nodal_values(); })
      .def_property_readonly("nodes",
                             [](const SolutionField& s) {
                               Eigen::Matrix<double, Eigen::Dynamic, 2, Eigen::RowMajor> x(
                                   static_cast<Eigen::Index>(s.mesh().node_count()), 2);
                               for (std::size_t v = 0; v < s.mesh().node_count(); ++v) {
                                 x.row(static_cast<Eigen::Index>(v)) = s.mesh().nodes[v].transpose();
                               }
                               return x;
                             })
      .def_property_readonly("triangle_count", [](const SolutionField& s) { return s.mesh().triangle_count(); })
      .def_property_readonly("residual", [](const SolutionField& s) { return s.info().residual; })
      .def_property_readonly("radius", &SolutionField::radius)
      .def_property_readonly("epsilon", &SolutionField::epsilon)
      .def("save", [](const SolutionField& s, const fs::path& dir) { save_solution(dir, s); });

  m.def("load_solution", [](const fs::path& dir) { return std::make_shared<SolutionField>(load_solution(dir)); });

  m.def(
      "harmonic_polynomial",
      [](int ell, double a, double b) -> std::shared_ptr<PlanarField> { return harmonic_polynomial(ell, a, b); },
      py::arg("ell"), py::arg("a") = 1.0, py::arg("b") = 0.0);
  m.def(
      "harmonic_reference",
      [](const std::vector<double>& a, const std::vector<double>& b, double R) -> std::shared_ptr<PlanarField> {
        return std::make_shared<HarmonicReference>(harmonic_reference(make_boundary(a, b), R));
      },
      py::arg("a"), py::arg("b") = std::vector<double>{}, py::arg("R") = 2.0);
  m.def(
      "dilated", [](std::shared_ptr<PlanarField> u, double theta) -> std::shared_ptr<PlanarField> {
        return std::make_shared<DilatedField>(std::move(u), theta);
      });

  m.def(
      "solve",
      [](const CoefficientField& f, double epsilon, double R, const std::vector<double>& a,
         const std::vector<double>& b, double h, bool allow_coarse_mesh, unsigned workers) {
        const BoundaryData g = make_boundary(a, b);
        SolveOptions o;
        o.h = h;
        o.allow_coarse_mesh = allow_coarse_mesh;
        o.workers = workers;
        py::gil_scoped_release release;
        return std::make_shared<SolutionField>(assemble_solve(EpsProblem{f, epsilon, R, g}, o));
      },
      py::arg("field"), py::arg("epsilon"), py::arg("R"), py::arg("a"), py::arg("b") = std::vector<double>{},
      py::arg("h") = 0.0, py::arg("allow_coarse_mesh") = false, py::arg("workers") = 0u);

  m.def(
      "doubling_index",
      [](const PlanarField& u, double x, double y, double r) { return doubling_index(u, Vec2(x, y), r); },
      py::arg("field"), py::arg("x"), py::arg("y"), py::arg("r"));
  m.def(
      "doubling_profile_json",
      [](const PlanarField& u, double x, double y, double r_top, int rungs) {
        return to_json(doubling_profile(u, Vec2(x, y), r_top, rungs)).dump();
      },
      py::arg("field"), py::arg("x"), py::arg("y"), py::arg("r_top"), py::arg("rungs"));
  m.def(
      "critical_points_json",
      [](const PlanarField& u, double x, double y, double radius, double h) {
        DetectOptions o;
        o.h = h;
        return to_json(detect_critical_points(u, Vec2(x, y), radius, o)).dump();
      },
      py::arg("field"), py::arg("x"), py::arg("y"), py::arg("radius"), py::arg("h") = 0.0);

  m.def("config_hash", [](const std::string& text) { return parse_config(text).hash(); });
  m.def(
      "run_experiment_json",
      [](const std::string& text, unsigned workers) {
        const auto cfg = parse_config(text);
        py::gil_scoped_release release;
        return run_pipeline(cfg, workers).to_json().dump();
      },
      py::arg("config_text"), py::arg("workers") = 0u);
}
