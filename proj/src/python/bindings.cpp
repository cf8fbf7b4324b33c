#include <memory>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "qpd/basis.hpp"
#include "qpd/errors.hpp"
#include "qpd/hamiltonian.hpp"
#include "qpd/io.hpp"
#include "qpd/model.hpp"
#include "qpd/observables.hpp"
#include "qpd/phase_diagram.hpp"
#include "qpd/solver.hpp"

namespace py = pybind11;
using namespace qpd;

namespace {

Configuration configuration_arg(const std::string& name) {
  if (auto c = parse_configuration(name)) return *c;
  throw ConfigError("unknown configuration '" + name + "'");
}

Model model_arg(const std::string& name) {
  if (auto m = parse_model(name)) return *m;
  throw ConfigError("unknown model '" + name + "'");
}

SolverOptions solver_options(double tolerance, const std::string& eigensolver, int max_cutoff) {
  SolverOptions o;
  o.eigen.tolerance = tolerance;
  if (auto m = parse_eigen_method(eigensolver)) {
    o.eigen.method = *m;
  } else {
    throw ConfigError("unknown eigensolver '" + eigensolver + "'");
  }
  o.convergence.max_cutoff = max_cutoff;
  return o;
}

CouplingPoint point_at(const GroundStateSolver& solver, double x1, double x2) {
  return grid_point(solver.spec(), ScanOptions{}, x1, x2);
}

py::dict result_dict(const GroundStateSolver& solver, const GroundResult& r) {
  const auto density = reduced_matter(r.ground, solver.spec().atoms());
  py::dict d;
  d["energy"] = r.ground.energy;
  d["label"] = to_string(r.ground.label);
  const auto parity = parity_of(r.ground.label);
  d["parity"] = parity ? py::cast(to_string(*parity)) : py::none();
  d["populations"] = density.populations();
  d["linear_entropy"] = linear_entropy(density);
  d["cutoff"] = r.ground.cutoff;
  d["dimension"] = r.ground.basis ? r.ground.basis->size() : 0;
  d["degenerate"] = r.degenerate;
  std::vector<std::string> tied;
  for (const auto& l : r.tied) tied.push_back(to_string(l));
  d["tied"] = tied;
  d["state"] = r.ground;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Ground states and phase diagrams of three-level atoms coupled to two cavity modes";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<UnsupportedError>(m, "UnsupportedError", PyExc_ValueError);
  py::register_exception<SolverError>(m, "SolverError", PyExc_RuntimeError);
  py::register_exception<DerivativeUndefined>(m, "DerivativeUndefined", PyExc_ArithmeticError);

  py::class_<ModelSpec>(m, "ModelSpec")
      .def_static(
          "preset", [](const std::string& config, int atoms) { return ModelSpec::preset(configuration_arg(config), atoms); },
          py::arg("config"), py::arg("atoms") = 1)
      .def_static("parse", &parse_model_text, py::arg("text"))
      .def_property_readonly("atoms", &ModelSpec::atoms)
      .def_property_readonly("levels", [](const ModelSpec& s) { return s.levels().omegas(); })
      .def_property_readonly("modes", [](const ModelSpec& s) { return s.modes().frequencies(); })
      .def_property_readonly("configuration",
                             [](const ModelSpec& s) -> py::object {
                               if (auto c = s.configuration()) return py::cast(to_string(*c));
                               return py::none();
                             })
      .def("critical", &ModelSpec::critical, py::arg("edge"))
      .def("__repr__", [](const ModelSpec& s) {
        const auto c = s.configuration();
        return "ModelSpec(" + (c ? to_string(*c) : std::string("custom")) + ", atoms=" + std::to_string(s.atoms()) +
               ")";
      });

  py::class_<GroundSolution>(m, "GroundState")
      .def_readonly("energy", &GroundSolution::energy)
      .def_readonly("vector", &GroundSolution::vector)
      .def_property_readonly("label", [](const GroundSolution& g) { return to_string(g.label); })
      .def_property_readonly("model", [](const GroundSolution& g) { return to_string(g.model); })
      .def_property_readonly("cutoff", [](const GroundSolution& g) { return g.cutoff; });

  py::class_<GroundStateSolver>(m, "Solver")
      .def(py::init([](const ModelSpec& spec, double tolerance, const std::string& eigensolver, int max_cutoff) {
             return std::make_unique<GroundStateSolver>(spec, solver_options(tolerance, eigensolver, max_cutoff));
           }),
           py::arg("spec"), py::arg("tolerance") = 1e-11, py::arg("eigensolver") = "auto",
           py::arg("max_cutoff") = 200)
      .def_property_readonly("spec", &GroundStateSolver::spec)
      .def(
          "solve",
          [](const GroundStateSolver& s, double x1, double x2, const std::string& model) {
            GroundResult r;
            {
              py::gil_scoped_release release;
              r = solve_point(s, point_at(s, x1, x2), model_arg(model));
            }
            return result_dict(s, r);
          },
          py::arg("x1"), py::arg("x2"), py::arg("model") = "dicke")
      .def(
          "energy_derivative",
          [](const GroundStateSolver& s, double x1, double x2, int edge, const std::string& model) {
            py::gil_scoped_release release;
            return energy_derivative(s, point_at(s, x1, x2), edge, model_arg(model));
          },
          py::arg("x1"), py::arg("x2"), py::arg("edge"), py::arg("model") = "dicke");

  m.def(
      "bures",
      [](const GroundSolution& a, const GroundSolution& b) {
        const auto r = bures_distance(a, b);
        return py::make_tuple(r.overlap_squared, r.distance);
      },
      py::arg("a"), py::arg("b"), "(Tr rho_A rho_B, Bures distance) of two pure ground states");
  m.def("fidelity", &fidelity, py::arg("a"), py::arg("b"));

  m.def(
      "scan",
      [](const ModelSpec& spec, const std::string& x1, const std::string& x2, const std::string& model, int jobs) {
        const GridSpec grid{parse_axis_range(x1), parse_axis_range(x2), model_arg(model)};
        ScanOptions opt;
        opt.jobs = jobs;
        ScanResult scan;
        {
          py::gil_scoped_release release;
          scan = scan_ground(spec, grid, opt);
        }
        const auto n1 = grid.x1.n, n2 = grid.x2.n;
        Eigen::MatrixXd energy(n2, n1), entropy(n2, n1), f1(n2, n1), f2(n2, n1);
        std::vector<std::vector<std::string>> labels(n2, std::vector<std::string>(n1));
        for (int i2 = 0; i2 < n2; ++i2) {
          for (int i1 = 0; i1 < n1; ++i1) {
            const auto k = grid.index(i1, i2);
            energy(i2, i1) = scan.points[k].energy;
            entropy(i2, i1) = scan.points[k].linear_entropy;
            f1(i2, i1) = scan.fidelity_x1[k];
            f2(i2, i1) = scan.fidelity_x2[k];
            labels[i2][i1] = to_string(scan.points[k].label);
          }
        }
        std::vector<double> ax1, ax2;
        for (int i = 0; i < n1; ++i) ax1.push_back(grid.x1.value(i));
        for (int i = 0; i < n2; ++i) ax2.push_back(grid.x2.value(i));
        py::dict d;
        d["x1"] = ax1;
        d["x2"] = ax2;
        d["energy"] = energy;
        d["label"] = labels;
        d["linear_entropy"] = entropy;
        d["fidelity_x1"] = f1;
        d["fidelity_x2"] = f2;
        py::list separatrix;
        for (const auto& s : detect_separatrix(scan)) {
          separatrix.append(py::make_tuple(s.x1, s.x2, to_string(s.cls.kind)));
        }
        d["separatrix"] = separatrix;
        return d;
      },
      py::arg("spec"), py::arg("x1") = "0:5:21", py::arg("x2") = "0:5:21", py::arg("model") = "dicke",
      py::arg("jobs") = 1, "Ground-state scan; arrays are indexed [i2, i1]");

  m.def(
      "sector_dimension",
      [](const std::string& config, int k1, int k2, int atoms) {
        return sector_dimension_formula(configuration_arg(config), SectorKey{{k1, k2}}, atoms);
      },
      py::arg("config"), py::arg("k1"), py::arg("k2"), py::arg("atoms") = 1);
  m.def(
      "candidate_sectors",
      [](const std::string& config, int k1max, int k2max, int atoms) {
        std::vector<std::pair<int, int>> out;
        for (const auto& k : gtcm_candidate_sectors(configuration_arg(config), k1max, k2max, atoms)) {
          out.emplace_back(k.k[0], k.k[1]);
        }
        return out;
      },
      py::arg("config"), py::arg("k1max"), py::arg("k2max"), py::arg("atoms") = 1);
  m.def("linear_entropy_diagonal", &linear_entropy_diagonal3, py::arg("p1"), py::arg("p2"));
  m.def(
      "simplex_coords", [](std::vector<double> p) { return simplex_coords(p); }, py::arg("populations"));
  m.def("bures_from_overlap_squared", &bures_from_overlap_squared, py::arg("f"));
}
