#include "qpd/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <ostream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>
#include <fmt/ranges.h>

#include "qpd/basis.hpp"
#include "qpd/errors.hpp"
#include "qpd/hamiltonian.hpp"
#include "qpd/io.hpp"
#include "qpd/model.hpp"
#include "qpd/observables.hpp"
#include "qpd/phase_diagram.hpp"
#include "qpd/solver.hpp"

namespace qpd {
namespace {

struct ModelArgs {
  std::string config;
  std::string spec_file;
  int atoms = 1;
  std::string model = "dicke";
};

void add_model_options(CLI::App* cmd, ModelArgs& m) {
  cmd->add_option("--config", m.config, "Named configuration: xi, lambda or v");
  cmd->add_option("--spec", m.spec_file, "Model description file")->check(CLI::ExistingFile);
  cmd->add_option("--na", m.atoms, "Number of atoms")->check(CLI::PositiveNumber);
  cmd->add_option("--model", m.model, "Hamiltonian: rwa or dicke")->capture_default_str();
}

ModelSpec load_spec(const ModelArgs& m, const CLI::App* cmd) {
  if (m.config.empty() && m.spec_file.empty()) {
    throw CLI::RequiredError("either --config or --spec");
  }
  if (!m.config.empty() && !m.spec_file.empty()) {
    throw CLI::ExcludesError("--config", "--spec");
  }
  if (!m.spec_file.empty()) {
    ModelSpec spec = read_model_file(m.spec_file);
    if (cmd->count("--na") == 0) return spec;
    return ModelSpec(spec.levels(), spec.modes(), spec.topology(), m.atoms);
  }
  const auto c = parse_configuration(m.config);
  if (!c) throw ConfigError(fmt::format("unknown configuration '{}'", m.config));
  return ModelSpec::preset(*c, m.atoms);
}

Model load_model(const ModelArgs& m) {
  const auto model = parse_model(m.model);
  if (!model) throw ConfigError(fmt::format("unknown model '{}'", m.model));
  return *model;
}

struct SolverArgs {
  SolverOptions options;
  std::string method = "auto";
};

void add_solver_options(CLI::App* cmd, SolverArgs& s) {
  auto& o = s.options;
  cmd->add_option("--eigensolver", s.method, "auto, dense, lanczos or davidson")->group("Solver");
  cmd->add_option("--residual-tol", o.eigen.tolerance, "Relative residual bound")
      ->check(CLI::PositiveNumber)
      ->group("Solver");
  cmd->add_option("--fidelity-tol", o.convergence.fidelity_tolerance, "Cutoff test on 1 - F")
      ->check(CLI::PositiveNumber)
      ->group("Solver");
  cmd->add_option("--energy-tol", o.convergence.energy_tolerance, "Cutoff test on the energy change")
      ->check(CLI::PositiveNumber)
      ->group("Solver");
  cmd->add_option("--max-cutoff", o.convergence.max_cutoff, "Largest photon cutoff per mode")
      ->check(CLI::PositiveNumber)
      ->group("Solver");
  cmd->add_option("--start-cutoff", o.start_cutoff, "Initial photon cutoff per mode")
      ->check(CLI::NonNegativeNumber)
      ->group("Solver");
}

SolverOptions load_solver(const SolverArgs& s) {
  SolverOptions o = s.options;
  const auto method = parse_eigen_method(s.method);
  if (!method) throw ConfigError(fmt::format("unknown eigensolver '{}'", s.method));
  o.eigen.method = *method;
  return o;
}

void add_threshold_options(CLI::App* cmd, Thresholds& t) {
  cmd->add_option("--theta-disc", t.disc, "Fidelity below which a transition is discontinuous")
      ->check(CLI::Range(0.0, 1.0))
      ->group("Classification");
  cmd->add_option("--theta-unstable", t.unstable, "Fidelity below which a continuous transition is unstable")
      ->check(CLI::Range(0.0, 1.0))
      ->group("Classification");
  cmd->add_option("--theta-min", t.minimum, "Fidelity minima count only below this value")
      ->check(CLI::Range(0.0, 1.0))
      ->group("Classification");
}

void check_thresholds(const Thresholds& t) {
  if (!(t.disc < t.unstable)) throw ConfigError("--theta-disc must be below --theta-unstable");
}

int resolve_jobs(int jobs) {
  if (const char* env = std::getenv("QPD_THREADS"); env && *env) {
    try {
      std::size_t used = 0;
      const int v = std::stoi(env, &used);
      if (used == std::strlen(env) && v >= 0) return v;
    } catch (const std::logic_error&) {
    }
    throw ConfigError(fmt::format("QPD_THREADS='{}' is not a non-negative integer", env));
  }
  return jobs;
}

/// Zero-based edge index from a one-based command-line value.
int edge_index(const ModelSpec& spec, int one_based) {
  if (one_based < 1 || one_based > spec.topology().size()) {
    throw ConfigError(fmt::format("edge {} is outside 1..{}", one_based, spec.topology().size()));
  }
  return one_based - 1;
}

std::string edge_text(const Edge& e) { return fmt::format("x{}{}", e.lower + 1, e.upper + 1); }

std::string join_numbers(std::span<const double> v, std::string_view sep = " ") {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += sep;
    s += format_number(v[i]);
  }
  return s;
}

std::string join_ints(std::span<const int> v, std::string_view sep = ",") {
  return fmt::format("{}", fmt::join(v, sep));
}

std::string prefix_of_meta(const std::string& path) {
  constexpr std::string_view suffix = "_meta.json";
  if (path.size() > suffix.size() && path.ends_with(suffix)) return path.substr(0, path.size() - suffix.size());
  throw ConfigError(fmt::format("'{}' does not end in {}", path, suffix));
}

std::function<void(std::size_t, std::size_t)> progress_printer(std::ostream& err, bool quiet,
                                                               std::string tag) {
  if (quiet) return {};
  auto mutex = std::make_shared<std::mutex>();
  return [&err, mutex, tag = std::move(tag)](std::size_t done, std::size_t total) {
    std::lock_guard lock(*mutex);
    fmt::print(err, "{}: {}/{} points\n", tag, done, total);
  };
}

// ---------------------------------------------------------------- scan

struct ScanArgs {
  ModelArgs model;
  SolverArgs solver;
  Thresholds thresholds;
  std::string x1 = "0:5:21";
  std::string x2 = "0:5:21";
  bool full = false;
  std::vector<int> axes{1, 2};
  std::vector<double> base;
  std::string out;
  std::string meta;
  int jobs = 0;
  std::string order = "x1";
  std::vector<int> kmax;
  bool full_box = false;
  bool observables = false;
  std::vector<int> na_series;
  bool quiet = false;
};

void add_scan(CLI::App& app, ScanArgs& a) {
  auto* cmd = app.add_subcommand("scan", "Ground-state phase diagram over a grid of two couplings");
  add_model_options(cmd, a.model);
  add_solver_options(cmd, a.solver);
  add_threshold_options(cmd, a.thresholds);
  cmd->add_option("--x1", a.x1, "First axis as lo:hi:n")->capture_default_str();
  cmd->add_option("--x2", a.x2, "Second axis as lo:hi:n")->capture_default_str();
  cmd->add_flag("--full", a.full, "101 x 101 grid over [0,5]^2");
  cmd->add_option("--axes", a.axes, "One-based edges driven by x1 and x2")->expected(2);
  cmd->add_option("--base", a.base, "Couplings of all edges; the scanned ones are overwritten");
  cmd->add_option("--out", a.out, "Output prefix")->required();
  cmd->add_option("--meta", a.meta, "Rerun the scan described by a meta file")->check(CLI::ExistingFile);
  cmd->add_option("--jobs", a.jobs, "Worker threads, 0 for all cores")->check(CLI::NonNegativeNumber);
  cmd->add_option("--order", a.order, "Sweep direction: x1 or x2")->capture_default_str();
  cmd->add_option("--kmax", a.kmax, "RWA: fixed sector box k1max k2max")->expected(2);
  cmd->add_flag("--full-box", a.full_box, "RWA: every sector of the box, not only the candidates");
  cmd->add_flag("--observables", a.observables, "Also write the simplex and pair-occupation files");
  cmd->add_option("--na-series", a.na_series, "Repeat the scan for each atom number")
      ->check(CLI::PositiveNumber);
  cmd->add_flag("--quiet", a.quiet, "No progress output");
}

ScanConfig build_scan_config(const ScanArgs& a, const CLI::App* cmd) {
  if (!a.meta.empty()) {
    return scan_config_from_json(read_json_file(a.meta).at("config"));
  }
  ScanConfig c{load_spec(a.model, cmd), {}, {}, load_solver(a.solver), a.thresholds};
  check_thresholds(c.thresholds);
  if (a.full) {
    c.grid.x1 = AxisRange{0.0, 5.0, 101};
    c.grid.x2 = AxisRange{0.0, 5.0, 101};
  } else {
    c.grid.x1 = parse_axis_range(a.x1);
    c.grid.x2 = parse_axis_range(a.x2);
  }
  c.grid.model = load_model(a.model);
  c.grid.validate();
  if (a.order != "x1" && a.order != "x2") throw ConfigError("--order must be x1 or x2");
  c.scan.order = a.order == "x2" ? ScanOrder::AlongX2 : ScanOrder::AlongX1;
  c.scan.edge1 = edge_index(c.spec, a.axes.at(0));
  c.scan.edge2 = edge_index(c.spec, a.axes.at(1));
  if (c.scan.edge1 == c.scan.edge2) throw ConfigError("--axes needs two distinct edges");
  c.scan.base = a.base.empty() ? std::vector<double>(static_cast<std::size_t>(c.spec.topology().size()), 0.0)
                               : a.base;
  if (static_cast<int>(c.scan.base.size()) != c.spec.topology().size()) {
    throw ConfigError(fmt::format("--base needs {} values", c.spec.topology().size()));
  }
  c.scan.full_box = a.full_box;
  if (!a.kmax.empty()) {
    if (a.kmax[0] < 0 || a.kmax[1] < 0) throw ConfigError("--kmax values must be non-negative");
    c.scan.kmax = std::pair{a.kmax[0], a.kmax[1]};
  }
  return c;
}

void print_scan_summary(std::ostream& out, const std::string& prefix, const ScanConfig& config,
                        const ScanResult& scan) {
  std::map<std::string, int> winners;
  std::size_t failed = 0;
  std::size_t edge = 0;
  for (const auto& p : scan.points) {
    if (p.status == PointStatus::NotConverged) {
      ++failed;
      continue;
    }
    edge += p.status == PointStatus::BoxEdge;
    ++winners[to_string(p.label)];
  }
  const auto sep = detect_separatrix(scan, config.thresholds);
  fmt::print(out, "{}: {} points, {} separatrix pairs\n", prefix, scan.points.size(), sep.size());
  for (const auto& [label, n] : winners) fmt::print(out, "  label {}: {} points\n", label, n);
  if (edge) fmt::print(out, "  {} points with the winner on the sector box edge\n", edge);
  if (failed) fmt::print(out, "  {} points did not converge\n", failed);
}

int run_one_scan(const std::string& prefix, ScanConfig config, const ScanArgs& a, std::ostream& out,
                 std::ostream& err, ScanResult* result = nullptr) {
  config.scan.jobs = resolve_jobs(a.jobs);
  config.scan.keep_going = true;
  config.scan.progress = progress_printer(err, a.quiet, prefix);
  const GroundStateSolver solver(config.spec, config.solver);
  ScanResult scan = scan_ground(solver, config.grid, config.scan);
  config.scan.progress = nullptr;
  write_scan_outputs(prefix, config, scan, a.observables);
  print_scan_summary(out, prefix, config, scan);
  const int code = scan.ok() ? exit_code::ok : exit_code::not_converged;
  if (result) *result = std::move(scan);
  return code;
}

int cmd_scan(const ScanArgs& a, const CLI::App* cmd, std::ostream& out, std::ostream& err) {
  ScanConfig config = build_scan_config(a, cmd);
  if (a.na_series.empty()) return run_one_scan(a.out, std::move(config), a, out, err);

  int code = exit_code::ok;
  std::ofstream series(a.out + "_na_series.csv");
  if (!series) throw ConfigError(fmt::format("cannot write '{}_na_series.csv'", a.out));
  fmt::print(series, "# schema={}\nNa,x1,x2,kind,parity_change,axis,fidelity,label_change\n", kSchemaVersion);
  for (int na : a.na_series) {
    ScanConfig c = config;
    c.spec = ModelSpec(config.spec.levels(), config.spec.modes(), config.spec.topology(), na);
    ScanResult scan;
    code = std::max(code, run_one_scan(fmt::format("{}_na{}", a.out, na), std::move(c), a, out, err, &scan));
    for (const auto& p : detect_separatrix(scan, config.thresholds)) {
      fmt::print(series, "{},{},{},{},{},{},{},{}\n", na, format_number(p.x1), format_number(p.x2),
                 to_string(p.cls.kind), p.cls.parity_change ? 1 : 0, p.axis, format_number(p.fidelity),
                 p.label_change ? 1 : 0);
    }
  }
  return code;
}

// ---------------------------------------------------------------- point

struct PointArgs {
  ModelArgs model;
  SolverArgs solver;
  std::vector<double> x;
  std::vector<double> pair;
  std::string dump_matrix;
  std::string dump_state;
  bool amplitudes = false;
  double threshold = 1e-3;
  int excited = 0;
  std::vector<int> kmax;
  bool full_box = false;
};

void add_point(CLI::App& app, PointArgs& a) {
  auto* cmd = app.add_subcommand("point", "Ground state and observables at one coupling point");
  add_model_options(cmd, a.model);
  add_solver_options(cmd, a.solver);
  cmd->add_option("--x", a.x, "Couplings, one per edge")->required();
  cmd->add_option("--pair", a.pair, "Second point; prints Tr(rho_A rho_B) and the Bures distance");
  cmd->add_option("--dump-matrix", a.dump_matrix, "Write the winning block Hamiltonian as triplets");
  cmd->add_option("--dump-state", a.dump_state, "Write the ground-state amplitudes");
  cmd->add_flag("--amplitudes", a.amplitudes, "Print the dominant amplitudes");
  cmd->add_option("--threshold", a.threshold, "Smallest amplitude magnitude printed")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  cmd->add_option("--excited", a.excited, "Excited levels per block to report")->check(CLI::NonNegativeNumber);
  cmd->add_option("--kmax", a.kmax, "RWA: fixed sector box k1max k2max")->expected(2);
  cmd->add_flag("--full-box", a.full_box, "RWA: every sector of the box");
}

CouplingPoint make_point(const ModelSpec& spec, const std::vector<double>& x, std::string_view flag) {
  if (static_cast<int>(x.size()) != spec.topology().size()) {
    throw ConfigError(fmt::format("{} needs {} values, one per edge", flag, spec.topology().size()));
  }
  return CouplingPoint(spec.topology(), x);
}

std::string fock_text(const SectorBasis& basis, std::size_t i) {
  return fmt::format("nu=({}) b=({})", join_ints(basis.photons(i)), join_ints(basis.populations(i)));
}

void print_solution(std::ostream& out, const GroundStateSolver& solver, const GroundResult& res,
                    std::string_view tag) {
  const auto& spec = solver.spec();
  const auto& g = res.ground;
  const MatterDensity rho = reduced_matter(g, spec.atoms());
  fmt::print(out, "{}E_g: {}\n", tag, format_number(g.energy));
  fmt::print(out, "{}label: {}\n", tag, to_string(g.label));
  if (auto p = parity_of(g.label)) fmt::print(out, "{}parity: {}\n", tag, to_string(*p));
  if (res.tied.size() > 1) {
    std::vector<std::string> names;
    for (const auto& l : res.tied) names.push_back(to_string(l));
    fmt::print(out, "{}tied: {}\n", tag, fmt::join(names, " "));
  }
  fmt::print(out, "{}degenerate: {}\n", tag, res.degenerate ? "yes" : "no");
  fmt::print(out, "{}cutoff: {}\n", tag, join_ints(g.cutoff, " "));
  fmt::print(out, "{}dimension: {}\n", tag, g.basis->size());
  fmt::print(out, "{}populations: {}\n", tag, join_numbers(rho.populations()));
  fmt::print(out, "{}linear_entropy: {}\n", tag, format_number(linear_entropy(rho)));
  fmt::print(out, "{}rho_M:\n", tag);
  for (Eigen::Index r = 0; r < rho.rho.rows(); ++r) {
    std::vector<double> row(rho.rho.row(r).begin(), rho.rho.row(r).end());
    fmt::print(out, "{}  {}\n", tag, join_numbers(row));
  }
  for (int e = 0; e < spec.topology().size(); ++e) {
    const std::string name = fmt::format("dE/d{}", edge_text(spec.topology().edge(e)));
    if (res.degenerate) {
      fmt::print(out, "{}{}: undefined (degenerate ground state)\n", tag, name);
    } else {
      fmt::print(out, "{}{}: {}\n", tag, name, format_number(coupling_derivative_expectation(solver, g, e)));
    }
  }
}

void print_amplitudes(std::ostream& out, const GroundSolution& g, double threshold) {
  std::vector<std::size_t> idx;
  for (Eigen::Index i = 0; i < g.vector.size(); ++i) {
    if (std::abs(g.vector[i]) >= threshold) idx.push_back(static_cast<std::size_t>(i));
  }
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(g.vector[a]) > std::abs(g.vector[b]);
  });
  fmt::print(out, "amplitudes (|c| >= {}):\n", format_number(threshold));
  for (auto i : idx) fmt::print(out, "  {} {}\n", fock_text(*g.basis, i), format_number(g.vector[i]));
}

std::ofstream open_output(const std::string& path) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream f(p);
  if (!f) throw ConfigError(fmt::format("cannot write '{}'", path));
  return f;
}

int cmd_point(const PointArgs& a, const CLI::App* cmd, std::ostream& out) {
  const ModelSpec spec = load_spec(a.model, cmd);
  const Model model = load_model(a.model);
  const GroundStateSolver solver(spec, load_solver(a.solver));
  std::optional<std::pair<int, int>> kmax;
  if (!a.kmax.empty()) kmax = std::pair{a.kmax[0], a.kmax[1]};

  const CouplingPoint xa = make_point(spec, a.x, "--x");
  const GroundResult ra = solve_point(solver, xa, model, nullptr, a.excited, kmax, a.full_box);
  fmt::print(out, "model: {}\n", to_string(model));
  if (auto c = spec.configuration()) fmt::print(out, "config: {}\n", to_string(*c));
  fmt::print(out, "atoms: {}\n", spec.atoms());
  fmt::print(out, "x: {}\n", join_numbers(xa.values()));
  print_solution(out, solver, ra, "");
  if (a.excited > 0) {
    fmt::print(out, "levels:\n");
    for (const auto& l : ra.levels) fmt::print(out, "  {} {}\n", format_number(l.energy), to_string(l.label));
  }
  if (a.amplitudes) print_amplitudes(out, ra.ground, a.threshold);

  if (!a.dump_matrix.empty()) {
    auto f = open_output(a.dump_matrix);
    write_triplets(f, build_hamiltonian(*ra.ground.basis, spec, xa, model));
  }
  if (!a.dump_state.empty()) {
    auto f = open_output(a.dump_state);
    const auto& g = ra.ground;
    fmt::print(f, "{}\n", g.basis->size());
    for (std::size_t i = 0; i < g.basis->size(); ++i) {
      fmt::print(f, "{} {} {}\n", join_ints(g.basis->photons(i), " "), join_ints(g.basis->populations(i), " "),
                 fmt::format("{:.17g}", g.vector[static_cast<Eigen::Index>(i)]));
    }
  }

  if (!a.pair.empty()) {
    const CouplingPoint xb = make_point(spec, a.pair, "--pair");
    const GroundResult rb = solve_point(solver, xb, model, nullptr, 0, kmax, a.full_box);
    fmt::print(out, "pair x: {}\n", join_numbers(xb.values()));
    print_solution(out, solver, rb, "pair ");
    const BuresResult b = bures_distance(ra.ground, rb.ground);
    fmt::print(out, "Tr(rho_A rho_B): {}\n", format_number(b.overlap_squared));
    fmt::print(out, "D_B: {}\n", format_number(b.distance));
  }
  return exit_code::ok;
}

// ---------------------------------------------------------------- classify

struct ClassifyArgs {
  std::string in;
  std::string out;
  Thresholds thresholds;
};

void add_classify(CLI::App& app, ClassifyArgs& a) {
  auto* cmd = app.add_subcommand("classify", "Re-threshold the separatrix of an existing scan");
  cmd->add_option("--in", a.in, "Prefix of the scan files")->required();
  cmd->add_option("--out", a.out, "Prefix of the new separatrix file (default: --in)");
  add_threshold_options(cmd, a.thresholds);
}

int cmd_classify(const ClassifyArgs& a, const CLI::App* cmd, std::ostream& out) {
  const ScanConfig config = scan_config_from_json(read_json_file(a.in + "_meta.json").at("config"));
  Thresholds th = config.thresholds;
  if (cmd->count("--theta-disc")) th.disc = a.thresholds.disc;
  if (cmd->count("--theta-unstable")) th.unstable = a.thresholds.unstable;
  if (cmd->count("--theta-min")) th.minimum = a.thresholds.minimum;
  check_thresholds(th);
  const ScanResult scan = read_scan_outputs(a.in);
  const auto points = detect_separatrix(scan, th);
  const std::string prefix = a.out.empty() ? a.in : a.out;
  auto f = open_output(prefix + "_separatrix.csv");
  write_separatrix_csv(f, points);
  std::map<std::string, int> counts;
  for (const auto& p : points) ++counts[to_string(p.cls.kind)];
  fmt::print(out, "{} separatrix pairs (theta_disc={}, theta_unstable={}, theta_min={})\n", points.size(),
             format_number(th.disc), format_number(th.unstable), format_number(th.minimum));
  for (const auto& [kind, n] : counts) fmt::print(out, "  {}: {}\n", kind, n);
  return exit_code::ok;
}

// ---------------------------------------------------------------- dims

struct DimsArgs {
  std::string config;
  int atoms = 1;
  int kmax = 6;
};

void add_dims(CLI::App& app, DimsArgs& a) {
  auto* cmd = app.add_subcommand("dims", "Closed-form sector dimensions against enumeration");
  cmd->add_option("--config", a.config, "xi, lambda or v")->required();
  cmd->add_option("--na", a.atoms, "Number of atoms")->check(CLI::PositiveNumber)->capture_default_str();
  cmd->add_option("--kmax", a.kmax, "Largest k1 and k2")->check(CLI::NonNegativeNumber)->capture_default_str();
}

int cmd_dims(const DimsArgs& a, std::ostream& out) {
  const auto c = parse_configuration(a.config);
  if (!c) throw ConfigError(fmt::format("unknown configuration '{}'", a.config));
  const ModelSpec spec = ModelSpec::preset(*c, a.atoms);
  const SymmetryInfo info = symmetry_generators(spec.topology(), spec.num_levels(), spec.num_modes());
  const int open = 4 * (a.kmax + a.atoms) + 8;
  const Cutoff wide(static_cast<std::size_t>(spec.num_modes()), open);
  bool mismatch = false;
  fmt::print(out, "# config={} Na={}\nk1,k2,formula,enumerated,status\n", to_string(*c), a.atoms);
  for (int k1 = 0; k1 <= a.kmax; ++k1) {
    for (int k2 = 0; k2 <= a.kmax; ++k2) {
      const SectorKey key{{k1, k2}};
      const Cutoff bound = sector_photon_bound(info.generators, key, wide);
      if (std::ranges::any_of(bound, [&](int b) { return b >= open; })) {
        throw ConsistencyError(fmt::format("sector {} is not bounded", to_string(key)));
      }
      const long long formula = sector_dimension_formula(*c, key, a.atoms);
      const auto count = static_cast<long long>(enumerate_rwa_sector(spec, info.generators, key, bound).size());
      const bool ok = formula == count;
      mismatch |= !ok;
      fmt::print(out, "{},{},{},{},{}\n", k1, k2, formula, count, ok ? "OK" : "MISMATCH");
    }
  }
  return mismatch ? exit_code::mismatch : exit_code::ok;
}

// ---------------------------------------------------------------- observables

struct ObservablesArgs {
  std::string meta;
  std::vector<double> at;
  std::string out;
  int jobs = 0;
  bool quiet = false;
};

void add_observables(CLI::App& app, ObservablesArgs& a) {
  auto* cmd = app.add_subcommand("observables", "Matter observables of a scan or of selected points");
  cmd->add_option("--meta", a.meta, "Meta file of a scan")->required()->check(CLI::ExistingFile);
  cmd->add_option("--at", a.at, "Point x1 x2; repeat for more points");
  cmd->add_option("--out", a.out, "Output prefix (default: the scan prefix)");
  cmd->add_option("--jobs", a.jobs, "Worker threads, 0 for all cores")->check(CLI::NonNegativeNumber);
  cmd->add_flag("--quiet", a.quiet, "No progress output");
}

int cmd_observables(const ObservablesArgs& a, std::ostream& out, std::ostream& err) {
  ScanConfig config = scan_config_from_json(read_json_file(a.meta).at("config"));
  const std::string prefix = a.out.empty() ? prefix_of_meta(a.meta) : a.out;
  if (config.spec.num_levels() != 3) throw UnsupportedError("simplex observables need three levels");
  const GroundStateSolver solver(config.spec, config.solver);

  if (a.at.empty()) {
    config.scan.jobs = resolve_jobs(a.jobs);
    config.scan.keep_going = true;
    config.scan.progress = progress_printer(err, a.quiet, prefix);
    const ScanResult scan = scan_ground(solver, config.grid, config.scan);
    auto f = open_output(prefix + "_simplex.csv");
    write_simplex_csv(f, scan);
    if (auto c = config.spec.configuration()) {
      auto g = open_output(prefix + "_pairs.csv");
      write_pairs_csv(g, scan, *c);
    }
    fmt::print(out, "{}: observables at {} points\n", prefix, scan.points.size());
    return scan.ok() ? exit_code::ok : exit_code::not_converged;
  }

  if (a.at.size() % 2 != 0) throw ConfigError("--at takes x1 x2 pairs");
  ScanResult scan;
  scan.grid = config.grid;
  auto field = open_output(prefix + "_field.csv");
  fmt::print(field, "# schema={}\nx1,x2", kSchemaVersion);
  for (int s = 0; s < config.spec.num_modes(); ++s) fmt::print(field, ",nu{}", s + 1);
  fmt::print(field, ",probability\n");
  for (std::size_t i = 0; i < a.at.size(); i += 2) {
    const CouplingPoint point = grid_point(config.spec, config.scan, a.at[i], a.at[i + 1]);
    const GroundResult res =
        solve_point(solver, point, config.grid.model, nullptr, 0, config.scan.kmax, config.scan.full_box);
    const MatterDensity rho = reduced_matter(res.ground, config.spec.atoms());
    PointRecord rec;
    rec.x1 = a.at[i];
    rec.x2 = a.at[i + 1];
    rec.energy = res.ground.energy;
    rec.label = res.ground.label;
    rec.populations = rho.populations();
    rec.linear_entropy = linear_entropy(rho);
    scan.points.push_back(rec);
    for (const auto& [nu, prob] : field_diagonal(res.ground)) {
      fmt::print(field, "{},{},{},{}\n", format_number(rec.x1), format_number(rec.x2), join_ints(nu),
                 format_number(prob));
    }
  }
  auto f = open_output(prefix + "_simplex.csv");
  write_simplex_csv(f, scan);
  if (auto c = config.spec.configuration()) {
    auto g = open_output(prefix + "_pairs.csv");
    write_pairs_csv(g, scan, *c);
  }
  fmt::print(out, "{}: observables at {} points\n", prefix, scan.points.size());
  return exit_code::ok;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Ground states and phase diagrams of multi-level atoms in multimode cavities", "qpd"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "qpd 0.1.0");
  ScanArgs scan;
  PointArgs point;
  ClassifyArgs classify;
  DimsArgs dims;
  ObservablesArgs observables;
  add_scan(app, scan);
  add_point(app, point);
  add_classify(app, classify);
  add_dims(app, dims);
  add_observables(app, observables);

  auto active = [&]() -> const CLI::App* {
    for (const auto* sub : app.get_subcommands()) return sub;
    return &app;
  };
  auto usage = [&](const std::string& message) {
    fmt::print(err, "error: {}\n\n{}", message, active()->help());
    return exit_code::config;
  };

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
    const CLI::App* sub = active();
    const std::string name = sub->get_name();
    if (name == "scan") return cmd_scan(scan, sub, out, err);
    if (name == "point") return cmd_point(point, sub, out);
    if (name == "classify") return cmd_classify(classify, sub, out);
    if (name == "dims") return cmd_dims(dims, out);
    if (name == "observables") return cmd_observables(observables, out, err);
    return usage("no subcommand");
  } catch (const CLI::CallForHelp&) {
    fmt::print(out, "{}", active()->help());
    return exit_code::ok;
  } catch (const CLI::CallForAllHelp&) {
    fmt::print(out, "{}", app.help("", CLI::AppFormatMode::All));
    return exit_code::ok;
  } catch (const CLI::CallForVersion&) {
    fmt::print(out, "{}\n", app.version());
    return exit_code::ok;
  } catch (const CLI::ParseError& e) {
    return usage(e.what());
  } catch (const ConfigError& e) {
    fmt::print(err, "error: {}\n", e.what());
    return exit_code::config;
  } catch (const DomainError& e) {
    fmt::print(err, "error: {}\n", e.what());
    return exit_code::config;
  } catch (const UnsupportedError& e) {
    fmt::print(err, "error: {}\n", e.what());
    return exit_code::config;
  } catch (const nlohmann::json::exception& e) {
    fmt::print(err, "error: malformed JSON input: {}\n", e.what());
    return exit_code::config;
  } catch (const SolverError& e) {
    fmt::print(err, "error: {} (best residual {})\n", e.what(), format_number(e.best_residual()));
    return exit_code::not_converged;
  } catch (const std::filesystem::filesystem_error& e) {
    fmt::print(err, "error: {}\n", e.what());
    return exit_code::config;
  } catch (const std::exception& e) {
    fmt::print(err, "internal error: {}\n", e.what());
    return exit_code::internal;
  }
}

}  // namespace qpd
