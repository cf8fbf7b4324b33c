#include "qpd/phase_diagram.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <set>
#include <thread>

#include <fmt/format.h>

#include "qpd/errors.hpp"
#include "qpd/observables.hpp"

namespace qpd {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr int kAutoBox = 12;
constexpr int kMaxBox = 1024;
}  // namespace

double AxisRange::value(int i) const {
  if (i == n - 1) return hi;
  return lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
}

AxisRange parse_axis_range(std::string_view text) {
  const std::string s(text);
  const auto a = s.find(':');
  const auto b = a == std::string::npos ? std::string::npos : s.find(':', a + 1);
  if (b == std::string::npos) throw ConfigError(fmt::format("axis range '{}' is not of the form a:b:n", s));
  AxisRange r;
  try {
    std::size_t used = 0;
    r.lo = std::stod(s.substr(0, a), &used);
    if (used != a) throw std::invalid_argument("lo");
    const std::string hi = s.substr(a + 1, b - a - 1);
    r.hi = std::stod(hi, &used);
    if (used != hi.size()) throw std::invalid_argument("hi");
    const std::string n = s.substr(b + 1);
    r.n = std::stoi(n, &used);
    if (used != n.size()) throw std::invalid_argument("n");
  } catch (const std::logic_error&) {
    throw ConfigError(fmt::format("axis range '{}' is not of the form a:b:n", s));
  }
  return r;
}

void GridSpec::validate() const {
  for (const AxisRange* r : {&x1, &x2}) {
    if (r->n < 2) throw ConfigError("each axis needs at least two points");
    if (!(r->lo >= 0.0) || !(r->hi > r->lo)) {
      throw ConfigError("axis ranges must be non-empty and non-negative");
    }
  }
}

std::string to_string(PointStatus s) {
  switch (s) {
    case PointStatus::Ok:
      return "ok";
    case PointStatus::BoxEdge:
      return "box_edge";
    case PointStatus::NotConverged:
      return "not_converged";
  }
  return "?";
}

std::optional<PointStatus> parse_point_status(std::string_view s) {
  for (auto v : {PointStatus::Ok, PointStatus::BoxEdge, PointStatus::NotConverged}) {
    if (s == to_string(v)) return v;
  }
  return std::nullopt;
}

bool ScanResult::ok() const {
  return std::all_of(points.begin(), points.end(),
                     [](const PointRecord& p) { return p.status != PointStatus::NotConverged; });
}

CouplingPoint grid_point(const ModelSpec& spec, const ScanOptions& options, double x1, double x2) {
  const int edges = spec.topology().size();
  std::vector<double> x = options.base.empty() ? std::vector<double>(edges, 0.0) : options.base;
  if (static_cast<int>(x.size()) != edges) throw ConfigError("base coupling size does not match the topology");
  if (options.edge1 < 0 || options.edge1 >= edges || options.edge2 < 0 || options.edge2 >= edges ||
      options.edge1 == options.edge2) {
    throw ConfigError("scan axes must be two distinct topology edges");
  }
  x[options.edge1] = x1;
  x[options.edge2] = x2;
  return CouplingPoint(spec.topology(), std::move(x));
}

namespace {

bool sector_scan(const GroundStateSolver& solver, Model model) {
  return model == Model::Rwa && solver.symmetry().zeta0 == 2;
}

GroundResult solve_point_impl(const GroundStateSolver& solver, const CouplingPoint& point,
                              Model model, const WarmStart* warm, int excited,
                              std::optional<std::pair<int, int>> kmax, bool full_box,
                              std::pair<int, int>* used_box, bool* box_edge) {
  if (box_edge) *box_edge = false;
  if (model == Model::Dicke) {
    const auto labels = solver.parity_labels();
    return solver.ground_over_blocks(point, model, labels, warm, excited);
  }
  if (!sector_scan(solver, model)) {
    const std::vector<BlockLabel> labels{FullBasis{}};
    return solver.ground_over_blocks(point, model, labels, warm, excited);
  }
  auto [a, b] = kmax.value_or(std::pair{kAutoBox, kAutoBox});
  while (true) {
    const auto labels = solver.sector_labels(a, b, full_box);
    GroundResult res = solver.ground_over_blocks(point, model, labels, warm, excited);
    const auto& k = std::get<SectorKey>(res.ground.label).k;
    const bool t1 = k[0] >= a;
    const bool t2 = k[1] >= b;
    if ((!t1 && !t2) || kmax || std::max(a, b) >= kMaxBox) {
      if (used_box) *used_box = {a, b};
      if (box_edge) *box_edge = t1 || t2;
      return res;
    }
    if (t1) a *= 2;
    if (t2) b *= 2;
  }
}

struct PointOutcome {
  PointRecord record;
  std::optional<GroundResult> result;
  std::exception_ptr error;
};

PointOutcome run_point(const GroundStateSolver& solver, const GridSpec& grid,
                       const ScanOptions& options, int i1, int i2, const WarmStart* warm) {
  PointOutcome out;
  PointRecord& rec = out.record;
  rec.x1 = grid.x1.value(i1);
  rec.x2 = grid.x2.value(i2);
  const auto& spec = solver.spec();
  try {
    const CouplingPoint point = grid_point(spec, options, rec.x1, rec.x2);
    bool edge = false;
    GroundResult res =
        solve_point_impl(solver, point, grid.model, warm, 0, options.kmax, options.full_box, nullptr, &edge);
    const MatterDensity rho = reduced_matter(res.ground, spec.atoms());
    rec.energy = res.ground.energy;
    rec.label = res.ground.label;
    rec.populations = rho.populations();
    rec.linear_entropy = linear_entropy(rho);
    rec.max_offdiagonal = rho.max_offdiagonal();
    rec.cutoff = res.ground.cutoff;
    rec.dimension = res.ground.basis->size();
    rec.degenerate = res.degenerate;
    rec.tied = res.tied;
    rec.status = edge ? PointStatus::BoxEdge : PointStatus::Ok;
    out.result = std::move(res);
  } catch (const SolverError& e) {
    rec.status = PointStatus::NotConverged;
    rec.energy = kNaN;
    rec.linear_entropy = kNaN;
    rec.populations.assign(static_cast<std::size_t>(spec.num_levels()), kNaN);
    rec.message = e.what();
    out.error = std::current_exception();
  }
  return out;
}

double pair_fidelity(const std::optional<GroundResult>& a, const std::optional<GroundResult>& b) {
  if (!a || !b) return kNaN;
  return fidelity(a->ground, b->ground);
}

}  // namespace

GroundResult solve_point(const GroundStateSolver& solver, const CouplingPoint& point, Model model,
                         const WarmStart* warm, int excited,
                         std::optional<std::pair<int, int>> kmax, bool full_box) {
  return solve_point_impl(solver, point, model, warm, excited, kmax, full_box, nullptr, nullptr);
}

ScanResult scan_ground(const GroundStateSolver& solver, const GridSpec& grid,
                       const ScanOptions& options) {
  grid.validate();
  ScanResult scan;
  scan.grid = grid;
  scan.points.resize(grid.size());
  scan.fidelity_x1.assign(grid.size(), kNaN);
  scan.fidelity_x2.assign(grid.size(), kNaN);
  if (sector_scan(solver, grid.model)) scan.kmax = options.kmax;

  const bool along_x1 = options.order == ScanOrder::AlongX1;
  const int line_len = along_x1 ? grid.x1.n : grid.x2.n;
  const int lines = along_x1 ? grid.x2.n : grid.x1.n;
  auto coords = [&](int line, int pos) {
    return along_x1 ? std::pair{pos, line} : std::pair{line, pos};
  };
  int jobs = options.jobs > 0 ? options.jobs : static_cast<int>(std::thread::hardware_concurrency());
  jobs = std::clamp(jobs, 1, line_len);

  std::vector<PointOutcome> previous;
  std::size_t done = 0;
  for (int line = 0; line < lines; ++line) {
    std::vector<PointOutcome> current(static_cast<std::size_t>(line_len));
    if (line == 0) {
      for (int pos = 0; pos < line_len; ++pos) {
        WarmStart warm;
        if (pos > 0 && current[pos - 1].result) warm = warm_start_from(*current[pos - 1].result);
        auto [i1, i2] = coords(line, pos);
        current[pos] = run_point(solver, grid, options, i1, i2, &warm);
      }
    } else {
      std::atomic<int> next{0};
      auto worker = [&] {
        for (int pos = next++; pos < line_len; pos = next++) {
          WarmStart warm;
          if (previous[pos].result) warm = warm_start_from(*previous[pos].result);
          auto [i1, i2] = coords(line, pos);
          current[pos] = run_point(solver, grid, options, i1, i2, &warm);
        }
      };
      if (jobs == 1) {
        worker();
      } else {
        std::vector<std::jthread> pool;
        for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
      }
    }

    for (int pos = 0; pos < line_len; ++pos) {
      auto& o = current[pos];
      if (o.error && !options.keep_going) {
        auto [i1, i2] = coords(line, pos);
        try {
          std::rethrow_exception(o.error);
        } catch (const SolverError& e) {
          throw SolverError(fmt::format("at x = ({:.12g}, {:.12g}): {}", grid.x1.value(i1),
                                        grid.x2.value(i2), e.what()),
                            e.best_residual());
        }
      }
      auto [i1, i2] = coords(line, pos);
      const std::size_t idx = grid.index(i1, i2);
      if (pos + 1 < line_len) {
        const double f = pair_fidelity(o.result, current[pos + 1].result);
        (along_x1 ? scan.fidelity_x1 : scan.fidelity_x2)[idx] = f;
      }
      if (line > 0) {
        auto [p1, p2] = coords(line - 1, pos);
        const double f = pair_fidelity(previous[pos].result, o.result);
        (along_x1 ? scan.fidelity_x2 : scan.fidelity_x1)[grid.index(p1, p2)] = f;
      }
      scan.points[idx] = o.record;
    }
    done += static_cast<std::size_t>(line_len);
    if (options.progress) options.progress(done, grid.size());
    previous = std::move(current);
  }
  return scan;
}

ScanResult scan_ground(const ModelSpec& spec, const GridSpec& grid, const ScanOptions& options,
                       const SolverOptions& solver_options) {
  const GroundStateSolver solver(spec, solver_options);
  return scan_ground(solver, grid, options);
}

double fidelity(const GroundSolution& a, const GroundSolution& b) {
  const double o = overlap(a, b);
  return std::min(1.0, o * o);
}

std::vector<double> fidelity_line(const GroundStateSolver& solver, Model model, int fixed_axis,
                                  double fixed_value, const AxisRange& varying,
                                  const ScanOptions& options) {
  if (fixed_axis != 1 && fixed_axis != 2) throw DomainError("fixed axis must be 1 or 2");
  if (varying.n < 2 || !(varying.hi > varying.lo)) throw DomainError("fidelity line needs a positive step");
  std::vector<double> out;
  std::optional<GroundResult> prev;
  for (int i = 0; i < varying.n; ++i) {
    const double v = varying.value(i);
    const CouplingPoint point = fixed_axis == 1 ? grid_point(solver.spec(), options, fixed_value, v)
                                                : grid_point(solver.spec(), options, v, fixed_value);
    WarmStart warm;
    if (prev) warm = warm_start_from(*prev);
    GroundResult res = solve_point(solver, point, model, &warm, 0, options.kmax, options.full_box);
    if (prev) out.push_back(fidelity(prev->ground, res.ground));
    prev = std::move(res);
  }
  return out;
}

double bures_from_overlap_squared(double f) {
  if (!(f >= 0.0) || f > 1.0 + 1e-12) throw DomainError("squared overlap outside [0, 1]");
  return std::sqrt(std::max(0.0, 2.0 * (1.0 - std::sqrt(std::min(f, 1.0)))));
}

BuresResult bures_distance(const GroundSolution& a, const GroundSolution& b) {
  for (const GroundSolution* s : {&a, &b}) {
    if (s->empty()) throw DomainError("empty state");
    if (std::abs(s->vector.squaredNorm() - 1.0) > 1e-10) throw DomainError("state is not normalized");
  }
  const double o = std::min(1.0, std::abs(overlap(a, b)));
  return {o * o, std::sqrt(std::max(0.0, 2.0 * (1.0 - o)))};
}

std::string to_string(TransitionKind k) {
  switch (k) {
    case TransitionKind::Discontinuous:
      return "discontinuous";
    case TransitionKind::UnstableContinuous:
      return "unstable-continuous";
    case TransitionKind::StableContinuous:
      return "stable-continuous";
  }
  return "?";
}

std::optional<TransitionKind> parse_transition_kind(std::string_view s) {
  for (auto k : {TransitionKind::Discontinuous, TransitionKind::UnstableContinuous,
                 TransitionKind::StableContinuous}) {
    if (s == to_string(k)) return k;
  }
  return std::nullopt;
}

TransitionClass classify_transition(double f, bool parity_change, const Thresholds& th) {
  if (parity_change || !(f > th.disc)) return {TransitionKind::Discontinuous, parity_change};
  if (f <= th.unstable) return {TransitionKind::UnstableContinuous, false};
  return {TransitionKind::StableContinuous, false};
}

std::vector<int> local_minima(const std::vector<double>& values, double below) {
  std::vector<int> out;
  const int n = static_cast<int>(values.size());
  for (int k = 0; k < n; ++k) {
    const double v = values[k];
    if (std::isnan(v) || !(v < below)) continue;
    if (k > 0 && !std::isnan(values[k - 1]) && !(values[k - 1] > v)) continue;
    int j = k + 1;
    while (j < n && values[j] == v) ++j;
    if (j < n && !std::isnan(values[j]) && !(values[j] > v)) continue;
    out.push_back(k);
  }
  return out;
}

std::vector<SeparatrixPoint> detect_separatrix(const ScanResult& scan, const Thresholds& th) {
  const GridSpec& g = scan.grid;
  std::vector<SeparatrixPoint> out;
  auto examine = [&](int axis, int fixed, int len) {
    std::vector<double> f(static_cast<std::size_t>(len - 1));
    auto idx = [&](int k) { return axis == 1 ? g.index(k, fixed) : g.index(fixed, k); };
    for (int k = 0; k + 1 < len; ++k) f[k] = (axis == 1 ? scan.fidelity_x1 : scan.fidelity_x2)[idx(k)];
    std::set<int> marks;
    for (int k = 0; k + 1 < len; ++k) {
      const auto& a = scan.points[idx(k)];
      const auto& b = scan.points[idx(k + 1)];
      if (a.status == PointStatus::NotConverged || b.status == PointStatus::NotConverged) continue;
      if (a.label != b.label) marks.insert(k);
    }
    for (int k : local_minima(f, th.minimum)) marks.insert(k);
    for (int k : marks) {
      const auto& a = scan.points[idx(k)];
      const auto& b = scan.points[idx(k + 1)];
      SeparatrixPoint sp;
      sp.axis = axis;
      sp.i1 = axis == 1 ? k : fixed;
      sp.i2 = axis == 1 ? fixed : k;
      sp.x1 = 0.5 * (a.x1 + b.x1);
      sp.x2 = 0.5 * (a.x2 + b.x2);
      sp.fidelity = f[k];
      sp.label_change = a.label != b.label;
      const bool parity_change = parity_of(a.label) != parity_of(b.label);
      sp.cls = classify_transition(f[k], parity_change, th);
      out.push_back(sp);
    }
  };
  for (int i2 = 0; i2 < g.x2.n; ++i2) examine(1, i2, g.x1.n);
  for (int i1 = 0; i1 < g.x1.n; ++i1) examine(2, i1, g.x2.n);
  std::sort(out.begin(), out.end(), [](const SeparatrixPoint& a, const SeparatrixPoint& b) {
    return std::tie(a.i2, a.i1, a.axis) < std::tie(b.i2, b.i1, b.axis);
  });
  return out;
}

double coupling_derivative_expectation(const GroundStateSolver& solver, const GroundSolution& state,
                                       int edge) {
  if (state.empty()) throw DomainError("empty state");
  if (edge < 0 || edge >= solver.spec().topology().size()) throw DomainError("edge index out of range");
  const SparseOperator d = build_coupling_derivative(*state.basis, solver.spec(), edge, state.model);
  return d.expectation(state.vector);
}

double energy_derivative(const GroundStateSolver& solver, const CouplingPoint& point, int edge,
                         Model model) {
  const GroundResult res = solve_point(solver, point, model);
  if (res.degenerate) {
    std::string labels;
    for (const auto& l : res.tied) labels += (labels.empty() ? "" : ", ") + to_string(l);
    throw DerivativeUndefined(fmt::format("ground state is degenerate ({}); use the one-sided branches",
                                          labels.empty() ? to_string(res.ground.label) : labels));
  }
  return coupling_derivative_expectation(solver, res.ground, edge);
}

std::vector<BranchDerivative> energy_derivative_branches(const GroundStateSolver& solver,
                                                         const CouplingPoint& point, int edge,
                                                         Model model) {
  const GroundResult res = solve_point(solver, point, model);
  std::vector<BranchDerivative> out;
  for (const auto& label : res.tied) {
    GroundSolution sol = label == res.ground.label ? res.ground : GroundSolution{};
    if (sol.empty()) {
      Cutoff start = solver.start_cutoff(label);
      for (const auto& b : res.blocks) {
        if (b.label == label) start = b.cutoff;
      }
      sol = solver.converge_cutoff(point, model, label, start);
    }
    out.push_back({label, sol.energy, coupling_derivative_expectation(solver, sol, edge)});
  }
  return out;
}

}  // namespace qpd
