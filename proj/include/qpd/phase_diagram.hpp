#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "qpd/basis.hpp"
#include "qpd/hamiltonian.hpp"
#include "qpd/model.hpp"
#include "qpd/solver.hpp"

namespace qpd {

/// n equally spaced values on [lo, hi].
struct AxisRange {
  double lo = 0.0;
  double hi = 5.0;
  int n = 101;

  double value(int i) const;
  double step() const { return (hi - lo) / (n - 1); }
  auto operator<=>(const AxisRange&) const = default;
};

/// Parses "a:b:n".
AxisRange parse_axis_range(std::string_view text);

struct GridSpec {
  AxisRange x1;
  AxisRange x2;
  Model model = Model::Dicke;

  void validate() const;
  std::size_t size() const { return static_cast<std::size_t>(x1.n) * x2.n; }
  std::size_t index(int i1, int i2) const { return static_cast<std::size_t>(i2) * x1.n + i1; }
};

enum class ScanOrder { AlongX1, AlongX2 };

enum class PointStatus { Ok, BoxEdge, NotConverged };
std::string to_string(PointStatus s);
std::optional<PointStatus> parse_point_status(std::string_view s);

struct ScanOptions {
  /// Worker threads per grid line; 0 picks the hardware concurrency.
  int jobs = 1;
  ScanOrder order = ScanOrder::AlongX1;
  /// Edges driven by x1 and x2. Other edges keep their `base` value.
  int edge1 = 0;
  int edge2 = 1;
  std::vector<double> base;
  /// RWA only: scan every (k1, k2) in the box instead of the candidate
  /// families.
  bool full_box = false;
  /// RWA only: fixed sector box. Without it the box starts at 12 and grows
  /// while the winner touches its edge.
  std::optional<std::pair<int, int>> kmax;
  /// Record NotConverged points and carry on instead of throwing.
  bool keep_going = false;
  std::function<void(std::size_t done, std::size_t total)> progress;
};

struct PointRecord {
  double x1 = 0.0;
  double x2 = 0.0;
  double energy = 0.0;
  BlockLabel label;
  std::vector<double> populations;
  double linear_entropy = 0.0;
  double max_offdiagonal = 0.0;
  Cutoff cutoff;
  std::size_t dimension = 0;
  bool degenerate = false;
  std::vector<BlockLabel> tied;
  PointStatus status = PointStatus::Ok;
  std::string message;
};

struct ScanResult {
  GridSpec grid;
  std::vector<PointRecord> points;  ///< grid order, index i2 * n1 + i1
  /// F between (i1, i2) and (i1 + 1, i2); NaN on the last column.
  std::vector<double> fidelity_x1;
  /// F between (i1, i2) and (i1, i2 + 1); NaN on the last row.
  std::vector<double> fidelity_x2;
  std::optional<std::pair<int, int>> kmax;

  const PointRecord& at(int i1, int i2) const { return points.at(grid.index(i1, i2)); }
  bool ok() const;
};

/// Coupling point for grid coordinates.
CouplingPoint grid_point(const ModelSpec& spec, const ScanOptions& options, double x1, double x2);

/// Ground state over all blocks of the model at one point.
GroundResult solve_point(const GroundStateSolver& solver, const CouplingPoint& point, Model model,
                         const WarmStart* warm = nullptr, int excited = 0,
                         std::optional<std::pair<int, int>> kmax = std::nullopt,
                         bool full_box = false);

ScanResult scan_ground(const GroundStateSolver& solver, const GridSpec& grid,
                       const ScanOptions& options = {});
ScanResult scan_ground(const ModelSpec& spec, const GridSpec& grid,
                       const ScanOptions& options = {}, const SolverOptions& solver_options = {});

/// F = |<a|b>|^2 on the embedded common basis.
double fidelity(const GroundSolution& a, const GroundSolution& b);

/// F between consecutive ground states along one axis; n - 1 values.
/// `fixed_axis` is 1 or 2.
std::vector<double> fidelity_line(const GroundStateSolver& solver, Model model, int fixed_axis,
                                  double fixed_value, const AxisRange& varying,
                                  const ScanOptions& options = {});

struct BuresResult {
  double overlap_squared = 0.0;  ///< Tr rho_A rho_B for pure states
  double distance = 0.0;         ///< sqrt(2 (1 - |<A|B>|))
};

BuresResult bures_distance(const GroundSolution& a, const GroundSolution& b);
/// Pure-state form from the squared overlap.
double bures_from_overlap_squared(double f);

enum class TransitionKind { Discontinuous, UnstableContinuous, StableContinuous };
std::string to_string(TransitionKind k);
std::optional<TransitionKind> parse_transition_kind(std::string_view s);

struct Thresholds {
  double disc = 1e-6;
  double unstable = 0.5;
  /// A fidelity minimum counts only below this value.
  double minimum = 0.999;
};

struct TransitionClass {
  TransitionKind kind = TransitionKind::Discontinuous;
  bool parity_change = false;
};

TransitionClass classify_transition(double f, bool parity_change, const Thresholds& thresholds);

struct SeparatrixPoint {
  double x1 = 0.0;  ///< midpoint of the neighbouring grid points
  double x2 = 0.0;
  int axis = 1;     ///< direction along which the pair is neighbouring
  int i1 = 0;       ///< lower grid point of the pair
  int i2 = 0;
  double fidelity = 0.0;
  bool label_change = false;
  TransitionClass cls;
};

/// Union of detections along both axes, sorted by (i2, i1, axis).
std::vector<SeparatrixPoint> detect_separatrix(const ScanResult& scan, const Thresholds& thresholds = {});

/// Indices k of local minima of `values` (pairs k, k+1) with value below
/// `below`. Strict on the left, plateaus report their leftmost point; NaN
/// entries are skipped.
std::vector<int> local_minima(const std::vector<double>& values, double below);

/// <Psi_g| dH/dx_e |Psi_g>. Throws DerivativeUndefined at a degenerate
/// ground state.
double energy_derivative(const GroundStateSolver& solver, const CouplingPoint& point, int edge,
                         Model model);

struct BranchDerivative {
  BlockLabel label;
  double energy = 0.0;
  double derivative = 0.0;
};

/// Derivative of every block tied for the ground state; one entry when the
/// point is regular.
std::vector<BranchDerivative> energy_derivative_branches(const GroundStateSolver& solver,
                                                         const CouplingPoint& point, int edge,
                                                         Model model);

/// Expectation of dH/dx_e in a given block state.
double coupling_derivative_expectation(const GroundStateSolver& solver, const GroundSolution& state,
                                       int edge);

}  // namespace qpd
