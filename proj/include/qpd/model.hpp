#pragma once

#include <compare>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace qpd {

/// Atomic level energies in units of the highest level: omega_1 = 0 and
/// omega_n = 1, strictly increasing.
class LevelScheme {
 public:
  explicit LevelScheme(std::vector<double> omegas);

  int size() const { return static_cast<int>(omegas_.size()); }
  double omega(int j) const { return omegas_.at(j); }
  /// |omega_j - omega_k|
  double gap(int j, int k) const;
  const std::vector<double>& omegas() const { return omegas_; }

 private:
  std::vector<double> omegas_;
};

/// Cavity mode frequencies, all positive.
class ModeSet {
 public:
  explicit ModeSet(std::vector<double> frequencies);

  int size() const { return static_cast<int>(frequencies_.size()); }
  double frequency(int s) const { return frequencies_.at(s); }
  const std::vector<double>& frequencies() const { return frequencies_; }

 private:
  std::vector<double> frequencies_;
};

/// Dipole transition lower <-> upper driven by `mode`. Zero-based indices.
struct Edge {
  int lower = 0;
  int upper = 0;
  int mode = 0;

  auto operator<=>(const Edge&) const = default;
};

/// Set of non-zero dipolar strengths. Each level pair couples to at most one
/// mode. Edge order is preserved; it fixes the order of coupling values.
class CouplingTopology {
 public:
  CouplingTopology() = default;
  explicit CouplingTopology(std::vector<Edge> edges);

  std::span<const Edge> edges() const { return edges_; }
  int size() const { return static_cast<int>(edges_.size()); }
  const Edge& edge(int e) const { return edges_.at(e); }
  int distinct_modes() const;
  std::optional<int> index_of(const Edge& e) const;

 private:
  std::vector<Edge> edges_;
};

enum class Configuration { Xi, Lambda, V };

std::string to_string(Configuration c);
/// Accepts "xi", "Xi", "lambda", "Lambda", "v", "V".
std::optional<Configuration> parse_configuration(std::string_view name);
/// Table topology of a named three-level, two-mode configuration.
CouplingTopology configuration_topology(Configuration c);

class ModelSpec {
 public:
  ModelSpec(LevelScheme levels, ModeSet modes, CouplingTopology topology,
            int atoms);

  /// Named configuration with the frequencies used for the reference
  /// phase diagrams (Xi: 0.25/0.75, Lambda: 1/0.9, V: 0.8/1).
  static ModelSpec preset(Configuration c, int atoms);

  const LevelScheme& levels() const { return levels_; }
  const ModeSet& modes() const { return modes_; }
  const CouplingTopology& topology() const { return topology_; }
  int atoms() const { return atoms_; }
  int num_levels() const { return levels_.size(); }
  int num_modes() const { return modes_.size(); }

  /// Set when the topology is one of Xi / Lambda / V on three levels and
  /// two modes.
  std::optional<Configuration> configuration() const;

  /// Two-level critical coupling of edge e.
  double critical(int e) const;

 private:
  LevelScheme levels_;
  ModeSet modes_;
  CouplingTopology topology_;
  int atoms_;
};

/// mu_bar = sqrt(Omega * omega_jk) / 2
double critical_coupling(double mode_frequency, double level_gap);
/// Delta = Omega / omega_jk - 1
double detuning(double mode_frequency, double level_gap);

/// Dimensionless couplings x, one per topology edge, in edge order.
class CouplingPoint {
 public:
  CouplingPoint(const CouplingTopology& topology, std::vector<double> x);

  int size() const { return static_cast<int>(x_.size()); }
  double operator[](int e) const { return x_.at(e); }
  const std::vector<double>& values() const { return x_; }
  CouplingPoint with(int e, double value) const;

  /// Physical strength mu = x * mu_bar for edge e.
  double strength(const ModelSpec& spec, int e) const;
  /// Detuning of edge e.
  double detuning(const ModelSpec& spec, int e) const;

 private:
  std::vector<double> x_;
};

/// K = sum_s eta_s nu_s + sum_j lambda_j A_jj
struct SymmetryGenerator {
  std::vector<int> eta;
  std::vector<int> lambda;

  int eigenvalue(std::span<const int> photons,
                 std::span<const int> populations) const;
  bool commutes_with(const CouplingTopology& topology) const;

  auto operator<=>(const SymmetryGenerator&) const = default;
};

struct SymmetryInfo {
  std::vector<SymmetryGenerator> generators;
  int rank = 0;   ///< rank of the commutation constraint system
  int zeta0 = 0;  ///< independent constants of motion besides N_a

  /// eta coefficients followed by lambda coefficients.
  static std::vector<long long> flatten(const SymmetryGenerator& g);
};

/// Integer constants of motion of the RWA Hamiltonian modulo the Casimir
/// direction. Named configurations return the reference choices; anything
/// else gets the Hermite normal form of the lattice in the lambda_1 = 0 gauge.
SymmetryInfo symmetry_generators(const CouplingTopology& topology, int levels,
                                 int modes);

/// Hermite normal form basis of the same lattice, without the named-table
/// substitution.
SymmetryInfo canonical_generators(const CouplingTopology& topology, int levels,
                                  int modes);

}  // namespace qpd
