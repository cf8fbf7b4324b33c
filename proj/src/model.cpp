#include "qpd/model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <utility>

#include <fmt/format.h>

#include "qpd/errors.hpp"
#include "qpd/integer_lattice.hpp"

namespace qpd {

LevelScheme::LevelScheme(std::vector<double> omegas) : omegas_(std::move(omegas)) {
  if (omegas_.size() < 2) throw ConfigError("level scheme needs at least two levels");
  if (omegas_.front() != 0.0) throw ConfigError("lowest level energy must be 0");
  if (omegas_.back() != 1.0) throw ConfigError("highest level energy must be 1");
  for (std::size_t j = 1; j < omegas_.size(); ++j) {
    if (!(omegas_[j] > omegas_[j - 1])) {
      throw ConfigError("level energies must be strictly increasing");
    }
  }
}

double LevelScheme::gap(int j, int k) const { return std::abs(omega(j) - omega(k)); }

ModeSet::ModeSet(std::vector<double> frequencies) : frequencies_(std::move(frequencies)) {
  if (frequencies_.empty()) throw ConfigError("at least one cavity mode is required");
  for (double f : frequencies_) {
    if (!(f > 0.0)) throw ConfigError("mode frequencies must be positive");
  }
}

CouplingTopology::CouplingTopology(std::vector<Edge> edges) : edges_(std::move(edges)) {
  std::set<std::pair<int, int>> pairs;
  for (const Edge& e : edges_) {
    if (e.lower < 0 || e.mode < 0 || e.lower >= e.upper) {
      throw ConfigError(fmt::format("invalid edge ({},{},{})", e.lower + 1,
                                    e.upper + 1, e.mode + 1));
    }
    if (!pairs.emplace(e.lower, e.upper).second) {
      throw ConfigError(fmt::format(
          "levels {} and {} are coupled by more than one mode", e.lower + 1, e.upper + 1));
    }
  }
}

int CouplingTopology::distinct_modes() const {
  std::set<int> modes;
  for (const Edge& e : edges_) modes.insert(e.mode);
  return static_cast<int>(modes.size());
}

std::optional<int> CouplingTopology::index_of(const Edge& e) const {
  auto it = std::find(edges_.begin(), edges_.end(), e);
  if (it == edges_.end()) return std::nullopt;
  return static_cast<int>(it - edges_.begin());
}

std::string to_string(Configuration c) {
  switch (c) {
    case Configuration::Xi: return "Xi";
    case Configuration::Lambda: return "Lambda";
    case Configuration::V: return "V";
  }
  return "?";
}

std::optional<Configuration> parse_configuration(std::string_view name) {
  std::string lower;
  for (char ch : name) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
  if (lower == "xi") return Configuration::Xi;
  if (lower == "lambda") return Configuration::Lambda;
  if (lower == "v") return Configuration::V;
  return std::nullopt;
}

CouplingTopology configuration_topology(Configuration c) {
  switch (c) {
    case Configuration::Xi: return CouplingTopology({{0, 1, 0}, {1, 2, 1}});
    case Configuration::Lambda: return CouplingTopology({{0, 2, 0}, {1, 2, 1}});
    case Configuration::V: return CouplingTopology({{0, 1, 0}, {0, 2, 1}});
  }
  throw UnsupportedError("unknown configuration");
}

ModelSpec::ModelSpec(LevelScheme levels, ModeSet modes, CouplingTopology topology, int atoms)
    : levels_(std::move(levels)),
      modes_(std::move(modes)),
      topology_(std::move(topology)),
      atoms_(atoms) {
  if (atoms_ < 1) throw ConfigError("atom number must be positive");
  if (topology_.size() == 0) throw ConfigError("topology has no couplings");
  for (const Edge& e : topology_.edges()) {
    if (e.upper >= levels_.size()) {
      throw ConfigError(fmt::format("edge references level {} of {}", e.upper + 1, levels_.size()));
    }
    if (e.mode >= modes_.size()) {
      throw ConfigError(fmt::format("edge references mode {} of {}", e.mode + 1, modes_.size()));
    }
  }
  if (topology_.distinct_modes() > levels_.size()) {
    throw ConfigError("more coupled modes than atomic levels");
  }
}

ModelSpec ModelSpec::preset(Configuration c, int atoms) {
  switch (c) {
    case Configuration::Xi:
      return ModelSpec(LevelScheme({0.0, 0.25, 1.0}), ModeSet({0.25, 0.75}),
                       configuration_topology(c), atoms);
    case Configuration::Lambda:
      return ModelSpec(LevelScheme({0.0, 0.1, 1.0}), ModeSet({1.0, 0.9}),
                       configuration_topology(c), atoms);
    case Configuration::V:
      return ModelSpec(LevelScheme({0.0, 0.8, 1.0}), ModeSet({0.8, 1.0}),
                       configuration_topology(c), atoms);
  }
  throw UnsupportedError("unknown configuration");
}

std::optional<Configuration> ModelSpec::configuration() const {
  if (num_levels() != 3 || num_modes() != 2) return std::nullopt;
  std::vector<Edge> mine(topology_.edges().begin(), topology_.edges().end());
  std::sort(mine.begin(), mine.end());
  for (Configuration c : {Configuration::Xi, Configuration::Lambda, Configuration::V}) {
    const CouplingTopology ref = configuration_topology(c);
    std::vector<Edge> theirs(ref.edges().begin(), ref.edges().end());
    std::sort(theirs.begin(), theirs.end());
    if (mine == theirs) return c;
  }
  return std::nullopt;
}

double ModelSpec::critical(int e) const {
  const Edge& edge = topology_.edge(e);
  return critical_coupling(modes_.frequency(edge.mode), levels_.gap(edge.lower, edge.upper));
}

double critical_coupling(double mode_frequency, double level_gap) {
  if (!(mode_frequency > 0.0) || !(level_gap > 0.0)) {
    throw DomainError("critical coupling needs positive frequency and gap");
  }
  return 0.5 * std::sqrt(mode_frequency * level_gap);
}

double detuning(double mode_frequency, double level_gap) {
  if (!(level_gap > 0.0)) throw DomainError("detuning needs a positive level gap");
  return mode_frequency / level_gap - 1.0;
}

CouplingPoint::CouplingPoint(const CouplingTopology& topology, std::vector<double> x)
    : x_(std::move(x)) {
  if (static_cast<int>(x_.size()) != topology.size()) {
    throw ConfigError(fmt::format("expected {} coupling values, got {}", topology.size(), x_.size()));
  }
  for (double v : x_) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("couplings must be finite and >= 0");
  }
}

CouplingPoint CouplingPoint::with(int e, double value) const {
  CouplingPoint copy = *this;
  copy.x_.at(e) = value;
  return copy;
}

double CouplingPoint::strength(const ModelSpec& spec, int e) const {
  return x_.at(e) * spec.critical(e);
}

double CouplingPoint::detuning(const ModelSpec& spec, int e) const {
  const Edge& edge = spec.topology().edge(e);
  return qpd::detuning(spec.modes().frequency(edge.mode),
                       spec.levels().gap(edge.lower, edge.upper));
}

int SymmetryGenerator::eigenvalue(std::span<const int> photons,
                                  std::span<const int> populations) const {
  int k = 0;
  for (std::size_t s = 0; s < eta.size(); ++s) k += eta[s] * photons[s];
  for (std::size_t j = 0; j < lambda.size(); ++j) k += lambda[j] * populations[j];
  return k;
}

bool SymmetryGenerator::commutes_with(const CouplingTopology& topology) const {
  for (const Edge& e : topology.edges()) {
    if (eta.at(e.mode) + lambda.at(e.lower) - lambda.at(e.upper) != 0) return false;
  }
  return true;
}

std::vector<long long> SymmetryInfo::flatten(const SymmetryGenerator& g) {
  std::vector<long long> v(g.eta.begin(), g.eta.end());
  v.insert(v.end(), g.lambda.begin(), g.lambda.end());
  return v;
}

namespace {

SymmetryGenerator unflatten(const std::vector<long long>& v, int modes) {
  SymmetryGenerator g;
  for (int s = 0; s < modes; ++s) g.eta.push_back(static_cast<int>(v[s]));
  for (std::size_t j = modes; j < v.size(); ++j) g.lambda.push_back(static_cast<int>(v[j]));
  return g;
}

std::vector<SymmetryGenerator> reference_generators(Configuration c) {
  switch (c) {
    case Configuration::Xi:  // nu1+nu2+A22+2A33, nu2+A33
      return {{{1, 1}, {0, 1, 2}}, {{0, 1}, {0, 0, 1}}};
    case Configuration::Lambda:  // nu1+nu2+A33, nu2+A11+A33
      return {{{1, 1}, {0, 0, 1}}, {{0, 1}, {1, 0, 1}}};
    case Configuration::V:  // nu1+A22, nu2+A33
      return {{{1, 0}, {0, 1, 0}}, {{0, 1}, {0, 0, 1}}};
  }
  return {};
}

}  // namespace

SymmetryInfo canonical_generators(const CouplingTopology& topology, int levels, int modes) {
  const int cols = modes + levels;
  lattice::IntMatrix rows;
  for (const Edge& e : topology.edges()) {
    if (e.mode >= modes || e.upper >= levels) {
      throw ConfigError("topology does not fit the level/mode counts");
    }
    std::vector<long long> row(cols, 0);
    row[e.mode] += 1;
    row[modes + e.lower] += 1;
    row[modes + e.upper] -= 1;
    rows.push_back(std::move(row));
  }
  SymmetryInfo info;
  lattice::integer_kernel(rows, cols, &info.rank);

  // lambda_1 = 0 picks one representative per Casimir coset.
  std::vector<long long> gauge(cols, 0);
  gauge[modes] = 1;
  rows.push_back(std::move(gauge));
  const auto kernel = lattice::hermite_normal_form(lattice::integer_kernel(rows, cols));
  info.zeta0 = static_cast<int>(kernel.size());
  for (const auto& v : kernel) info.generators.push_back(unflatten(v, modes));
  return info;
}

SymmetryInfo symmetry_generators(const CouplingTopology& topology, int levels, int modes) {
  SymmetryInfo info = canonical_generators(topology, levels, modes);
  if (levels == 3 && modes == 2 && topology.size() > 0) {
    std::vector<Edge> mine(topology.edges().begin(), topology.edges().end());
    std::sort(mine.begin(), mine.end());
    for (Configuration c : {Configuration::Xi, Configuration::Lambda, Configuration::V}) {
      const CouplingTopology ref = configuration_topology(c);
      std::vector<Edge> theirs(ref.edges().begin(), ref.edges().end());
      std::sort(theirs.begin(), theirs.end());
      if (mine == theirs) {
        info.generators = reference_generators(c);
        break;
      }
    }
  }
  return info;
}

}  // namespace qpd
