#include "qpd/basis.hpp"

#include <algorithm>
#include <charconv>
#include <functional>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "qpd/errors.hpp"

namespace qpd {

namespace {

constexpr int kPhotonBits = 10;
constexpr int kPopulationBits = 6;

}  // namespace

std::string to_string(const SectorKey& key) {
  if (key.k.empty()) return "-";
  return fmt::format("{}", fmt::join(key.k, ";"));
}

std::string to_string(const ParityKey& key) {
  if (key.sigma.empty()) return "_";
  std::string s;
  for (Parity p : key.sigma) s.push_back(p == Parity::Even ? 'e' : 'o');
  return s;
}

std::string to_string(const BlockLabel& label) {
  return std::visit(
      [](const auto& l) -> std::string {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, FullBasis>) {
          return "all";
        } else {
          return to_string(l);
        }
      },
      label);
}

std::optional<BlockLabel> parse_label(std::string_view text) {
  if (text == "all") return BlockLabel{FullBasis{}};
  if (text == "_") return BlockLabel{ParityKey{}};
  if (text == "-") return BlockLabel{SectorKey{}};
  if (!text.empty() && text.find_first_not_of("eo") == std::string_view::npos) {
    ParityKey key;
    for (char c : text) key.sigma.push_back(c == 'e' ? Parity::Even : Parity::Odd);
    return BlockLabel{key};
  }
  SectorKey key;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find(';', pos), text.size());
    int value = 0;
    const auto* first = text.data() + pos;
    const auto* last = text.data() + end;
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last || first == last) return std::nullopt;
    key.k.push_back(value);
    pos = end + 1;
  }
  return BlockLabel{key};
}

ParityKey parity_of(const SectorKey& key) {
  ParityKey out;
  for (int k : key.k) out.sigma.push_back((k % 2 == 0) ? Parity::Even : Parity::Odd);
  return out;
}

std::optional<ParityKey> parity_of(const BlockLabel& label) {
  if (const auto* s = std::get_if<SectorKey>(&label)) return parity_of(*s);
  if (const auto* p = std::get_if<ParityKey>(&label)) return *p;
  return std::nullopt;
}

std::vector<ParityKey> all_parity_keys(int zeta0) {
  std::vector<ParityKey> keys;
  const int count = 1 << zeta0;
  for (int mask = 0; mask < count; ++mask) {
    ParityKey key;
    for (int z = 0; z < zeta0; ++z) {
      key.sigma.push_back(((mask >> (zeta0 - 1 - z)) & 1) ? Parity::Odd : Parity::Even);
    }
    keys.push_back(std::move(key));
  }
  return keys;
}

SectorKey kappa_of(std::span<const SymmetryGenerator> generators, const FockState& state) {
  SectorKey key;
  for (const auto& g : generators) key.k.push_back(g.eigenvalue(state.photons, state.populations));
  return key;
}

SectorBasis::SectorBasis(BlockLabel label, Cutoff cutoff, int modes, int levels,
                         std::span<const SymmetryGenerator> generators,
                         std::vector<FockState> states)
    : label_(std::move(label)),
      cutoff_(std::move(cutoff)),
      modes_(modes),
      levels_(levels),
      zeta0_(static_cast<int>(generators.size())),
      count_(states.size()) {
  if (modes_ * kPhotonBits + levels_ * kPopulationBits > 64) {
    throw UnsupportedError("too many modes/levels for the state encoding");
  }
  std::vector<SectorKey> kappas;
  kappas.reserve(states.size());
  for (const auto& s : states) {
    if (static_cast<int>(s.photons.size()) != modes_ ||
        static_cast<int>(s.populations.size()) != levels_) {
      throw ConsistencyError("state shape does not match the basis");
    }
    for (int n : s.photons) {
      if (n < 0 || n >= (1 << kPhotonBits)) throw UnsupportedError("photon number out of range");
    }
    for (int b : s.populations) {
      if (b < 0 || b >= (1 << kPopulationBits)) throw UnsupportedError("population out of range");
    }
    kappas.push_back(kappa_of(generators, s));
  }
  std::vector<std::size_t> order(states.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (kappas[a] != kappas[b]) return kappas[a] < kappas[b];
    return states[a] < states[b];
  });
  labels_.reserve(states.size() * stride());
  kappas_.reserve(states.size() * zeta0_);
  index_.reserve(states.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    const FockState& s = states[order[i]];
    labels_.insert(labels_.end(), s.photons.begin(), s.photons.end());
    labels_.insert(labels_.end(), s.populations.begin(), s.populations.end());
    kappas_.insert(kappas_.end(), kappas[order[i]].k.begin(), kappas[order[i]].k.end());
    if (!index_.emplace(encode(s.photons, s.populations), i).second) {
      throw ConsistencyError("duplicate state in basis");
    }
  }
}

FockState SectorBasis::state(std::size_t i) const {
  auto p = photons(i);
  auto b = populations(i);
  return {std::vector<int>(p.begin(), p.end()), std::vector<int>(b.begin(), b.end())};
}

std::uint64_t SectorBasis::encode(std::span<const int> photons,
                                  std::span<const int> populations) const {
  std::uint64_t code = 0;
  for (int n : photons) code = (code << kPhotonBits) | static_cast<std::uint64_t>(n);
  for (int b : populations) code = (code << kPopulationBits) | static_cast<std::uint64_t>(b);
  return code;
}

std::optional<std::size_t> SectorBasis::find(std::span<const int> photons,
                                             std::span<const int> populations) const {
  if (static_cast<int>(photons.size()) != modes_ ||
      static_cast<int>(populations.size()) != levels_) {
    return std::nullopt;
  }
  for (int n : photons) {
    if (n < 0 || n >= (1 << kPhotonBits)) return std::nullopt;
  }
  for (int b : populations) {
    if (b < 0 || b >= (1 << kPopulationBits)) return std::nullopt;
  }
  auto it = index_.find(encode(photons, populations));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::vector<int>> matter_states(int levels, int atoms) {
  std::vector<std::vector<int>> out;
  std::vector<int> b(levels, 0);
  std::function<void(int, int)> fill = [&](int j, int left) {
    if (j == levels - 1) {
      b[j] = left;
      out.push_back(b);
      return;
    }
    for (int v = 0; v <= left; ++v) {
      b[j] = v;
      fill(j + 1, left - v);
    }
  };
  fill(0, atoms);
  return out;
}

Cutoff sector_photon_bound(std::span<const SymmetryGenerator> generators, const SectorKey& key,
                           const Cutoff& cutoff) {
  Cutoff bound = cutoff;
  for (std::size_t z = 0; z < generators.size(); ++z) {
    const auto& g = generators[z];
    const bool nonneg = std::all_of(g.eta.begin(), g.eta.end(), [](int v) { return v >= 0; }) &&
                        std::all_of(g.lambda.begin(), g.lambda.end(), [](int v) { return v >= 0; });
    if (!nonneg) continue;
    for (std::size_t s = 0; s < g.eta.size() && s < bound.size(); ++s) {
      if (g.eta[s] > 0) bound[s] = std::min(bound[s], std::max(0, key.k[z] / g.eta[s]));
    }
  }
  return bound;
}

namespace {

void check_cutoff(const ModelSpec& spec, const Cutoff& cutoff) {
  if (static_cast<int>(cutoff.size()) != spec.num_modes()) {
    throw ConfigError(fmt::format("cutoff has {} entries for {} modes", cutoff.size(),
                                  spec.num_modes()));
  }
  for (int c : cutoff) {
    if (c < 0) throw ConfigError("photon cutoffs must be >= 0");
  }
}

/// Calls visit(photons) for every photon vector with nu_s <= bound[s].
template <typename Visit>
void for_each_photon_vector(const Cutoff& bound, Visit&& visit) {
  std::vector<int> nu(bound.size(), 0);
  if (nu.empty()) {
    visit(nu);
    return;
  }
  while (true) {
    visit(nu);
    std::size_t s = nu.size();
    while (s > 0) {
      --s;
      if (nu[s] < bound[s]) {
        ++nu[s];
        break;
      }
      nu[s] = 0;
      if (s == 0) return;
    }
  }
}

}  // namespace

SectorBasis enumerate_rwa_sector(const ModelSpec& spec,
                                 std::span<const SymmetryGenerator> generators,
                                 const SectorKey& key, const Cutoff& cutoff) {
  check_cutoff(spec, cutoff);
  if (key.k.size() != generators.size()) {
    throw ConfigError("sector key length differs from the number of generators");
  }
  const Cutoff bound = sector_photon_bound(generators, key, cutoff);
  std::vector<FockState> states;
  for (const auto& b : matter_states(spec.num_levels(), spec.atoms())) {
    std::vector<int> residual = key.k;
    for (std::size_t z = 0; z < generators.size(); ++z) {
      for (std::size_t j = 0; j < b.size(); ++j) residual[z] -= generators[z].lambda[j] * b[j];
    }
    for_each_photon_vector(bound, [&](const std::vector<int>& nu) {
      for (std::size_t z = 0; z < generators.size(); ++z) {
        int k = 0;
        for (std::size_t s = 0; s < nu.size(); ++s) k += generators[z].eta[s] * nu[s];
        if (k != residual[z]) return;
      }
      states.push_back({nu, b});
    });
  }
  return SectorBasis(key, cutoff, spec.num_modes(), spec.num_levels(), generators,
                     std::move(states));
}

SectorBasis enumerate_parity_basis(const ModelSpec& spec,
                                   std::span<const SymmetryGenerator> generators,
                                   const ParityKey& sigma,
                                   const std::optional<SectorKey>& kappa_max,
                                   const Cutoff& cutoff) {
  check_cutoff(spec, cutoff);
  if (sigma.sigma.size() != generators.size()) {
    throw ConfigError("parity key length differs from the number of generators");
  }
  if (kappa_max && kappa_max->k.size() != generators.size()) {
    throw ConfigError("kappa_max length differs from the number of generators");
  }
  std::vector<FockState> states;
  for (const auto& b : matter_states(spec.num_levels(), spec.atoms())) {
    for_each_photon_vector(cutoff, [&](const std::vector<int>& nu) {
      for (std::size_t z = 0; z < generators.size(); ++z) {
        const int k = generators[z].eigenvalue(nu, b);
        const Parity p = (k % 2 == 0) ? Parity::Even : Parity::Odd;
        if (p != sigma.sigma[z]) return;
        if (kappa_max && k > kappa_max->k[z]) return;
      }
      states.push_back({nu, b});
    });
  }
  return SectorBasis(sigma, cutoff, spec.num_modes(), spec.num_levels(), generators,
                     std::move(states));
}

SectorBasis enumerate_truncated_basis(const ModelSpec& spec,
                                      std::span<const SymmetryGenerator> generators,
                                      const Cutoff& cutoff) {
  check_cutoff(spec, cutoff);
  std::vector<FockState> states;
  for (const auto& b : matter_states(spec.num_levels(), spec.atoms())) {
    for_each_photon_vector(cutoff, [&](const std::vector<int>& nu) { states.push_back({nu, b}); });
  }
  return SectorBasis(FullBasis{}, cutoff, spec.num_modes(), spec.num_levels(), generators,
                     std::move(states));
}

long long oscillator_degeneracy(int dimension, int quanta) {
  if (quanta < 0 || dimension < 1) return 0;
  // C(quanta + dimension - 1, dimension - 1), exact for the small arguments used here.
  long long result = 1;
  for (int i = 1; i < dimension; ++i) {
    result = result * (quanta + i) / i;
  }
  return result;
}

long long sector_dimension_formula(Configuration config, const SectorKey& key, int atoms) {
  if (key.k.size() != 2) throw ConfigError("named configurations have two constants of motion");
  const int k1 = key.k[0];
  const int k2 = key.k[1];
  const int na = atoms;
  if (k1 < 0 || k2 < 0) return 0;
  auto g2 = [](int n) { return oscillator_degeneracy(2, n); };
  auto g3 = [](int n) { return oscillator_degeneracy(3, n); };

  switch (config) {
    case Configuration::Xi:
      if (na >= k1 - k2 && 2 * k2 >= k1) return g3(k1 - k2);
      if (na >= k1 - k2 && 2 * k2 < k1) return g3(k1) - g3(k1 - k2 - 1) - 2 * g3(k2 - 1);
      if (na > k2 && na < k1 - k2) return g3(na) - g3(na - k2 - 1);
      return g3(na);  // na <= k2 && na < k1 - k2
    case Configuration::Lambda:
      if (k2 < k1 && na >= k2) return g3(k2);
      if (k2 >= k1 && na >= k2) return g3(k1);
      if (k2 >= k1 && na < k2) return g3(na + k1 - k2);
      return g3(na);  // k2 < k1 && na < k2
    case Configuration::V: {
      const int s = k1 + k2;
      const bool wide = s > na && 2 * na > s;
      if (na >= s) return g2(k1) * g2(k2);
      if ((2 * na <= s && k2 < na) || (wide && na < k1)) return g2(k2) * g2(na) - g3(k2 - 1);
      if ((2 * na <= s && k1 < na) || (wide && na < k2)) return g2(k1) * g2(na) - g3(k1 - 1);
      if (wide && na >= k1 && na >= k2) {
        return 1 + g2(k1 - 1) * g2(k2 - 1) + g2(na - 1) * g2(s - 1) - g3(s - 2) - g3(na - 2);
      }
      // Both k1, k2 >= na: every matter state fits, including the
      // boundary k1 == na or k2 == na.
      return g3(na);
    }
  }
  throw UnsupportedError("unknown configuration");
}

std::vector<SectorKey> gtcm_candidate_sectors(Configuration config, int k1max, int k2max,
                                              int atoms) {
  if (k1max < 0 || k2max < 0) throw ConfigError("kmax must be >= 0");
  std::vector<SectorKey> out;
  auto add = [&](int k1, int k2) {
    if (k1 < 0 || k2 < 0 || k1 > k1max || k2 > k2max) return;
    SectorKey key{{k1, k2}};
    if (std::find(out.begin(), out.end(), key) == out.end()) out.push_back(std::move(key));
  };
  switch (config) {
    case Configuration::Xi:
      for (int k1 = 0; k1 <= k1max; ++k1) add(k1, 0);
      for (int k2 = 0; k2 <= k2max; ++k2) add(k2 + atoms, k2);
      break;
    case Configuration::Lambda:
      for (int k1 = 0; k1 <= k1max; ++k1) add(k1, atoms);
      for (int k2 = 0; k2 <= k2max; ++k2) add(k2, k2);
      break;
    case Configuration::V:
      for (int k1 = 0; k1 <= k1max; ++k1) add(k1, 0);
      for (int k2 = 0; k2 <= k2max; ++k2) add(0, k2);
      break;
  }
  return out;
}

}  // namespace qpd
