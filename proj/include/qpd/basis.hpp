#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "qpd/model.hpp"

namespace qpd {

/// Product state |nu_1..nu_l ; b_1..b_n> with sum(b) = N_a.
struct FockState {
  std::vector<int> photons;
  std::vector<int> populations;

  auto operator<=>(const FockState&) const = default;
};

/// Eigenvalues (k_1, ..., k_zeta0) of the constants of motion.
struct SectorKey {
  std::vector<int> k;

  auto operator<=>(const SectorKey&) const = default;
};

enum class Parity : unsigned char { Even = 0, Odd = 1 };

struct ParityKey {
  std::vector<Parity> sigma;

  auto operator<=>(const ParityKey&) const = default;
};

/// Every product state inside the photon cutoff, no symmetry filter.
struct FullBasis {
  auto operator<=>(const FullBasis&) const = default;
};

/// A sector label selects the RWA Hamiltonian, a parity label the full one.
using BlockLabel = std::variant<FullBasis, SectorKey, ParityKey>;

/// Per-mode photon caps, nu_s <= cutoff[s].
using Cutoff = std::vector<int>;

std::string to_string(const SectorKey& key);   // "2;1"
std::string to_string(const ParityKey& key);   // "eo"
std::string to_string(const BlockLabel& label);
std::optional<BlockLabel> parse_label(std::string_view text);

ParityKey parity_of(const SectorKey& key);
/// Parity of a sector or parity label; nullopt for the full basis.
std::optional<ParityKey> parity_of(const BlockLabel& label);
/// All 2^zeta0 parity keys in lexicographic order (e before o).
std::vector<ParityKey> all_parity_keys(int zeta0);

SectorKey kappa_of(std::span<const SymmetryGenerator> generators,
                   const FockState& state);

/// Ordered set of product states. Storage is flat; states are sorted by
/// (kappa, photons, populations) so parity bases come out block-ordered
/// by sector.
class SectorBasis {
 public:
  SectorBasis(BlockLabel label, Cutoff cutoff, int modes, int levels,
              std::span<const SymmetryGenerator> generators,
              std::vector<FockState> states);

  std::size_t size() const { return count_; }
  bool empty() const { return count_ == 0; }
  int modes() const { return modes_; }
  int levels() const { return levels_; }
  int zeta0() const { return zeta0_; }
  const BlockLabel& label() const { return label_; }
  const Cutoff& cutoff() const { return cutoff_; }

  std::span<const int> photons(std::size_t i) const {
    return {labels_.data() + i * stride(), static_cast<std::size_t>(modes_)};
  }
  std::span<const int> populations(std::size_t i) const {
    return {labels_.data() + i * stride() + modes_, static_cast<std::size_t>(levels_)};
  }
  std::span<const int> kappa(std::size_t i) const {
    return {kappas_.data() + i * zeta0_, static_cast<std::size_t>(zeta0_)};
  }
  FockState state(std::size_t i) const;

  std::optional<std::size_t> find(std::span<const int> photons,
                                   std::span<const int> populations) const;
  std::optional<std::size_t> find(const FockState& s) const {
    return find(s.photons, s.populations);
  }

 private:
  std::size_t stride() const { return static_cast<std::size_t>(modes_ + levels_); }
  std::uint64_t encode(std::span<const int> photons, std::span<const int> populations) const;

  BlockLabel label_;
  Cutoff cutoff_;
  int modes_;
  int levels_;
  int zeta0_;
  std::size_t count_ = 0;
  std::vector<int> labels_;
  std::vector<int> kappas_;
  std::unordered_map<std::uint64_t, std::size_t> index_;
};

/// All occupation vectors b with sum(b) = atoms, lexicographic.
std::vector<std::vector<int>> matter_states(int levels, int atoms);

/// Largest photon number of each mode allowed in the sector by the
/// non-negative generators, capped by `cutoff`.
Cutoff sector_photon_bound(std::span<const SymmetryGenerator> generators,
                           const SectorKey& key, const Cutoff& cutoff);

SectorBasis enumerate_rwa_sector(const ModelSpec& spec,
                                 std::span<const SymmetryGenerator> generators,
                                 const SectorKey& key, const Cutoff& cutoff);

/// Direct sum of the sectors with parity sigma and kappa <= kappa_max
/// (componentwise; no bound when omitted) inside the cutoff.
SectorBasis enumerate_parity_basis(const ModelSpec& spec,
                                   std::span<const SymmetryGenerator> generators,
                                   const ParityKey& sigma,
                                   const std::optional<SectorKey>& kappa_max,
                                   const Cutoff& cutoff);

SectorBasis enumerate_truncated_basis(const ModelSpec& spec,
                                      std::span<const SymmetryGenerator> generators,
                                      const Cutoff& cutoff);

/// Degeneracy of an N-dimensional oscillator with n quanta; 0 for n < 0.
long long oscillator_degeneracy(int dimension, int quanta);

/// Closed-form sector dimension for the named configurations with their
/// reference generators.
long long sector_dimension_formula(Configuration config, const SectorKey& key, int atoms);

/// Sector labels that can host the RWA ground state, in family order,
/// restricted to the box [0,k1max] x [0,k2max].
std::vector<SectorKey> gtcm_candidate_sectors(Configuration config, int k1max, int k2max,
                                              int atoms);

}  // namespace qpd
