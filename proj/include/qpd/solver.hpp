#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "qpd/basis.hpp"
#include "qpd/hamiltonian.hpp"
#include "qpd/model.hpp"

namespace qpd {

struct EigenPair {
  double value = 0.0;
  Eigen::VectorXd vector;
};

/// Auto uses the dense solver up to `dense_threshold` and Davidson above.
enum class EigenMethod { Auto, Dense, Lanczos, Davidson };
std::string to_string(EigenMethod m);
std::optional<EigenMethod> parse_eigen_method(std::string_view name);

struct EigensolverOptions {
  /// Residual bound ||Hv - Ev|| <= tolerance * max(1, |E|).
  double tolerance = 1e-11;
  EigenMethod method = EigenMethod::Auto;
  std::size_t dense_threshold = 48;
  /// Lanczos: Krylov dimension per restart cycle.
  int krylov_dim = 120;
  int max_restarts = 100;
  /// Davidson: largest search space before a restart.
  int subspace = 32;
  int max_iterations = 4000;
  std::uint64_t seed = 0x5eed2021;
};

/// The `count` smallest eigenpairs in ascending order, orthonormal vectors,
/// sign-canonicalized. `guess` seeds the first Lanczos vector.
std::vector<EigenPair> lowest_eigenpairs(const SparseOperator& h, int count,
                                         const EigensolverOptions& options = {},
                                         const Eigen::VectorXd* guess = nullptr);
std::vector<EigenPair> dense_lowest_eigenpairs(const SparseOperator& h, int count);
std::vector<EigenPair> lanczos_lowest_eigenpairs(const SparseOperator& h, int count,
                                                 const EigensolverOptions& options,
                                                 const Eigen::VectorXd* guess = nullptr);
/// Davidson iteration with the diagonal (Olsen) correction; suited to the
/// photon-dominated diagonal of these Hamiltonians.
std::vector<EigenPair> davidson_lowest_eigenpairs(const SparseOperator& h, int count,
                                                  const EigensolverOptions& options,
                                                  const Eigen::VectorXd* guess = nullptr);

/// Flip the sign so the largest-magnitude amplitude is positive.
void canonicalize_sign(Eigen::VectorXd& v);

/// Lowest eigenpair of one symmetry block.
struct GroundSolution {
  double energy = std::numeric_limits<double>::infinity();
  Eigen::VectorXd vector;
  std::shared_ptr<const SectorBasis> basis;
  BlockLabel label;
  Model model = Model::Dicke;
  Cutoff cutoff;
  bool converged = false;
  /// Further eigenvalues of the same block when more than one was requested.
  std::vector<double> excited;

  bool empty() const { return !basis || basis->empty(); }
};

/// <a|b> after embedding both states into the union of their bases.
double overlap(const GroundSolution& a, const GroundSolution& b);
/// Zero-padded copy of `from` in `into`; states missing from `into` dropped.
Eigen::VectorXd embed(const GroundSolution& from, const SectorBasis& into);

struct ConvergenceCriteria {
  double fidelity_tolerance = 1e-10;  ///< 1 - |<psi_c|psi_c'>|^2
  double energy_tolerance = 1e-8;     ///< |E_c - E_c'|
  int step = 2;
  int max_cutoff = 200;
  /// A mode whose top two photon numbers carry less weight is not grown.
  double tail_tolerance = 1e-15;
};

struct SolverOptions {
  EigensolverOptions eigen;
  ConvergenceCriteria convergence;
  double degeneracy_tolerance = 1e-10;
  int start_cutoff = 4;
  std::size_t basis_cache_size = 96;
};

struct BlockSummary {
  BlockLabel label;
  double energy = 0.0;
  Cutoff cutoff;
  std::size_t dimension = 0;
};

struct SpectrumLevel {
  double energy = 0.0;
  BlockLabel label;
};

struct GroundResult {
  GroundSolution ground;
  std::vector<BlockSummary> blocks;
  /// Labels whose ground energy ties E_g; the winner (smallest label) first.
  std::vector<BlockLabel> tied;
  /// Block ground energies and any requested excited levels, merged and
  /// sorted. Within-block degeneracy shows only when excited > 0.
  std::vector<SpectrumLevel> levels;
  bool degenerate = false;
  /// Converged state of every non-empty block, aligned with `blocks`.
  std::vector<GroundSolution> states;
};

/// Block states from a nearby point. Their cutoffs (less one step) seed the
/// cutoff search and their vectors seed the eigensolver.
using WarmStart = std::map<BlockLabel, GroundSolution>;
WarmStart warm_start_from(const GroundResult& result);

/// Owns the model, its symmetry generators and a basis cache. Thread-safe
/// for concurrent const use.
class GroundStateSolver {
 public:
  explicit GroundStateSolver(ModelSpec spec, SolverOptions options = {});

  const ModelSpec& spec() const { return spec_; }
  const SymmetryInfo& symmetry() const { return symmetry_; }
  std::span<const SymmetryGenerator> generators() const { return symmetry_.generators; }
  const SolverOptions& options() const { return options_; }

  std::shared_ptr<const SectorBasis> basis(const BlockLabel& label, const Cutoff& cutoff) const;

  GroundSolution solve_block(const CouplingPoint& point, Model model, const BlockLabel& label,
                             const Cutoff& cutoff, int count = 1,
                             const Eigen::VectorXd* guess = nullptr) const;

  /// Grows photon cutoffs by `step` until successive ground states agree
  /// within the fidelity and energy tolerances.
  GroundSolution converge_cutoff(const CouplingPoint& point, Model model, const BlockLabel& label,
                                 const Cutoff& start, int count = 1,
                                 const GroundSolution* warm = nullptr) const;

  /// Minimum over blocks. `excited` > 0 also merges that many higher
  /// levels per block.
  GroundResult ground_over_blocks(const CouplingPoint& point, Model model,
                                  std::span<const BlockLabel> labels,
                                  const WarmStart* warm = nullptr, int excited = 0) const;

  /// All parity blocks (Dicke model).
  std::vector<BlockLabel> parity_labels() const;
  /// Sector labels for the RWA scan: candidate families for named
  /// configurations, the full box otherwise.
  std::vector<BlockLabel> sector_labels(int k1max, int k2max, bool full_box) const;

  Cutoff start_cutoff(const BlockLabel& label) const;

 private:
  void refine_near_ties(const CouplingPoint& point, Model model, std::vector<GroundSolution>& solutions,
                        int count) const;

  ModelSpec spec_;
  SymmetryInfo symmetry_;
  SolverOptions options_;

  mutable std::mutex cache_mutex_;
  mutable std::map<std::pair<BlockLabel, Cutoff>, std::shared_ptr<const SectorBasis>> cache_;
  mutable std::vector<std::pair<BlockLabel, Cutoff>> cache_order_;
};

}  // namespace qpd
