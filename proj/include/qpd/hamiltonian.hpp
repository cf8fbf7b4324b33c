#pragma once

#include <cstddef>
#include <iosfwd>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "qpd/basis.hpp"
#include "qpd/model.hpp"

namespace qpd {

/// GTCM keeps only the rotating terms, GDM the full dipolar interaction.
enum class Model { Rwa, Dicke };

std::string to_string(Model m);
std::optional<Model> parse_model(std::string_view name);

struct MatrixEntry {
  std::size_t row = 0;
  std::size_t col = 0;
  double value = 0.0;

  auto operator<=>(const MatrixEntry&) const = default;
};

/// Real symmetric operator in a basis. Only the upper triangle (row <= col)
/// is stored, sorted, with duplicates summed and exact zeros dropped.
class SparseOperator {
 public:
  SparseOperator() = default;
  SparseOperator(std::size_t dim, std::vector<MatrixEntry> entries);

  std::size_t dim() const { return dim_; }
  std::size_t nnz() const { return entries_.size(); }
  const std::vector<MatrixEntry>& entries() const { return entries_; }

  double element(std::size_t row, std::size_t col) const;
  double expectation(const Eigen::VectorXd& v) const;

  /// Full symmetric CSR copy for matrix-vector products.
  Eigen::SparseMatrix<double, Eigen::RowMajor> to_sparse() const;
  Eigen::MatrixXd to_dense() const;

 private:
  std::size_t dim_ = 0;
  std::vector<MatrixEntry> entries_;
};

/// H_D: sum_s Omega_s nu_s + sum_j omega_j b_j
SparseOperator build_H_diag(const SectorBasis& basis, const ModelSpec& spec);
/// H_D plus rotating terms -(mu/sqrt(N_a))(A_jk a_s^+ + A_kj a_s).
SparseOperator build_H_rwa(const SectorBasis& basis, const ModelSpec& spec,
                           const CouplingPoint& point);
/// H_RWA plus counter-rotating terms -(mu/sqrt(N_a))(A_jk a_s + A_kj a_s^+).
SparseOperator build_H_full(const SectorBasis& basis, const ModelSpec& spec,
                            const CouplingPoint& point);
SparseOperator build_hamiltonian(const SectorBasis& basis, const ModelSpec& spec,
                                 const CouplingPoint& point, Model model);
SparseOperator build_K(const SectorBasis& basis, const SymmetryGenerator& generator);

/// dH/dx for coupling edge e; the rotating part only for Model::Rwa.
SparseOperator build_coupling_derivative(const SectorBasis& basis, const ModelSpec& spec,
                                         int edge, Model model);

/// Collective operator A_jk (moves one atom from level k to level j) as a
/// full (non-symmetric) list of entries <t|A_jk|i>.
std::vector<MatrixEntry> collective_operator(const SectorBasis& basis, int j, int k);

/// "dim nnz" header followed by one "row col value" line per stored entry.
void write_triplets(std::ostream& out, const SparseOperator& op);

}  // namespace qpd
