#include "qpd/hamiltonian.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "qpd/errors.hpp"

namespace qpd {

std::string to_string(Model m) { return m == Model::Rwa ? "rwa" : "dicke"; }

std::optional<Model> parse_model(std::string_view name) {
  std::string lower;
  for (char c : name) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (lower == "rwa" || lower == "gtcm" || lower == "tavis-cummings") return Model::Rwa;
  if (lower == "dicke" || lower == "gdm" || lower == "full") return Model::Dicke;
  return std::nullopt;
}

SparseOperator::SparseOperator(std::size_t dim, std::vector<MatrixEntry> entries) : dim_(dim) {
  for (auto& e : entries) {
    if (e.row >= dim_ || e.col >= dim_) throw ConsistencyError("matrix entry outside dimension");
    if (e.row > e.col) std::swap(e.row, e.col);
  }
  std::sort(entries.begin(), entries.end(), [](const MatrixEntry& a, const MatrixEntry& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  for (const auto& e : entries) {
    if (!entries_.empty() && entries_.back().row == e.row && entries_.back().col == e.col) {
      entries_.back().value += e.value;
    } else {
      entries_.push_back(e);
    }
  }
  std::erase_if(entries_, [](const MatrixEntry& e) { return e.value == 0.0; });
}

double SparseOperator::element(std::size_t row, std::size_t col) const {
  if (row > col) std::swap(row, col);
  auto it = std::lower_bound(entries_.begin(), entries_.end(), MatrixEntry{row, col, 0.0},
                             [](const MatrixEntry& a, const MatrixEntry& b) {
                               return a.row != b.row ? a.row < b.row : a.col < b.col;
                             });
  if (it != entries_.end() && it->row == row && it->col == col) return it->value;
  return 0.0;
}

double SparseOperator::expectation(const Eigen::VectorXd& v) const {
  if (static_cast<std::size_t>(v.size()) != dim_) throw DomainError("vector size mismatch");
  double sum = 0.0;
  for (const auto& e : entries_) {
    const double w = e.value * v[static_cast<Eigen::Index>(e.row)] * v[static_cast<Eigen::Index>(e.col)];
    sum += (e.row == e.col) ? w : 2.0 * w;
  }
  return sum;
}

Eigen::SparseMatrix<double, Eigen::RowMajor> SparseOperator::to_sparse() const {
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(2 * entries_.size());
  for (const auto& e : entries_) {
    const auto r = static_cast<Eigen::Index>(e.row);
    const auto c = static_cast<Eigen::Index>(e.col);
    triplets.emplace_back(r, c, e.value);
    if (r != c) triplets.emplace_back(c, r, e.value);
  }
  const auto n = static_cast<Eigen::Index>(dim_);
  Eigen::SparseMatrix<double, Eigen::RowMajor> m(n, n);
  m.setFromTriplets(triplets.begin(), triplets.end());
  return m;
}

Eigen::MatrixXd SparseOperator::to_dense() const {
  const auto n = static_cast<Eigen::Index>(dim_);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (const auto& e : entries_) {
    m(static_cast<Eigen::Index>(e.row), static_cast<Eigen::Index>(e.col)) = e.value;
    m(static_cast<Eigen::Index>(e.col), static_cast<Eigen::Index>(e.row)) = e.value;
  }
  return m;
}

namespace {

void append_diagonal(const SectorBasis& basis, const ModelSpec& spec,
                     std::vector<MatrixEntry>& out) {
  for (std::size_t i = 0; i < basis.size(); ++i) {
    double e = 0.0;
    const auto nu = basis.photons(i);
    const auto b = basis.populations(i);
    for (int s = 0; s < spec.num_modes(); ++s) e += spec.modes().frequency(s) * nu[s];
    for (int j = 0; j < spec.num_levels(); ++j) e += spec.levels().omega(j) * b[j];
    out.push_back({i, i, e});
  }
}

bool same_parity(std::span<const int> a, std::span<const int> b) {
  for (std::size_t z = 0; z < a.size(); ++z) {
    if (((a[z] - b[z]) % 2) != 0) return false;
  }
  return true;
}

/// Lowering halves A_jk a_s^+ (rotating) and A_jk a_s (counter-rotating);
/// their conjugates fill the lower triangle implicitly.
void append_interaction(const SectorBasis& basis, const ModelSpec& spec,
                        std::span<const double> coefficient, bool rotating, bool counter,
                        std::vector<MatrixEntry>& out) {
  const auto& edges = spec.topology().edges();
  std::vector<int> nu(basis.modes());
  std::vector<int> b(basis.levels());
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const auto nu0 = basis.photons(i);
    const auto b0 = basis.populations(i);
    for (std::size_t e = 0; e < edges.size(); ++e) {
      const double c = coefficient[e];
      if (c == 0.0) continue;
      const Edge& edge = edges[e];
      if (b0[edge.upper] == 0) continue;
      std::copy(b0.begin(), b0.end(), b.begin());
      const double atom = std::sqrt(static_cast<double>(b0[edge.upper]) * (b0[edge.lower] + 1));
      --b[edge.upper];
      ++b[edge.lower];

      auto emit = [&](int delta, bool conserving) {
        std::copy(nu0.begin(), nu0.end(), nu.begin());
        const int before = nu[edge.mode];
        nu[edge.mode] += delta;
        if (nu[edge.mode] < 0) return;
        auto t = basis.find(nu, b);
        if (!t) return;  // outside the photon truncation
        if (conserving) {
          if (!std::equal(basis.kappa(i).begin(), basis.kappa(i).end(), basis.kappa(*t).begin())) {
            throw ConsistencyError("rotating term left its symmetry sector");
          }
        } else if (!same_parity(basis.kappa(i), basis.kappa(*t))) {
          throw ConsistencyError("counter-rotating term changed parity");
        }
        const double photon = std::sqrt(static_cast<double>(std::max(before, nu[edge.mode])));
        out.push_back({i, *t, c * atom * photon});
      };
      if (rotating) emit(+1, true);
      if (counter) emit(-1, false);
    }
  }
}

std::vector<double> coupling_coefficients(const ModelSpec& spec, const CouplingPoint& point) {
  if (point.size() != spec.topology().size()) {
    throw ConfigError("coupling point does not match the topology");
  }
  std::vector<double> c(point.size());
  const double scale = 1.0 / std::sqrt(static_cast<double>(spec.atoms()));
  for (int e = 0; e < point.size(); ++e) c[e] = -point.strength(spec, e) * scale;
  return c;
}

}  // namespace

SparseOperator build_H_diag(const SectorBasis& basis, const ModelSpec& spec) {
  std::vector<MatrixEntry> entries;
  append_diagonal(basis, spec, entries);
  return SparseOperator(basis.size(), std::move(entries));
}

SparseOperator build_H_rwa(const SectorBasis& basis, const ModelSpec& spec,
                           const CouplingPoint& point) {
  std::vector<MatrixEntry> entries;
  append_diagonal(basis, spec, entries);
  append_interaction(basis, spec, coupling_coefficients(spec, point), true, false, entries);
  return SparseOperator(basis.size(), std::move(entries));
}

SparseOperator build_H_full(const SectorBasis& basis, const ModelSpec& spec,
                            const CouplingPoint& point) {
  std::vector<MatrixEntry> entries;
  append_diagonal(basis, spec, entries);
  append_interaction(basis, spec, coupling_coefficients(spec, point), true, true, entries);
  return SparseOperator(basis.size(), std::move(entries));
}

SparseOperator build_hamiltonian(const SectorBasis& basis, const ModelSpec& spec,
                                 const CouplingPoint& point, Model model) {
  return model == Model::Rwa ? build_H_rwa(basis, spec, point) : build_H_full(basis, spec, point);
}

SparseOperator build_K(const SectorBasis& basis, const SymmetryGenerator& generator) {
  std::vector<MatrixEntry> entries;
  for (std::size_t i = 0; i < basis.size(); ++i) {
    entries.push_back(
        {i, i, static_cast<double>(generator.eigenvalue(basis.photons(i), basis.populations(i)))});
  }
  return SparseOperator(basis.size(), std::move(entries));
}

SparseOperator build_coupling_derivative(const SectorBasis& basis, const ModelSpec& spec,
                                         int edge, Model model) {
  std::vector<double> c(spec.topology().size(), 0.0);
  c.at(edge) = -spec.critical(edge) / std::sqrt(static_cast<double>(spec.atoms()));
  std::vector<MatrixEntry> entries;
  append_interaction(basis, spec, c, true, model == Model::Dicke, entries);
  return SparseOperator(basis.size(), std::move(entries));
}

std::vector<MatrixEntry> collective_operator(const SectorBasis& basis, int j, int k) {
  std::vector<MatrixEntry> out;
  std::vector<int> b(basis.levels());
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const auto b0 = basis.populations(i);
    if (j == k) {
      if (b0[j] != 0) out.push_back({i, i, static_cast<double>(b0[j])});
      continue;
    }
    if (b0[k] == 0) continue;
    std::copy(b0.begin(), b0.end(), b.begin());
    --b[k];
    ++b[j];
    auto t = basis.find(basis.photons(i), b);
    if (!t) continue;
    out.push_back({*t, i, std::sqrt(static_cast<double>(b0[k]) * (b0[j] + 1))});
  }
  return out;
}

void write_triplets(std::ostream& out, const SparseOperator& op) {
  fmt::print(out, "{} {}\n", op.dim(), op.nnz());
  for (const auto& e : op.entries()) fmt::print(out, "{} {} {:.17g}\n", e.row, e.col, e.value);
}

}  // namespace qpd
