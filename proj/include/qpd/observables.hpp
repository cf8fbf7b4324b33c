#pragma once

#include <array>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "qpd/basis.hpp"
#include "qpd/model.hpp"
#include "qpd/solver.hpp"

namespace qpd {

/// One-body matter density rho_jk = <A_jk> / N_a.
struct MatterDensity {
  Eigen::MatrixXd rho;

  std::vector<double> populations() const;
  double max_offdiagonal() const;
};

MatterDensity reduced_matter(const SectorBasis& basis, const Eigen::VectorXd& state, int atoms);
MatterDensity reduced_matter(const GroundSolution& state, int atoms);

/// Photon-number marginal, keyed by (nu_1..nu_l) in order of first
/// appearance in the basis.
using FieldDiagonal = std::vector<std::pair<std::vector<int>, double>>;

FieldDiagonal field_diagonal(const SectorBasis& basis, const Eigen::VectorXd& state);
FieldDiagonal field_diagonal(const GroundSolution& state);

/// 1 - Tr(rho^2)
double linear_entropy(const MatterDensity& density);
/// Diagonal three-level closed form 2(p1+p2) - 2(p1^2 + p2^2 + p1 p2).
double linear_entropy_diagonal3(double p1, double p2);

/// Barycentric map onto the triangle (0,0), (1,0), (1/2, sqrt(3)/2).
std::array<double, 2> simplex_coords(std::span<const double> p);

/// Xi: (p1+p2, p2+p3); Lambda: (p1+p3, p2+p3); V: (p1+p2, p1+p3).
std::pair<double, double> pair_occupation_sums(Configuration config, std::span<const double> p);

struct ScanResult;
/// Pair sums at every scanned point, in grid order.
std::vector<std::pair<double, double>> pair_occupation_sums(const ScanResult& scan,
                                                            std::optional<Configuration> config);

}  // namespace qpd
