#include "qpd/observables.hpp"

#include <cmath>
#include <map>

#include "qpd/errors.hpp"
#include "qpd/phase_diagram.hpp"

namespace qpd {

namespace {

void require_normalized(const Eigen::VectorXd& v, std::size_t dim) {
  if (static_cast<std::size_t>(v.size()) != dim) throw DomainError("state size does not match basis");
  if (std::abs(v.squaredNorm() - 1.0) > 1e-10) throw DomainError("state is not normalized");
}

}  // namespace

std::vector<double> MatterDensity::populations() const {
  std::vector<double> p(static_cast<std::size_t>(rho.rows()));
  for (Eigen::Index k = 0; k < rho.rows(); ++k) p[static_cast<std::size_t>(k)] = rho(k, k);
  return p;
}

double MatterDensity::max_offdiagonal() const {
  double m = 0.0;
  for (Eigen::Index j = 0; j < rho.rows(); ++j) {
    for (Eigen::Index k = 0; k < rho.cols(); ++k) {
      if (j != k) m = std::max(m, std::abs(rho(j, k)));
    }
  }
  return m;
}

MatterDensity reduced_matter(const SectorBasis& basis, const Eigen::VectorXd& state, int atoms) {
  require_normalized(state, basis.size());
  if (atoms < 1) throw DomainError("atom number must be positive");
  const int n = basis.levels();
  Eigen::MatrixXd rho = Eigen::MatrixXd::Zero(n, n);
  std::vector<int> b(n);
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const double amp = state[static_cast<Eigen::Index>(i)];
    if (amp == 0.0) continue;
    const auto b0 = basis.populations(i);
    for (int j = 0; j < n; ++j) rho(j, j) += amp * amp * b0[j];
    for (int k = 0; k < n; ++k) {
      if (b0[k] == 0) continue;
      for (int j = 0; j < n; ++j) {
        if (j == k) continue;
        std::copy(b0.begin(), b0.end(), b.begin());
        --b[k];
        ++b[j];
        auto t = basis.find(basis.photons(i), b);
        if (!t) continue;
        rho(j, k) += state[static_cast<Eigen::Index>(*t)] * amp * std::sqrt(static_cast<double>(b0[k]) * (b0[j] + 1));
      }
    }
  }
  return {rho / static_cast<double>(atoms)};
}

MatterDensity reduced_matter(const GroundSolution& state, int atoms) {
  if (state.empty()) throw DomainError("empty state");
  return reduced_matter(*state.basis, state.vector, atoms);
}

FieldDiagonal field_diagonal(const SectorBasis& basis, const Eigen::VectorXd& state) {
  require_normalized(state, basis.size());
  FieldDiagonal out;
  std::map<std::vector<int>, std::size_t> slot;
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const auto nu = basis.photons(i);
    std::vector<int> key(nu.begin(), nu.end());
    auto [it, inserted] = slot.emplace(key, out.size());
    if (inserted) out.emplace_back(std::move(key), 0.0);
    const double amp = state[static_cast<Eigen::Index>(i)];
    out[it->second].second += amp * amp;
  }
  return out;
}

FieldDiagonal field_diagonal(const GroundSolution& state) {
  if (state.empty()) throw DomainError("empty state");
  return field_diagonal(*state.basis, state.vector);
}

double linear_entropy(const MatterDensity& density) {
  return 1.0 - (density.rho * density.rho).trace();
}

double linear_entropy_diagonal3(double p1, double p2) {
  return 2.0 * (p1 + p2) - 2.0 * (p1 * p1 + p2 * p2 + p1 * p2);
}

std::array<double, 2> simplex_coords(std::span<const double> p) {
  if (p.size() != 3) throw DomainError("simplex coordinates need three probabilities");
  double sum = 0.0;
  for (double v : p) {
    if (!(v >= -1e-12)) throw DomainError("negative probability");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw DomainError("probabilities do not sum to one");
  return {p[1] + 0.5 * p[2], 0.5 * std::sqrt(3.0) * p[2]};
}

std::pair<double, double> pair_occupation_sums(Configuration config, std::span<const double> p) {
  if (p.size() != 3) throw DomainError("pair sums need three probabilities");
  switch (config) {
    case Configuration::Xi:
      return {p[0] + p[1], p[1] + p[2]};
    case Configuration::Lambda:
      return {p[0] + p[2], p[1] + p[2]};
    case Configuration::V:
      return {p[0] + p[1], p[0] + p[2]};
  }
  throw UnsupportedError("unknown configuration");
}

std::vector<std::pair<double, double>> pair_occupation_sums(const ScanResult& scan,
                                                            std::optional<Configuration> config) {
  if (!config) throw UnsupportedError("pair sums are defined for the Xi, Lambda and V configurations");
  std::vector<std::pair<double, double>> out;
  out.reserve(scan.points.size());
  for (const auto& pt : scan.points) out.push_back(pair_occupation_sums(*config, pt.populations));
  return out;
}

}  // namespace qpd
