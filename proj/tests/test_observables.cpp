#include <cmath>
#include <random>

#include "doctest.h"
#include "qpd/basis.hpp"
#include "qpd/errors.hpp"
#include "qpd/observables.hpp"
#include "qpd/phase_diagram.hpp"
#include "qpd/solver.hpp"

using namespace qpd;

namespace {

struct Fixture {
  ModelSpec spec;
  SymmetryInfo info;
  SectorBasis basis;
  explicit Fixture(Configuration c, int atoms = 1)
      : spec(ModelSpec::preset(c, atoms)),
        info(symmetry_generators(spec.topology(), 3, 2)),
        basis(enumerate_truncated_basis(spec, info.generators, {3, 3})) {}

  Eigen::VectorXd state(std::initializer_list<std::pair<FockState, double>> amps) const {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(basis.size()));
    for (const auto& [s, a] : amps) v[static_cast<Eigen::Index>(basis.find(s).value())] = a;
    return v;
  }
};

MatterDensity diagonal(double p1, double p2, double p3) {
  return {Eigen::MatrixXd(Eigen::Vector3d(p1, p2, p3).asDiagonal())};
}

}  // namespace

TEST_CASE("reduced matter density") {
  Fixture f(Configuration::Lambda);
  const auto vac = reduced_matter(f.basis, f.state({{{{0, 0}, {1, 0, 0}}, 1.0}}), 1);
  CHECK(vac.populations() == std::vector<double>{1.0, 0.0, 0.0});
  CHECK(vac.max_offdiagonal() == 0.0);

  const double h = std::sqrt(0.5);
  const auto mix = reduced_matter(f.basis, f.state({{{{1, 0}, {1, 0, 0}}, h}, {{{0, 0}, {0, 0, 1}}, h}}), 1);
  CHECK(mix.populations()[0] == doctest::Approx(0.5));
  CHECK(mix.populations()[2] == doctest::Approx(0.5));
  CHECK(mix.max_offdiagonal() == 0.0);

  // same photons, different levels: coherent
  const auto coherent = reduced_matter(f.basis, f.state({{{{0, 0}, {1, 0, 0}}, h}, {{{0, 0}, {0, 0, 1}}, h}}), 1);
  CHECK(coherent.rho(0, 2) == doctest::Approx(0.5));
  CHECK(coherent.rho(2, 0) == doctest::Approx(0.5));

  CHECK_THROWS_AS(reduced_matter(f.basis, f.state({{{{0, 0}, {1, 0, 0}}, 0.5}}), 1), DomainError);
}

TEST_CASE("field diagonal") {
  Fixture f(Configuration::Xi);
  const auto vac = field_diagonal(f.basis, f.state({{{{0, 0}, {1, 0, 0}}, 1.0}}));
  double total = 0.0;
  for (const auto& [nu, p] : vac) {
    if (nu == std::vector<int>{0, 0}) CHECK(p == 1.0);
    total += p;
  }
  CHECK(total == 1.0);

  const auto one = field_diagonal(f.basis, f.state({{{{1, 1}, {1, 0, 0}}, 1.0}}));
  for (const auto& [nu, p] : one) CHECK(p == (nu == std::vector<int>{1, 1} ? 1.0 : 0.0));

  const auto split = field_diagonal(
      f.basis, f.state({{{{1, 0}, {1, 0, 0}}, std::sqrt(0.6)}, {{{0, 1}, {1, 0, 0}}, std::sqrt(0.4)}}));
  for (const auto& [nu, p] : split) {
    if (nu == std::vector<int>{1, 0}) CHECK(p == doctest::Approx(0.6));
    if (nu == std::vector<int>{0, 1}) CHECK(p == doctest::Approx(0.4));
  }
}

TEST_CASE("linear entropy") {
  CHECK(linear_entropy(diagonal(1, 0, 0)) == doctest::Approx(0.0));
  CHECK(linear_entropy(diagonal(1.0 / 3, 1.0 / 3, 1.0 / 3)) == doctest::Approx(2.0 / 3));
  CHECK(linear_entropy(diagonal(0.5, 0.5, 0)) == doctest::Approx(0.5));
  CHECK(linear_entropy_diagonal3(0.5, 0.5) == doctest::Approx(0.5));
  CHECK(linear_entropy_diagonal3(1.0 / 3, 1.0 / 3) == doctest::Approx(2.0 / 3));
}

TEST_CASE("property: closed-form linear entropy on random diagonal densities") {
  std::mt19937 rng(21);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    double a = u(rng), b = u(rng);
    if (a > b) std::swap(a, b);
    const double p1 = a, p2 = b - a, p3 = 1.0 - b;
    const double s = linear_entropy(diagonal(p1, p2, p3));
    CHECK(std::abs(linear_entropy_diagonal3(p1, p2) - s) <= 1e-14);
    CHECK(s >= -1e-15);
    CHECK(s <= 2.0 / 3.0 + 1e-15);
  }
}

TEST_CASE("simplex coordinates") {
  const auto check = [](std::array<double, 3> p, double x, double y) {
    const auto c = simplex_coords(p);
    CHECK(c[0] == doctest::Approx(x));
    CHECK(c[1] == doctest::Approx(y));
  };
  check({1, 0, 0}, 0.0, 0.0);
  check({0, 1, 0}, 1.0, 0.0);
  check({0, 0, 1}, 0.5, std::sqrt(3.0) / 2);
  check({1.0 / 3, 1.0 / 3, 1.0 / 3}, 0.5, std::sqrt(3.0) / 6);
  CHECK_THROWS_AS(simplex_coords(std::array<double, 3>{0.5, 0.6, 0.0}), DomainError);
  CHECK_THROWS_AS(simplex_coords(std::array<double, 3>{1.2, -0.2, 0.0}), DomainError);
  CHECK_THROWS_AS(simplex_coords(std::array<double, 2>{0.5, 0.5}), DomainError);
}

TEST_CASE("pair occupation sums") {
  const std::array<double, 3> normal{1, 0, 0};
  CHECK(pair_occupation_sums(Configuration::Xi, normal) == std::pair{1.0, 0.0});
  CHECK(pair_occupation_sums(Configuration::Lambda, normal) == std::pair{1.0, 0.0});
  CHECK(pair_occupation_sums(Configuration::V, normal) == std::pair{1.0, 1.0});
  const std::array<double, 3> p{0.2, 0.3, 0.5};
  const auto [a, b] = pair_occupation_sums(Configuration::Lambda, p);
  CHECK(a == doctest::Approx(0.7));
  CHECK(b == doctest::Approx(0.8));

  ScanResult scan;
  scan.points.resize(2);
  scan.points[0].populations = {1, 0, 0};
  scan.points[1].populations = {0.2, 0.3, 0.5};
  const auto sums = pair_occupation_sums(scan, Configuration::Xi);
  REQUIRE(sums.size() == 2);
  CHECK(sums[1].second == doctest::Approx(0.8));
  CHECK_THROWS_AS(pair_occupation_sums(scan, std::nullopt), UnsupportedError);
}

TEST_CASE("property: ground-state densities are valid") {
  std::mt19937 rng(4);
  std::uniform_real_distribution<double> coupling(0.0, 5.0);
  for (auto c : {Configuration::Xi, Configuration::Lambda, Configuration::V}) {
    for (int na : {1, 2}) {
      const auto spec = ModelSpec::preset(c, na);
      const GroundStateSolver solver(spec);
      for (int t = 0; t < 4; ++t) {
        const CouplingPoint x(spec.topology(), {coupling(rng), coupling(rng)});
        const auto r = solver.ground_over_blocks(x, Model::Dicke, solver.parity_labels());
        const auto rho = reduced_matter(r.ground, na);
        CHECK(rho.rho.trace() == doctest::Approx(1.0).epsilon(1e-12));
        CHECK((rho.rho - rho.rho.transpose()).cwiseAbs().maxCoeff() < 1e-14);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(rho.rho);
        CHECK(es.eigenvalues().minCoeff() >= -1e-12);
        const double s = linear_entropy(rho);
        CHECK(s >= -1e-12);
        CHECK(s <= 2.0 / 3.0 + 1e-12);
        if (na == 1) CHECK(rho.max_offdiagonal() <= 1e-12);
        double total = 0.0;
        for (const auto& [nu, p] : field_diagonal(r.ground)) total += p;
        CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("property: a pure matter state has a single population vector") {
  const auto spec = ModelSpec::preset(Configuration::Xi, 2);
  const GroundStateSolver solver(spec);
  const CouplingPoint zero(spec.topology(), {0.0, 0.0});
  const auto r = solver.ground_over_blocks(zero, Model::Dicke, solver.parity_labels());
  const auto rho = reduced_matter(r.ground, 2);
  CHECK(linear_entropy(rho) == doctest::Approx(0.0));
  const auto& b = *r.ground.basis;
  std::vector<int> seen;
  for (std::size_t i = 0; i < b.size(); ++i) {
    if (std::abs(r.ground.vector[static_cast<Eigen::Index>(i)]) > 1e-12) {
      const auto pop = b.populations(i);
      if (seen.empty()) seen.assign(pop.begin(), pop.end());
      CHECK(std::equal(seen.begin(), seen.end(), pop.begin()));
    }
  }
}
