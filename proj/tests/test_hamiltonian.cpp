#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <Eigen/Dense>

#include "doctest.h"
#include "qpd/basis.hpp"
#include "qpd/errors.hpp"
#include "qpd/hamiltonian.hpp"
#include "qpd/model.hpp"

using namespace qpd;

namespace {

struct Fixture {
  ModelSpec spec;
  SymmetryInfo info;
  explicit Fixture(Configuration c, int atoms = 1)
      : spec(ModelSpec::preset(c, atoms)), info(symmetry_generators(spec.topology(), 3, 2)) {}

  SectorBasis sector(int k1, int k2, Cutoff cut = {12, 12}) const {
    return enumerate_rwa_sector(spec, info.generators, {{k1, k2}}, cut);
  }
  SectorBasis parity(const std::string& sigma, Cutoff cut) const {
    const auto label = parse_label(sigma);
    return enumerate_parity_basis(spec, info.generators, std::get<ParityKey>(*label), std::nullopt, cut);
  }
  SectorBasis truncated(Cutoff cut) const { return enumerate_truncated_basis(spec, info.generators, cut); }
};

Eigen::MatrixXd dense_of(const std::vector<MatrixEntry>& entries, std::size_t dim) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  for (const auto& e : entries) m(static_cast<Eigen::Index>(e.row), static_cast<Eigen::Index>(e.col)) += e.value;
  return m;
}

std::size_t index_of(const SectorBasis& b, FockState s) { return b.find(s).value(); }

}  // namespace

TEST_CASE("diagonal part") {
  Fixture xi(Configuration::Xi);
  const auto b = xi.truncated({2, 2});
  const auto hd = build_H_diag(b, xi.spec);
  CHECK(hd.element(index_of(b, {{0, 0}, {1, 0, 0}}), index_of(b, {{0, 0}, {1, 0, 0}})) == 0.0);
  const auto i = index_of(b, {{1, 0}, {1, 0, 0}});
  CHECK(hd.element(i, i) == doctest::Approx(0.25));
  for (const auto& e : hd.entries()) CHECK(e.row == e.col);

  Fixture lambda(Configuration::Lambda);
  const auto bl = lambda.truncated({2, 2});
  const auto j = index_of(bl, {{0, 1}, {0, 1, 0}});
  CHECK(build_H_diag(bl, lambda.spec).element(j, j) == doctest::Approx(1.0));
}

TEST_CASE("two-level sector against the closed form") {
  Fixture xi(Configuration::Xi);
  const auto b = xi.sector(1, 0);
  REQUIRE(b.size() == 2);
  const double big_omega = 0.25;
  const double omega2 = 0.25;
  const double mu_bar = 0.125;
  for (double x : {0.0, 0.4, 1.0, 1.7, 3.3}) {
    const CouplingPoint point(xi.spec.topology(), {x, 0.0});
    const Eigen::MatrixXd h = build_H_rwa(b, xi.spec, point).to_dense();
    const double ground = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(h).eigenvalues()[0];
    const double expected = (big_omega + omega2) / 2.0 -
                            std::sqrt((big_omega - omega2) * (big_omega - omega2) / 4.0 + x * mu_bar * x * mu_bar);
    CHECK(ground == doctest::Approx(expected).epsilon(1e-14));
  }
}

TEST_CASE("three-state lambda sector") {
  Fixture lambda(Configuration::Lambda);
  const auto b = lambda.sector(1, 1);
  REQUIRE(b.size() == 3);
  const CouplingPoint point(lambda.spec.topology(), {1.3, 2.1});
  const auto h = build_H_rwa(b, lambda.spec, point);
  const auto up = index_of(b, {{0, 0}, {0, 0, 1}});
  const auto s1 = index_of(b, {{1, 0}, {1, 0, 0}});
  const auto s2 = index_of(b, {{0, 1}, {0, 1, 0}});
  CHECK(h.element(up, s1) == doctest::Approx(-1.3 * 0.5));
  CHECK(h.element(up, s2) == doctest::Approx(-2.1 * 0.45));
  CHECK(h.element(s1, s2) == 0.0);
  CHECK(h.element(up, up) == doctest::Approx(1.0));
  CHECK(h.element(s1, s1) == doctest::Approx(1.0));
  CHECK(h.element(s2, s2) == doctest::Approx(1.0));
}

TEST_CASE("counter-rotating element") {
  Fixture xi(Configuration::Xi);
  const auto b = xi.parity("ee", {4, 4});
  const CouplingPoint point(xi.spec.topology(), {2.2, 0.7});
  const auto h = build_H_full(b, xi.spec, point);
  CHECK(h.element(index_of(b, {{0, 0}, {1, 0, 0}}), index_of(b, {{1, 0}, {0, 1, 0}})) ==
        doctest::Approx(-2.2 * 0.125));
}

TEST_CASE("zero coupling leaves the diagonal part") {
  Fixture v(Configuration::V, 2);
  const auto b = v.truncated({3, 3});
  const CouplingPoint zero(v.spec.topology(), {0.0, 0.0});
  const auto hd = build_H_diag(b, v.spec).entries();
  CHECK(build_H_rwa(b, v.spec, zero).entries() == hd);
  CHECK(build_H_full(b, v.spec, zero).entries() == hd);
}

TEST_CASE("symmetry operators") {
  Fixture xi(Configuration::Xi);
  const auto b = xi.truncated({2, 2});
  const auto k1 = build_K(b, xi.info.generators[0]);
  const auto k2 = build_K(b, xi.info.generators[1]);
  const auto i = index_of(b, {{1, 1}, {1, 0, 0}});
  const auto j = index_of(b, {{0, 0}, {0, 0, 1}});
  CHECK(k1.element(i, i) == 2.0);
  CHECK(k2.element(j, j) == 1.0);
  for (const auto& e : k1.entries()) CHECK(e.row == e.col);
}

TEST_CASE("property: RWA commutes with K and the full Hamiltonian keeps parity") {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> coupling(0.0, 5.0);
  for (auto c : {Configuration::Xi, Configuration::Lambda, Configuration::V}) {
    for (int na : {1, 2}) {
      Fixture f(c, na);
      const auto b = f.truncated({4, 3});
      for (int trial = 0; trial < 5; ++trial) {
        const CouplingPoint point(f.spec.topology(), {coupling(rng), coupling(rng)});
        const Eigen::MatrixXd h = build_H_rwa(b, f.spec, point).to_dense();
        for (const auto& g : f.info.generators) {
          const Eigen::MatrixXd k = build_K(b, g).to_dense();
          CHECK((h * k - k * h).cwiseAbs().maxCoeff() == 0.0);
        }
        const auto full = build_H_full(b, f.spec, point);
        for (const auto& e : full.entries()) {
          CHECK(parity_of(kappa_of(f.info.generators, b.state(e.row))) ==
                parity_of(kappa_of(f.info.generators, b.state(e.col))));
        }
      }
    }
  }
}

TEST_CASE("two-level reduction gives the Rabi matrix") {
  Fixture xi(Configuration::Xi);
  const int cut = 6;
  const auto b = xi.truncated({cut, 0});
  const double x = 1.9;
  const CouplingPoint point(xi.spec.topology(), {x, 0.0});
  const auto h = build_H_full(b, xi.spec, point);
  const double g = x * 0.125;
  for (int n = 0; n <= cut; ++n) {
    const auto ground = index_of(b, {{n, 0}, {1, 0, 0}});
    const auto excited = index_of(b, {{n, 0}, {0, 1, 0}});
    CHECK(h.element(ground, ground) == doctest::Approx(0.25 * n));
    CHECK(h.element(excited, excited) == doctest::Approx(0.25 * n + 0.25));
    for (int m = 0; m <= cut; ++m) {
      const auto other = index_of(b, {{m, 0}, {0, 1, 0}});
      double expected = 0.0;
      if (m == n + 1) expected = -g * std::sqrt(m);
      if (m == n - 1) expected = -g * std::sqrt(n);
      CHECK(h.element(ground, other) == doctest::Approx(expected));
    }
  }
}

TEST_CASE("property: elements do not depend on the input order of states") {
  Fixture lambda(Configuration::Lambda, 2);
  const auto b = lambda.truncated({3, 3});
  std::vector<FockState> states;
  for (std::size_t i = 0; i < b.size(); ++i) states.push_back(b.state(i));
  std::mt19937 rng(3);
  std::shuffle(states.begin(), states.end(), rng);
  const SectorBasis shuffled(FullBasis{}, b.cutoff(), 2, 3, lambda.info.generators, states);
  const CouplingPoint point(lambda.spec.topology(), {2.5, 1.5});
  const auto h1 = build_H_full(b, lambda.spec, point);
  const auto h2 = build_H_full(shuffled, lambda.spec, point);
  REQUIRE(h1.nnz() == h2.nnz());
  for (const auto& e : h1.entries()) {
    const auto r = shuffled.find(b.state(e.row)).value();
    const auto c = shuffled.find(b.state(e.col)).value();
    CHECK(h2.element(r, c) == e.value);
  }
}

TEST_CASE("property: collective operators satisfy the U(n) algebra") {
  Fixture xi(Configuration::Xi, 3);
  const auto b = xi.truncated({0, 0});
  CHECK(b.size() == 10);
  Eigen::MatrixXd a[3][3];
  for (int j = 0; j < 3; ++j) {
    for (int k = 0; k < 3; ++k) a[j][k] = dense_of(collective_operator(b, j, k), b.size());
  }
  Eigen::MatrixXd casimir = Eigen::MatrixXd::Zero(10, 10);
  for (int j = 0; j < 3; ++j) casimir += a[j][j];
  CHECK((casimir - 3.0 * Eigen::MatrixXd::Identity(10, 10)).cwiseAbs().maxCoeff() == 0.0);
  for (int j = 0; j < 3; ++j) {
    for (int k = 0; k < 3; ++k) {
      CHECK((a[j][k].transpose() - a[k][j]).cwiseAbs().maxCoeff() < 1e-14);
      for (int l = 0; l < 3; ++l) {
        for (int m = 0; m < 3; ++m) {
          Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(10, 10);
          if (k == l) rhs += a[j][m];
          if (j == m) rhs -= a[l][k];
          const Eigen::MatrixXd lhs = a[j][k] * a[l][m] - a[l][m] * a[j][k];
          CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
        }
      }
    }
  }
}

TEST_CASE("coupling derivative is the linear coefficient") {
  Fixture lambda(Configuration::Lambda, 2);
  const auto b = lambda.parity("ee", {4, 4});
  const CouplingPoint x(lambda.spec.topology(), {1.2, 3.4});
  for (auto model : {Model::Rwa, Model::Dicke}) {
    for (int e = 0; e < 2; ++e) {
      const Eigen::MatrixXd diff = build_hamiltonian(b, lambda.spec, x.with(e, x[e] + 1.0), model).to_dense() -
                                   build_hamiltonian(b, lambda.spec, x, model).to_dense();
      const Eigen::MatrixXd d = build_coupling_derivative(b, lambda.spec, e, model).to_dense();
      CHECK((diff - d).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
}

TEST_CASE("sparse operator storage") {
  const SparseOperator op(3, {{2, 0, 1.5}, {0, 2, 0.5}, {1, 1, 0.0}, {0, 0, -1.0}});
  CHECK(op.nnz() == 2);
  CHECK(op.element(0, 2) == 2.0);
  CHECK(op.element(2, 0) == 2.0);
  CHECK(op.element(1, 1) == 0.0);
  Eigen::VectorXd v(3);
  v << 1.0, 0.0, 1.0;
  CHECK(op.expectation(v) == doctest::Approx(-1.0 + 2.0 * 2.0));
  CHECK_THROWS_AS(SparseOperator(2, {{0, 2, 1.0}}), ConsistencyError);
  CHECK_THROWS_AS(op.expectation(Eigen::VectorXd::Ones(2)), DomainError);
  CHECK((op.to_dense() - Eigen::MatrixXd(op.to_sparse())).cwiseAbs().maxCoeff() == 0.0);

  std::ostringstream out;
  write_triplets(out, op);
  CHECK(out.str() == "3 2\n0 0 -1\n0 2 2\n");
}

TEST_CASE("model names") {
  CHECK(parse_model("rwa") == Model::Rwa);
  CHECK(parse_model("Dicke") == Model::Dicke);
  CHECK_FALSE(parse_model("foo").has_value());
  CHECK(to_string(Model::Rwa) == "rwa");
}
