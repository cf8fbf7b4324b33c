#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "doctest.h"
#include "qpd/basis.hpp"
#include "qpd/errors.hpp"
#include "qpd/hamiltonian.hpp"
#include "qpd/solver.hpp"

using namespace qpd;

namespace {

SparseOperator from_dense(const Eigen::MatrixXd& m) {
  std::vector<MatrixEntry> entries;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = r; c < m.cols(); ++c) {
      entries.push_back({static_cast<std::size_t>(r), static_cast<std::size_t>(c), m(r, c)});
    }
  }
  return SparseOperator(static_cast<std::size_t>(m.rows()), entries);
}

double residual(const SparseOperator& h, const EigenPair& p) {
  return (h.to_sparse() * p.vector - p.value * p.vector).norm();
}

EigensolverOptions with_method(EigenMethod m) {
  EigensolverOptions o;
  o.method = m;
  return o;
}

BlockLabel label(const std::string& s) { return *parse_label(s); }

}  // namespace

TEST_CASE("small matrices") {
  Eigen::MatrixXd d = Eigen::Vector3d(0.3, 0.1, 0.2).asDiagonal();
  const auto pairs = lowest_eigenpairs(from_dense(d), 1);
  REQUIRE(pairs.size() == 1);
  CHECK(pairs[0].value == doctest::Approx(0.1));
  CHECK(pairs[0].vector.isApprox(Eigen::Vector3d(0, 1, 0)));

  const double a = 0.7, b = -0.4, c = 0.9;
  Eigen::Matrix2d m;
  m << a, c, c, b;
  const auto two = lowest_eigenpairs(from_dense(m), 2);
  const double r = std::sqrt((a - b) * (a - b) / 4 + c * c);
  CHECK(two[0].value == doctest::Approx((a + b) / 2 - r).epsilon(1e-14));
  CHECK(two[1].value == doctest::Approx((a + b) / 2 + r).epsilon(1e-14));

  CHECK_THROWS_AS(lowest_eigenpairs(from_dense(m), 0), DomainError);
  CHECK_THROWS_AS(lowest_eigenpairs(from_dense(m), 3), DomainError);
}

TEST_CASE("sign canonicalization") {
  Eigen::VectorXd v(3);
  v << 0.1, -0.9, 0.2;
  canonicalize_sign(v);
  CHECK(v[1] == doctest::Approx(0.9));
  CHECK(v[0] == doctest::Approx(-0.1));
}

TEST_CASE("method names") {
  for (auto m : {EigenMethod::Auto, EigenMethod::Dense, EigenMethod::Lanczos, EigenMethod::Davidson}) {
    CHECK(parse_eigen_method(to_string(m)) == m);
  }
  CHECK_FALSE(parse_eigen_method("arpack").has_value());
}

TEST_CASE("property: dense, Lanczos and Davidson agree on model blocks") {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> coupling(0.0, 5.0);
  int compared = 0;
  for (auto c : {Configuration::Xi, Configuration::Lambda, Configuration::V}) {
    for (int na : {1, 2}) {
      const auto spec = ModelSpec::preset(c, na);
      const auto info = symmetry_generators(spec.topology(), 3, 2);
      for (const auto& sigma : all_parity_keys(2)) {
        const auto b = enumerate_parity_basis(spec, info.generators, sigma, std::nullopt, {9, 9});
        if (b.size() < 60 || b.size() > 500) continue;
        const CouplingPoint x(spec.topology(), {coupling(rng), coupling(rng)});
        const auto h = build_H_full(b, spec, x);
        const auto dense = dense_lowest_eigenpairs(h, 3);
        for (auto m : {EigenMethod::Lanczos, EigenMethod::Davidson}) {
          const auto it = lowest_eigenpairs(h, 3, with_method(m));
          for (int i = 0; i < 3; ++i) {
            CHECK(std::abs(it[i].value - dense[i].value) <= 1e-9);
            CHECK(residual(h, it[i]) <= 1e-11 * std::max(1.0, std::abs(it[i].value)) * 1.0001);
            CHECK(std::abs(it[i].vector.norm() - 1.0) < 1e-12);
          }
          CHECK(std::abs(std::abs(it[0].vector.dot(dense[0].vector)) - 1.0) < 1e-9);
          CHECK(std::abs(it[0].vector.dot(it[1].vector)) < 1e-9);
        }
        ++compared;
      }
    }
  }
  CHECK(compared >= 6);
}

TEST_CASE("iterative solvers accept a guess") {
  const auto spec = ModelSpec::preset(Configuration::Lambda, 1);
  const GroundStateSolver solver(spec);
  const CouplingPoint x(spec.topology(), {2.0, 1.0});
  const auto b = solver.basis(label("ee"), {14, 14});
  const auto h = build_H_full(*b, spec, x);
  const auto dense = dense_lowest_eigenpairs(h, 1);
  Eigen::VectorXd guess = dense[0].vector + 0.01 * Eigen::VectorXd::Ones(dense[0].vector.size());
  for (auto m : {EigenMethod::Lanczos, EigenMethod::Davidson}) {
    const auto p = lowest_eigenpairs(h, 1, with_method(m), &guess);
    CHECK(p[0].value == doctest::Approx(dense[0].value).epsilon(1e-12));
    CHECK((p[0].vector - dense[0].vector).norm() < 1e-8);
  }
}

TEST_CASE("three-state lambda block at strong x13") {
  const auto spec = ModelSpec::preset(Configuration::Lambda, 1);
  const GroundStateSolver solver(spec);
  const CouplingPoint x(spec.topology(), {3.0, 0.05});
  const auto sol = solver.solve_block(x, Model::Rwa, label("1;1"), {5, 5});
  REQUIRE(sol.basis->size() == 3);
  const auto& b = *sol.basis;
  const double p_s1 = std::pow(sol.vector[static_cast<Eigen::Index>(b.find({{1, 0}, {1, 0, 0}}).value())], 2);
  const double p_s2 = std::pow(sol.vector[static_cast<Eigen::Index>(b.find({{0, 1}, {0, 1, 0}}).value())], 2);
  CHECK(p_s1 > 0.49);
  CHECK(p_s2 < 1e-3);
}

TEST_CASE("cutoff convergence") {
  const auto spec = ModelSpec::preset(Configuration::Lambda, 1);
  const GroundStateSolver solver(spec);

  const CouplingPoint zero(spec.topology(), {0.0, 0.0});
  const auto vac = solver.converge_cutoff(zero, Model::Dicke, label("eo"), {4, 4});
  CHECK(vac.converged);
  CHECK(vac.energy == doctest::Approx(0.0));
  // accepted on the first comparison; the larger cutoff of the pair is kept
  CHECK(vac.cutoff == Cutoff{6, 6});

  const CouplingPoint x(spec.topology(), {1.5, 2.5});
  const auto sector = solver.converge_cutoff(x, Model::Rwa, label("3;1"), solver.start_cutoff(label("3;1")));
  CHECK(sector.converged);
  CHECK(sector.cutoff == Cutoff{3, 1});

  const CouplingPoint deep(spec.topology(), {4.08, 3.99});
  const auto g = solver.converge_cutoff(deep, Model::Dicke, label("ee"), {4, 4});
  CHECK(g.converged);
  CHECK(std::abs(g.vector.norm() - 1.0) < 1e-12);
  const auto h = build_H_full(*g.basis, spec, deep);
  CHECK(h.expectation(g.vector) == doctest::Approx(g.energy).epsilon(1e-10));
  Cutoff more = g.cutoff;
  for (int& c : more) c += 2;
  const auto bigger = solver.solve_block(deep, Model::Dicke, label("ee"), more);
  CHECK(std::abs(bigger.energy - g.energy) <= 1e-8);
  CHECK(1.0 - std::pow(overlap(g, bigger), 2) <= 1e-10);

  SolverOptions tight;
  tight.convergence.max_cutoff = 6;
  const GroundStateSolver capped(spec, tight);
  CHECK_THROWS_AS(capped.converge_cutoff(deep, Model::Dicke, label("ee"), {4, 4}), SolverError);
}

TEST_CASE("property: variational monotonicity in the cutoff") {
  const auto spec = ModelSpec::preset(Configuration::Xi, 2);
  const GroundStateSolver solver(spec);
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> coupling(0.0, 5.0);
  for (int trial = 0; trial < 6; ++trial) {
    const CouplingPoint x(spec.topology(), {coupling(rng), coupling(rng)});
    for (const auto& sigma : solver.parity_labels()) {
      double previous = std::numeric_limits<double>::infinity();
      for (int c = 2; c <= 16; c += 2) {
        const auto sol = solver.solve_block(x, Model::Dicke, sigma, {c, c});
        if (sol.empty()) continue;
        CHECK(sol.energy <= previous + 1e-12);
        previous = sol.energy;
      }
    }
  }
}

TEST_CASE("ground over blocks") {
  const auto xi = ModelSpec::preset(Configuration::Xi, 1);
  const GroundStateSolver sx(xi);
  const CouplingPoint zero(xi.topology(), {0.0, 0.0});
  const auto labels = sx.sector_labels(4, 4, false);
  const auto r0 = sx.ground_over_blocks(zero, Model::Rwa, labels);
  CHECK(to_string(r0.ground.label) == "0;0");
  CHECK(r0.ground.energy == doctest::Approx(0.0));
  CHECK_FALSE(r0.degenerate);

  const auto lambda = ModelSpec::preset(Configuration::Lambda, 1);
  const GroundStateSolver sl(lambda);
  const CouplingPoint s13(lambda.topology(), {4.5, 0.3});
  const auto r13 = sl.ground_over_blocks(s13, Model::Rwa, sl.sector_labels(12, 12, false));
  const auto& k = std::get<SectorKey>(r13.ground.label).k;
  CHECK(k[0] > 0);
  CHECK(k[1] == 1);

  const auto xi4 = ModelSpec::preset(Configuration::Xi, 4);
  const GroundStateSolver s4(xi4);
  for (auto xy : {std::pair{1.0, 1.0}, std::pair{2.5, 0.5}, std::pair{0.5, 2.5}}) {
    const CouplingPoint x(xi4.topology(), {xy.first, xy.second});
    const auto r = s4.ground_over_blocks(x, Model::Dicke, s4.parity_labels(), nullptr, 1);
    CHECK(to_string(r.ground.label) == "ee");
    REQUIRE(r.levels.size() >= 2);
    CHECK(r.levels[0].energy == doctest::Approx(r.ground.energy));
    for (std::size_t i = 1; i < r.levels.size(); ++i) CHECK(r.levels[i].energy >= r.levels[i - 1].energy);
  }

  std::vector<BlockLabel> none;
  CHECK_THROWS_AS(sx.ground_over_blocks(zero, Model::Rwa, none), DomainError);
  // Xi with one atom: (0;3) holds no state
  std::vector<BlockLabel> empty{label("0;3")};
  CHECK_THROWS_AS(sx.ground_over_blocks(zero, Model::Rwa, empty), SolverError);
}

TEST_CASE("exact ties pick the smallest label") {
  // Both single-excitation sectors lie at 0.5 without coupling.
  const ModelSpec spec(LevelScheme({0.0, 0.5, 1.0}), ModeSet({0.5, 0.5}), configuration_topology(Configuration::V), 1);
  const GroundStateSolver solver(spec);
  const CouplingPoint x(spec.topology(), {0.0, 0.0});
  std::vector<BlockLabel> labels{label("1;0"), label("0;1")};
  const auto r = solver.ground_over_blocks(x, Model::Rwa, labels);
  CHECK(r.ground.energy == doctest::Approx(0.5));
  CHECK(r.tied.size() == 2);
  CHECK(r.degenerate);
  CHECK(to_string(r.ground.label) == "0;1");
}

TEST_CASE("overlap across cutoffs and warm starts") {
  const auto spec = ModelSpec::preset(Configuration::Lambda, 1);
  const GroundStateSolver solver(spec);
  const CouplingPoint x(spec.topology(), {2.12, 0.5});
  const auto a = solver.solve_block(x, Model::Dicke, label("eo"), {10, 10});
  const auto b = solver.solve_block(x, Model::Dicke, label("eo"), {12, 8});
  CHECK(overlap(a, a) == doctest::Approx(1.0));
  CHECK(overlap(a, b) == doctest::Approx(overlap(b, a)).epsilon(1e-14));
  const Eigen::VectorXd e = embed(a, *solver.basis(label("eo"), {12, 12}));
  CHECK(e.norm() == doctest::Approx(1.0));

  const auto cold = solver.ground_over_blocks(x, Model::Dicke, solver.parity_labels());
  const auto warm_map = warm_start_from(cold);
  const CouplingPoint near(spec.topology(), {2.17, 0.5});
  const auto warm = solver.ground_over_blocks(near, Model::Dicke, solver.parity_labels(), &warm_map);
  const auto fresh = solver.ground_over_blocks(near, Model::Dicke, solver.parity_labels());
  CHECK(warm.ground.label == fresh.ground.label);
  CHECK(warm.ground.energy == doctest::Approx(fresh.ground.energy).epsilon(1e-10));
  CHECK(std::abs(overlap(warm.ground, fresh.ground)) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("basis cache") {
  const auto spec = ModelSpec::preset(Configuration::Xi, 1);
  const GroundStateSolver solver(spec);
  const auto a = solver.basis(label("ee"), {4, 4});
  const auto b = solver.basis(label("ee"), {4, 4});
  CHECK(a.get() == b.get());
  // sector cutoffs beyond the photon bound share one basis
  CHECK(solver.basis(label("2;1"), {9, 9}).get() == solver.basis(label("2;1"), {20, 20}).get());
  CHECK_THROWS_AS(solver.basis(label("ee"), {4}), DomainError);
}
