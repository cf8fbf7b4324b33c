#include <cmath>
#include <limits>
#include <random>

#include "doctest.h"
#include "qpd/errors.hpp"
#include "qpd/phase_diagram.hpp"

using namespace qpd;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

PointRecord record(const char* label) {
  PointRecord p;
  p.label = parse_label(label).value();
  p.populations = {1, 0, 0};
  return p;
}

}  // namespace

TEST_CASE("axis ranges") {
  const auto r = parse_axis_range("0:5:101");
  CHECK(r.lo == 0.0);
  CHECK(r.hi == 5.0);
  CHECK(r.n == 101);
  CHECK(r.step() == doctest::Approx(0.05));
  CHECK(r.value(100) == 5.0);
  CHECK(parse_axis_range("0.5:2.5:5").value(2) == doctest::Approx(1.5));
  for (const char* bad : {"", "0:5", "a:5:3", "0:5:x", "0:5:3:1", "0:5:3.5"}) {
    CHECK_THROWS_AS(parse_axis_range(bad), ConfigError);
  }

  GridSpec g{parse_axis_range("0:1:3"), parse_axis_range("0:1:4")};
  CHECK_NOTHROW(g.validate());
  CHECK(g.size() == 12);
  CHECK(g.index(2, 1) == 5);
  g.x1.n = 1;
  CHECK_THROWS_AS(g.validate(), ConfigError);
  g.x1 = parse_axis_range("-1:1:3");
  CHECK_THROWS_AS(g.validate(), ConfigError);
  g.x1 = parse_axis_range("2:1:3");
  CHECK_THROWS_AS(g.validate(), ConfigError);
}

TEST_CASE("grid points and base couplings") {
  const auto spec = ModelSpec::preset(Configuration::Xi, 1);
  ScanOptions opt;
  const auto p = grid_point(spec, opt, 1.5, 2.5);
  CHECK(p.values() == std::vector<double>{1.5, 2.5});
  opt.edge1 = 1;
  opt.edge2 = 0;
  CHECK(grid_point(spec, opt, 1.5, 2.5).values() == std::vector<double>{2.5, 1.5});
  opt.base = {0.1, 0.2, 0.3};
  CHECK_THROWS_AS(grid_point(spec, opt, 1.0, 1.0), ConfigError);
}

TEST_CASE("status and transition names") {
  for (auto s : {PointStatus::Ok, PointStatus::BoxEdge, PointStatus::NotConverged}) {
    CHECK(parse_point_status(to_string(s)) == s);
  }
  for (auto k : {TransitionKind::Discontinuous, TransitionKind::UnstableContinuous,
                 TransitionKind::StableContinuous}) {
    CHECK(parse_transition_kind(to_string(k)) == k);
  }
  CHECK_FALSE(parse_point_status("fine").has_value());
  CHECK_FALSE(parse_transition_kind("sudden").has_value());
}

TEST_CASE("transition classification") {
  const Thresholds th;
  CHECK(classify_transition(0.0, false, th).kind == TransitionKind::Discontinuous);
  CHECK(classify_transition(1e-6, false, th).kind == TransitionKind::Discontinuous);
  CHECK(classify_transition(2e-6, false, th).kind == TransitionKind::UnstableContinuous);
  CHECK(classify_transition(0.5, false, th).kind == TransitionKind::UnstableContinuous);
  CHECK(classify_transition(0.51, false, th).kind == TransitionKind::StableContinuous);
  CHECK(classify_transition(kNaN, false, th).kind == TransitionKind::Discontinuous);
  const auto parity = classify_transition(0.99, true, th);
  CHECK(parity.kind == TransitionKind::Discontinuous);
  CHECK(parity.parity_change);
}

TEST_CASE("local minima") {
  CHECK(local_minima({1.0, 0.5, 1.0}, 0.999) == std::vector<int>{1});
  CHECK(local_minima({1.0, 0.9995, 1.0}, 0.999).empty());
  CHECK(local_minima({0.2, 0.5, 0.1}, 0.999) == std::vector<int>{0, 2});
  // plateau reports its leftmost point
  CHECK(local_minima({1.0, 0.3, 0.3, 0.3, 0.9}, 0.999) == std::vector<int>{1});
  // a plateau that rises on one side only is not a minimum
  CHECK(local_minima({1.0, 0.3, 0.3, 0.2}, 0.999) == std::vector<int>{3});
  CHECK(local_minima({kNaN, 0.5, kNaN, 0.7, 0.8}, 0.999) == std::vector<int>{1, 3});
  CHECK(local_minima({}, 0.999).empty());
}

TEST_CASE("synthetic separatrix") {
  // 3 x 2 grid: the label changes between columns 0 and 1 on both rows,
  // with fidelity dips along x2 in column 0 and along x1 on row 1.
  ScanResult scan;
  scan.grid = {parse_axis_range("0:2:3"), parse_axis_range("0:1:2")};
  scan.points = {record("ee"), record("oe"), record("oe"), record("ee"), record("oe"), record("oe")};
  for (int i2 = 0; i2 < 2; ++i2) {
    for (int i1 = 0; i1 < 3; ++i1) {
      auto& p = scan.points[scan.grid.index(i1, i2)];
      p.x1 = i1;
      p.x2 = i2;
    }
  }
  scan.fidelity_x1 = {0.9, 1.0, kNaN, 1.0, 0.3, kNaN};
  scan.fidelity_x2 = {0.1, 1.0, 1.0, kNaN, kNaN, kNaN};
  const auto sep = detect_separatrix(scan);
  REQUIRE(sep.size() == 4);

  CHECK(sep[0].axis == 1);
  CHECK(sep[0].i1 == 0);
  CHECK(sep[0].i2 == 0);
  CHECK(sep[0].x1 == 0.5);
  CHECK(sep[0].x2 == 0.0);
  CHECK(sep[0].fidelity == 0.9);
  CHECK(sep[0].label_change);
  CHECK(sep[0].cls.parity_change);
  CHECK(sep[0].cls.kind == TransitionKind::Discontinuous);

  CHECK(sep[1].axis == 2);
  CHECK(sep[1].i1 == 0);
  CHECK(sep[1].i2 == 0);
  CHECK(sep[1].x1 == 0.0);
  CHECK(sep[1].x2 == 0.5);
  CHECK_FALSE(sep[1].label_change);
  CHECK(sep[1].cls.kind == TransitionKind::UnstableContinuous);

  CHECK(sep[2].axis == 1);
  CHECK(sep[2].i1 == 0);
  CHECK(sep[2].i2 == 1);
  CHECK(sep[2].fidelity == 1.0);
  CHECK(sep[2].label_change);
  CHECK(sep[2].cls.kind == TransitionKind::Discontinuous);

  CHECK(sep[3].axis == 1);
  CHECK(sep[3].i1 == 1);
  CHECK(sep[3].i2 == 1);
  CHECK(sep[3].fidelity == 0.3);
  CHECK_FALSE(sep[3].label_change);
  CHECK(sep[3].cls.kind == TransitionKind::UnstableContinuous);

  Thresholds strict;
  strict.unstable = 0.2;
  CHECK(detect_separatrix(scan, strict)[3].cls.kind == TransitionKind::StableContinuous);

  scan.points[4].status = PointStatus::NotConverged;
  CHECK(detect_separatrix(scan).size() == 3);
}

TEST_CASE("fidelity and Bures distance") {
  CHECK(bures_from_overlap_squared(1.0) == 0.0);
  CHECK(bures_from_overlap_squared(0.0) == doctest::Approx(std::sqrt(2.0)));
  CHECK(bures_from_overlap_squared(0.25) == doctest::Approx(1.0));

  const auto spec = ModelSpec::preset(Configuration::Lambda, 1);
  const GroundStateSolver solver(spec);
  const auto a = solve_point(solver, CouplingPoint(spec.topology(), {0.5, 0.5}), Model::Dicke);
  const auto b = solve_point(solver, CouplingPoint(spec.topology(), {1.5, 0.4}), Model::Dicke);
  CHECK(fidelity(a.ground, a.ground) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(fidelity(a.ground, b.ground) == doctest::Approx(fidelity(b.ground, a.ground)).epsilon(1e-14));
  const auto self = bures_distance(a.ground, a.ground);
  CHECK(self.distance == doctest::Approx(0.0).epsilon(1e-6));
  const auto ab = bures_distance(a.ground, b.ground);
  CHECK(ab.overlap_squared == doctest::Approx(fidelity(a.ground, b.ground)).epsilon(1e-14));
  CHECK(ab.distance == doctest::Approx(bures_from_overlap_squared(ab.overlap_squared)).epsilon(1e-12));
  CHECK(ab.distance >= 0.0);
  CHECK(ab.distance <= std::sqrt(2.0) + 1e-14);
}

TEST_CASE("zero coupling gives the bare ground state") {
  for (auto c : {Configuration::Xi, Configuration::Lambda, Configuration::V}) {
    for (int na : {1, 3}) {
      const auto spec = ModelSpec::preset(c, na);
      const GroundStateSolver solver(spec);
      for (auto model : {Model::Dicke, Model::Rwa}) {
        const auto r = solve_point(solver, CouplingPoint(spec.topology(), {0.0, 0.0}), model);
        CHECK(r.ground.energy == doctest::Approx(0.0).epsilon(1e-14));
        CHECK_FALSE(r.degenerate);
      }
    }
  }
}

TEST_CASE("property: scan is independent of sweep order and thread count") {
  const auto spec = ModelSpec::preset(Configuration::Lambda, 1);
  const GroundStateSolver solver(spec);
  const GridSpec grid{parse_axis_range("0:3:5"), parse_axis_range("0:3:4")};
  ScanOptions opt;
  const auto a = scan_ground(solver, grid, opt);
  opt.order = ScanOrder::AlongX2;
  const auto b = scan_ground(solver, grid, opt);
  opt.order = ScanOrder::AlongX1;
  opt.jobs = 3;
  const auto c = scan_ground(solver, grid, opt);
  REQUIRE(a.points.size() == grid.size());
  REQUIRE(b.points.size() == grid.size());
  CHECK(a.ok());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    CHECK(a.points[i].label == b.points[i].label);
    CHECK(a.points[i].energy == doctest::Approx(b.points[i].energy).epsilon(1e-8));
    for (int j = 0; j < 3; ++j) {
      CHECK(std::abs(a.points[i].populations[j] - b.points[i].populations[j]) < 1e-6);
    }
    CHECK(a.points[i].label == c.points[i].label);
    CHECK(a.points[i].energy == c.points[i].energy);
    CHECK(a.points[i].populations == c.points[i].populations);
    if (!std::isnan(a.fidelity_x1[i])) CHECK(a.fidelity_x1[i] == c.fidelity_x1[i]);
  }
  for (int i2 = 0; i2 < grid.x2.n; ++i2) CHECK(std::isnan(a.fidelity_x1[grid.index(grid.x1.n - 1, i2)]));
  for (int i1 = 0; i1 < grid.x1.n; ++i1) CHECK(std::isnan(a.fidelity_x2[grid.index(i1, grid.x2.n - 1)]));
  CHECK(a.at(0, 0).energy == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("fidelity line matches the scan") {
  const auto spec = ModelSpec::preset(Configuration::Xi, 1);
  const GroundStateSolver solver(spec);
  const GridSpec grid{parse_axis_range("0:2:5"), parse_axis_range("0:1:2")};
  const auto scan = scan_ground(solver, grid);
  const auto line = fidelity_line(solver, Model::Dicke, 2, 1.0, grid.x1);
  REQUIRE(line.size() == 4);
  for (int k = 0; k < 4; ++k) CHECK(line[k] == doctest::Approx(scan.fidelity_x1[grid.index(k, 1)]).epsilon(1e-8));
  CHECK_THROWS_AS(fidelity_line(solver, Model::Dicke, 3, 1.0, grid.x1), DomainError);
}

TEST_CASE("property: energy derivative matches central differences") {
  std::mt19937 rng(8);
  std::uniform_real_distribution<double> coupling(0.2, 3.0);
  for (auto c : {Configuration::Xi, Configuration::Lambda, Configuration::V}) {
    const auto spec = ModelSpec::preset(c, 1);
    const GroundStateSolver solver(spec);
    for (auto model : {Model::Dicke, Model::Rwa}) {
      for (int t = 0; t < 2; ++t) {
        const CouplingPoint x(spec.topology(), {coupling(rng), coupling(rng)});
        const int edge = t % 2;
        const double h = 1e-3;
        const auto lo = solve_point(solver, x.with(edge, x[edge] - h), model);
        const auto hi = solve_point(solver, x.with(edge, x[edge] + h), model);
        if (!(lo.ground.label == hi.ground.label)) continue;
        const double fd = (hi.ground.energy - lo.ground.energy) / (2 * h);
        const double d = energy_derivative(solver, x, edge, model);
        CHECK(std::abs(d - fd) <= 1e-4 * std::max(1.0, std::abs(d)));
      }
    }
  }
}

TEST_CASE("derivative at a degenerate point") {
  // Far in the superradiant region the two parity branches are degenerate
  // to machine precision.
  const auto spec = ModelSpec::preset(Configuration::Lambda, 1);
  const GroundStateSolver solver(spec);
  const CouplingPoint x(spec.topology(), {8.0, 0.0});
  const auto r = solve_point(solver, x, Model::Dicke);
  REQUIRE(r.degenerate);
  CHECK_THROWS_AS(energy_derivative(solver, x, 0, Model::Dicke), DerivativeUndefined);
  const auto branches = energy_derivative_branches(solver, x, 0, Model::Dicke);
  REQUIRE(branches.size() == 2);
  CHECK(branches[0].energy == doctest::Approx(branches[1].energy).epsilon(1e-10));
  CHECK(branches[0].derivative == doctest::Approx(branches[1].derivative).epsilon(1e-6));
  CHECK(branches[0].derivative < 0.0);
  CHECK_THROWS_AS(coupling_derivative_expectation(solver, r.ground, 2), DomainError);
}

TEST_CASE("regular point has a single branch") {
  const auto spec = ModelSpec::preset(Configuration::Xi, 1);
  const GroundStateSolver solver(spec);
  const CouplingPoint x(spec.topology(), {0.5, 0.5});
  const auto branches = energy_derivative_branches(solver, x, 1, Model::Dicke);
  REQUIRE(branches.size() == 1);
  CHECK(branches[0].derivative == doctest::Approx(energy_derivative(solver, x, 1, Model::Dicke)));
}
