#include "doctest.h"

#include "support/families.hpp"
#include "support/oracles.hpp"

#include "twistkam/dynamics.hpp"
#include "twistkam/errors.hpp"
#include "twistkam/invariant_graphs.hpp"

#include <cmath>

using namespace twistkam;
using testing_support::Gen;

namespace {

Vec v1(double a) { return Vec::Constant(1, a); }
Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }
IVec i1(int a) { return IVec::Constant(1, a); }
IVec i2(int a, int b) { return (IVec(2) << a, b).finished(); }

const GeneratingFunction& quad1() {
  static const GeneratingFunction S(quadratic_spec(testing_support::diag({1.0})));
  return S;
}
const GeneratingFunction& quad2() {
  static const GeneratingFunction S(quadratic_spec(testing_support::diag({1.0, 2.0})));
  return S;
}

MinimizeOptions seeded(std::uint64_t seed) {
  MinimizeOptions o;
  o.seed = seed;
  return o;
}

WeakKamOptions wk_seeded(std::uint64_t seed) {
  WeakKamOptions o;
  o.minimize.seed = seed;
  return o;
}

}  // namespace

TEST_CASE("periodic fiber examples") {
  const PeriodicFiber a = periodic_fiber(quad1(), v1(0.3), 2, i1(1), seeded(1));
  CHECK(a.p[0] == doctest::Approx(0.5).epsilon(1e-13));
  CHECK(a.residual <= 1e-12);
  const PeriodicFiber b = periodic_fiber(quad2(), v2(0.4, 0.9), 2, i2(0, 1), seeded(1));
  CHECK((b.p - v2(0, 1)).norm() <= 1e-12);
}

TEST_CASE("standard fixed-point fiber matches a root-finding oracle") {
  const oracle::StandardMap sm{1.0};
  const GeneratingFunction S(standard_spec(1.0));
  for (double x : {0.0, 0.5}) {
    // F(x, p) returns to x exactly when p' = 0, i.e. x' - x vanishes.
    const double p_ref = oracle::bisect([&](double p) { return sm.step(x, p).first - x; }, -1.0, 1.0);
    const PeriodicFiber f = periodic_fiber(S, v1(x), 1, i1(0), seeded(2));
    CHECK(std::abs(f.p[0] - p_ref) <= 1e-12);
    CHECK(f.residual <= 1e-12);
  }
}

TEST_CASE("periodic fibers of integrable families satisfy p = M r / N") {
  Gen gen(51);
  for (int trial = 0; trial < 3; ++trial) {
    const Mat M = gen.spd(2);
    const GeneratingFunction S(quadratic_spec(M));
    for (int k = 0; k < 8; ++k) {
      const Vec x = gen.vec(2, 0, 1);
      const int N = gen.integer(1, 6);
      const IVec r = gen.ivec(2, -2, 2);
      const PeriodicFiber f = periodic_fiber(S, x, N, r, seeded(3));
      CHECK(f.residual <= 1e-8);
      CHECK(f.translation_residual <= 1e-8);
      CHECK((f.p - M * r.cast<double>() / N).norm() <= 1e-8);
    }
  }
}

TEST_CASE("graph samples return to themselves under N iterates") {
  const GeneratingFunction S(quadratic_spec(testing_support::diag({1.0, 2.0})));
  const LagrangianGraph g = build_graph(S, 2, i2(1, -1), TorusGrid(2, 6), seeded(4));
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Vec x = g.grid.point(i);
    const PhasePoint img = twist_map(S, {x, g.p[i]}, 2);
    CHECK((wrap_unit(img.x) - wrap_unit(x)).cwiseAbs().maxCoeff() <= 1e-9);
    CHECK((img.p - g.p[i]).norm() <= 1e-9);
  }
}

TEST_CASE("build graph examples") {
  const LagrangianGraph a = build_graph(quad1(), 2, i1(1), TorusGrid(1, 64), seeded(5));
  for (const auto& p : a.p) CHECK(std::abs(p[0] - 0.5) <= 1e-12);
  CHECK(a.audits.asymmetry == 0.0);
  const LagrangianGraph b = build_graph(quad2(), 1, i2(1, 0), TorusGrid(2, 16), seeded(5));
  for (const auto& p : b.p) CHECK((p - v2(1, 0)).norm() <= 1e-12);
  CHECK(b.audits.asymmetry <= 1e-12);
  CHECK(b.audits.failed_cells == 0);
}

TEST_CASE("coupled family graph through fixed points") {
  const GeneratingFunction S(coupled_standard_spec(0.3, 0.02));
  const LagrangianGraph g = build_graph(S, 1, i2(0, 0), TorusGrid(2, 16), seeded(6));
  CHECK(g.audits.failed_cells == 0);
  // With N = 1, r = 0 only the critical points of the potential are fixed;
  // elsewhere the residual measures how far the section is from invariant.
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Vec x = g.grid.point(i);
    const bool critical = std::fmod(2.0 * x[0], 1.0) == 0.0 && std::fmod(2.0 * x[1], 1.0) == 0.0;
    if (critical) CHECK(g.residual[i] <= 1e-12);
  }
  CHECK(g.audits.max_residual > 1e-3);
  // p = -D1 S(x, x) is a gradient field, so the finite-difference asymmetry
  // is pure truncation error: it shrinks when the stencil is halved.
  CHECK(g.audits.asymmetry <= std::max(g.audits.asymmetry_coarse, 1e-12));
  CHECK(g.audits.asymmetry <= 1e-4 * std::max(1.0, g.audits.lipschitz));
}

TEST_CASE("graph cohomology examples") {
  const LagrangianGraph a = build_graph(quad1(), 2, i1(1), TorusGrid(1, 64), seeded(7));
  CHECK(graph_cohomology(a)[0] == doctest::Approx(0.5).epsilon(1e-13));
  const LagrangianGraph b = build_graph(quad2(), 1, i2(0, 1), TorusGrid(2, 8), seeded(7));
  CHECK((graph_cohomology(b) - v2(0, 2)).norm() <= 1e-12);
  const LagrangianGraph z = build_graph(quad1(), 1, i1(0), TorusGrid(1, 16), seeded(7));
  CHECK(std::abs(graph_cohomology(z)[0]) <= 1e-14);
}

TEST_CASE("non-closed sections are rejected") {
  LagrangianGraph g;
  g.grid = TorusGrid(2, 8);
  for (std::size_t i = 0; i < g.grid.size(); ++i) {
    const Vec x = g.grid.point(i);
    g.p.push_back(v2(std::sin(oracle::kTwoPi * x[1]), 0.0));
    g.status.push_back(CellStatus::ok);
    g.residual.push_back(0.0);
  }
  compute_graph_audits(g);
  bool rejected = false;
  try {
    graph_cohomology(g);
  } catch (const Error& e) {
    rejected = e.kind() == ErrorKind::not_lagrangian;
  }
  CHECK(rejected);
}

TEST_CASE("graph comparison examples") {
  const TorusGrid grid(1, 64);
  const LagrangianGraph g21 = build_graph(quad1(), 2, i1(1), grid, seeded(8));
  const LagrangianGraph g10 = build_graph(quad1(), 1, i1(0), grid, seeded(8));
  const LagrangianGraph a05 = dual_aubry_graph(quad1(), v1(0.5), grid, {6, 2}, wk_seeded(8));
  CHECK(compare_graphs(g21, a05).sup <= 1e-8);
  const GraphDistance d = compare_graphs(g10, g21);
  CHECK(d.inf == doctest::Approx(0.5));
  CHECK(d.sup == doctest::Approx(0.5));
  CHECK(d.common_cells == 64);

  // Distinct commensurate classes give disjoint flat graphs.
  const LagrangianGraph a025 = dual_aubry_graph(quad1(), v1(0.25), grid, {6, 2}, wk_seeded(8));
  const LagrangianGraph a03 = dual_aubry_graph(quad1(), v1(0.3), grid, {10, 3}, wk_seeded(8));
  const GraphDistance sep = compare_graphs(a025, a03);
  CHECK(sep.inf == doctest::Approx(0.05).epsilon(1e-8));

  bool mismatch = false;
  try {
    compare_graphs(g21, build_graph(quad1(), 2, i1(1), TorusGrid(1, 32), seeded(8)));
  } catch (const Error& e) {
    mismatch = e.kind() == ErrorKind::grid_mismatch;
  }
  CHECK(mismatch);
}

TEST_CASE("periodic graphs coincide with dual Aubry graphs of their class") {
  Gen gen(52);
  const Mat M = gen.spd(2);
  const GeneratingFunction S(quadratic_spec(M));
  const TorusGrid grid(2, 6);
  for (const IVec& r : {i2(1, 0), i2(0, 1), i2(1, 1)}) {
    const LagrangianGraph g = build_graph(S, 1, r, grid, seeded(9));
    const Vec c = graph_cohomology(g);
    CHECK((c - M * r.cast<double>()).norm() <= 1e-10);
    const LagrangianGraph a = WeakKam(S, c, {2, 2}, TorusGrid(2, 4), wk_seeded(9)).dual_graph(grid);
    CHECK(compare_graphs(g, a).sup <= 1e-8);
  }
}

TEST_CASE("graph slope is tangent to the Green bundle for the shear") {
  const LagrangianGraph g = build_graph(quad1(), 2, i1(1), TorusGrid(1, 16), seeded(10));
  for (std::size_t i = 0; i < g.size(); i += 4) {
    // Flat graph: slope 0. The Green slope is 1/n and tends to it.
    const GreenSlope gs = green_slope(quad1(), {g.grid.point(i), g.p[i]}, 20000);
    CHECK(std::abs(gs.slope(0, 0) - 0.0) <= 1e-4);
  }
}

TEST_CASE("foliation section examples") {
  std::vector<Vec> cs;
  for (double c : {-1.0, -0.5, 0.0, 0.5, 1.0}) cs.push_back(v1(c));
  const FoliationSection f = foliation_section(quad1(), v1(0.2), cs, {6, 2}, wk_seeded(11));
  REQUIRE(f.entries.size() == 5);
  for (const auto& e : f.entries) {
    REQUIRE(e.status == CellStatus::ok);
    CHECK(std::abs(e.p[0] - e.c[0]) <= 1e-9);
  }
  CHECK(f.injectivity_gap == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(f.monotonicity_violation <= 1e-12);
  CHECK(f.coercivity_slope == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(f.continuity_modulus == doctest::Approx(1.0).epsilon(1e-9));

  const FoliationSection f2 = foliation_section(quad2(), v2(0.3, 0.6), {v2(0, 1)}, {2, 1}, wk_seeded(11));
  CHECK((f2.entries[0].p - v2(0, 1)).norm() <= 1e-9);
}

TEST_CASE("foliation section of the standard family is monotone where defined") {
  std::vector<Vec> cs;
  for (int k = -6; k <= 6; ++k) cs.push_back(v1(0.1 * k));
  const FoliationSection f = foliation_section(GeneratingFunction(standard_spec(1.0)), v1(0.0), cs, {6, 2},
                                               wk_seeded(12));
  int ok = 0;
  for (const auto& e : f.entries) ok += e.status == CellStatus::ok;
  CHECK(ok + f.failed == static_cast<int>(cs.size()));
  CHECK(f.monotonicity_violation <= 1e-9);
}
