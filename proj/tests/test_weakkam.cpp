#include "doctest.h"

#include "support/families.hpp"
#include "support/oracles.hpp"

#include "twistkam/dynamics.hpp"
#include "twistkam/errors.hpp"
#include "twistkam/weakkam.hpp"

#include <cmath>
#include <limits>
#include <numbers>

using namespace twistkam;
using testing_support::Gen;

namespace {

Vec v1(double a) { return Vec::Constant(1, a); }
Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }

const GeneratingFunction& quad1() {
  static const GeneratingFunction S(quadratic_spec(testing_support::diag({1.0})));
  return S;
}
const GeneratingFunction& quad2() {
  static const GeneratingFunction S(quadratic_spec(testing_support::diag({1.0, 2.0})));
  return S;
}
const GeneratingFunction& standard1() {
  static const GeneratingFunction S(standard_spec(1.0));
  return S;
}

WeakKamOptions seeded(std::uint64_t seed) {
  WeakKamOptions o;
  o.minimize.seed = seed;
  return o;
}

const double kPotentialMin = -1.0 / (4.0 * std::numbers::pi * std::numbers::pi);

}  // namespace

TEST_CASE("twisting by a cocycle") {
  const GeneratingFunction Sc = twist_by_cocycle(quad1(), v1(0.5));
  CHECK(std::abs(Sc.value(v1(0), v1(1))) < 1e-15);
  const GeneratingFunction S0 = twist_by_cocycle(standard1(), v1(0.0));
  CHECK(S0.value(v1(0.2), v1(0.9)) == standard1().value(v1(0.2), v1(0.9)));

  const GeneratingFunction Sc3 = twist_by_cocycle(standard1(), v1(0.3));
  Gen gen(41);
  for (int trial = 0; trial < 50; ++trial) {
    const Vec x0 = gen.vec(1, 0, 1);
    const Vec x1 = x0 + gen.vec(1, -1, 1);
    CHECK((shift(Sc3, x0, x1) - shift(standard1(), x0, x1)).norm() <= 1e-10);
  }
}

TEST_CASE("minimizing holonomic value examples") {
  const WeakKamEstimate a = stilde(quad1(), v1(0.5), {2, 1}, TorusGrid(1, 16), seeded(1));
  CHECK(a.value == doctest::Approx(-0.125).epsilon(1e-12));
  REQUIRE(a.witness.has_value());
  CHECK(a.witness->n == 2);
  CHECK(a.witness->r[0] == 1);

  const WeakKamEstimate b = stilde(quad1(), v1(0.0), {3, 2}, TorusGrid(1, 16), seeded(1));
  CHECK(std::abs(b.value) < 1e-14);
  REQUIRE(b.witness.has_value());
  CHECK(b.witness->n == 1);
  CHECK(b.witness->r[0] == 0);

  const WeakKamEstimate c = stilde(quad2(), v2(0, 1), {2, 1}, TorusGrid(2, 8), seeded(1));
  CHECK(c.value == doctest::Approx(-0.25).epsilon(1e-12));
}

TEST_CASE("witness reproduces the estimate") {
  for (double c : {-0.5, 0.0, 0.3, 0.5}) {
    const WeakKamEstimate e = stilde(standard1(), v1(c), {4, 2}, TorusGrid(1, 16), seeded(2));
    REQUIRE(e.witness.has_value());
    const GeneratingFunction Sc = twist_by_cocycle(standard1(), v1(c));
    const auto& seg = e.witness->segment;
    CHECK(seg.steps() == e.witness->n);
    CHECK(std::abs(oracle::path_action(Sc, seg.points) / e.witness->n - e.value) <= 1e-10);
    CHECK((seg.points.back() - seg.points.front() - e.witness->r.cast<double>()).norm() <= 1e-12);
  }
}

TEST_CASE("stilde is monotone in the truncation") {
  for (double c : {0.0, 0.25, 0.5, 0.7}) {
    const TorusGrid probe(1, 16);
    const double a = stilde(standard1(), v1(c), {2, 1}, probe, seeded(3)).value;
    const double b = stilde(standard1(), v1(c), {4, 1}, probe, seeded(3)).value;
    const double d = stilde(standard1(), v1(c), {4, 2}, probe, seeded(3)).value;
    CHECK(b <= a + 1e-12);
    CHECK(d <= b + 1e-12);
  }
}

TEST_CASE("alpha of the quadratic family is the Legendre transform") {
  std::vector<Vec> cs;
  for (double c : {-1.0, -0.5, 0.0, 0.5, 1.0}) cs.push_back(v1(c));
  const AlphaProfile prof = alpha_profile(quad1(), cs, {4, 2}, TorusGrid(1, 16), seeded(4));
  REQUIRE(prof.entries.size() == 5);
  for (const auto& e : prof.entries) CHECK(std::abs(e.alpha - 0.5 * e.c[0] * e.c[0]) <= 1e-9);
  CHECK(prof.convexity_violation <= 1e-8);

  const AlphaProfile p2 = alpha_profile(quad2(), {v2(0, 1)}, {2, 1}, TorusGrid(2, 8), seeded(4));
  CHECK(std::abs(p2.entries[0].alpha - 0.25) <= 1e-9);
}

TEST_CASE("alpha(0) of the standard family matches the cycle DP oracle") {
  // Minimum over cycles of at most 6 steps through 256 circle points of the
  // mean action; polishing is unnecessary because the optimum is a fixed
  // point at a grid node.
  const oracle::StepCostTable cost(standard1(), 256, 256);
  double best = std::numeric_limits<double>::infinity();
  for (int base = 0; base < 256; ++base) {
    const double x = base / 256.0;
    const oracle::CircleDp dp(cost, x, 6, x - 2.5, x + 2.5);
    for (int n = 1; n <= 6; ++n) {
      for (int r = -2; r <= 2; ++r) best = std::min(best, dp.value(n, x + r) / n);
    }
  }
  CHECK(best == doctest::Approx(kPotentialMin).epsilon(1e-12));
  const AlphaProfile prof = alpha_profile(standard1(), {v1(0.0)}, {6, 2}, TorusGrid(1, 16), seeded(5));
  CHECK(std::abs(prof.entries[0].alpha + best) <= 1e-9);
}

TEST_CASE("alpha is convex on a class grid") {
  std::vector<Vec> cs;
  for (int k = -4; k <= 4; ++k) cs.push_back(v1(0.25 * k));
  const AlphaProfile prof = alpha_profile(standard1(), cs, {4, 2}, TorusGrid(1, 16), seeded(6));
  CHECK(prof.convexity_triples > 0);
  CHECK(prof.convexity_violation <= 1e-8 + 2.0 * prof.truncation_allowance);
  // alpha(c)/|c| grows along |c|.
  REQUIRE(prof.superlinearity.size() >= 2);
  CHECK(prof.superlinearity.back() > prof.superlinearity.front());
}

TEST_CASE("Mane potential examples") {
  const WeakKam wk(quad1(), v1(0.5), {6, 2}, TorusGrid(1, 16), seeded(7));
  const WeakKamEstimate m = wk.mane(v1(0), v1(0.5));
  CHECK(std::abs(m.value) <= 1e-12);
  REQUIRE(m.witness.has_value());
  CHECK(m.witness->n == 1);
  CHECK(m.witness->r[0] == 0);

  const WeakKam wk0(quad1(), v1(0.0), {6, 2}, TorusGrid(1, 16), seeded(7));
  CHECK(std::abs(wk0.mane(v1(0), v1(0)).value) <= 1e-14);
}

TEST_CASE("Mane potential of the standard family matches the DP oracle") {
  const WeakKam wk(standard1(), v1(0.0), {6, 2}, TorusGrid(1, 16), seeded(8));
  CHECK(wk.stilde().value == doctest::Approx(kPotentialMin).epsilon(1e-12));
  const oracle::StepCostTable cost(standard1(), 256, 512);
  Gen gen(42);
  for (int trial = 0; trial < 6; ++trial) {
    const double x = gen.integer(0, 15) / 16.0;
    const double y = gen.integer(0, 15) / 16.0;
    const oracle::CircleDp dp(cost, x, 6, x - 4.0, x + 5.0);
    const double ref = oracle::mane_dp(standard1(), x, y, 6, 2, kPotentialMin, dp);
    const double got = wk.mane(v1(x), v1(y)).value;
    INFO("x=" << x << " y=" << y);
    CHECK(std::abs(got - ref) <= 1e-9);
  }
}

TEST_CASE("Mane potential is periodic in both arguments") {
  const WeakKam wk(standard1(), v1(0.2), {4, 2}, TorusGrid(1, 16), seeded(9));
  Gen gen(43);
  for (int trial = 0; trial < 8; ++trial) {
    const Vec x = gen.vec(1, 0, 1);
    const Vec y = gen.vec(1, 0, 1);
    const double a = wk.mane(x, y).value;
    CHECK(std::abs(wk.mane(x, y + v1(1.0)).value - a) <= 1e-9);
    CHECK(std::abs(wk.mane(x + v1(1.0), y).value - a) <= 1e-9);
  }
}

TEST_CASE("normalized cycle actions are nonnegative") {
  const WeakKam wk(standard1(), v1(0.0), {6, 2}, TorusGrid(1, 16), seeded(10));
  for (int i = 0; i < 32; ++i) CHECK(wk.mane(v1(i / 32.0), v1(i / 32.0)).value >= -1e-9);
  const WeakKam wkq(quad2(), v2(0.5, -0.5), {4, 1}, TorusGrid(2, 8), seeded(10));
  Gen gen(44);
  for (int trial = 0; trial < 8; ++trial) {
    const Vec x = gen.vec(2, 0, 1);
    CHECK(wkq.mane(x, x).value >= -1e-9);
  }
}

TEST_CASE("u = pi(x0, .) is a sub-action") {
  const WeakKam wk(standard1(), v1(0.0), {6, 2}, TorusGrid(1, 16), seeded(11));
  const Vec x0 = v1(0.5);
  std::vector<double> u;
  for (int i = 0; i < 8; ++i) u.push_back(wk.mane(x0, v1(i / 8.0)).value);
  for (int i = 0; i < 8; ++i) {
    for (int j = 0; j < 8; ++j) {
      const double pij = wk.mane(v1(i / 8.0), v1(j / 8.0)).value;
      CHECK(u[static_cast<std::size_t>(j)] - u[static_cast<std::size_t>(i)] <= pij + 1e-9);
    }
  }
}

TEST_CASE("Aubry partner examples") {
  const AubrySample a = aubry_partner(quad1(), v1(0.5), v1(0.2), {6, 2}, seeded(12));
  CHECK(a.y[0] == doctest::Approx(0.7).epsilon(1e-9));
  CHECK(a.p[0] == doctest::Approx(0.5).epsilon(1e-9));
  const AubrySample b = aubry_partner(quad1(), v1(0.0), v1(0.37), {6, 2}, seeded(12));
  CHECK(b.y[0] == doctest::Approx(0.37).epsilon(1e-9));
  CHECK(std::abs(b.p[0]) <= 1e-9);
  const AubrySample s = aubry_partner(standard1(), v1(0.0), v1(0.5), {6, 2}, seeded(12));
  CHECK(s.y[0] == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(std::abs(s.p[0]) <= 1e-9);
  CHECK(s.residuals.action_identity <= 1e-8);
  CHECK(s.residuals.antisymmetry <= 1e-8);
  // p = -D1 S(x, y) by construction.
  CHECK((s.p + standard1().d1(s.x, s.y)).norm() == 0.0);
}

TEST_CASE("points off the Aubry set are rejected") {
  // pi(0, 0) = 2 K / (4 pi^2) for the one-step cycle; longer cycles stay above 1e-2.
  bool rejected = false;
  try {
    aubry_partner(standard1(), v1(0.0), v1(0.0), {6, 2}, seeded(13));
  } catch (const Error& e) {
    rejected = e.kind() == ErrorKind::not_in_aubry;
  }
  CHECK(rejected);
}

TEST_CASE("Aubry pairs are invariant under the shift for integrable families") {
  for (double c : {0.25, 0.5, -0.4}) {
    const WeakKam wk(quad1(), v1(c), {6, 2}, TorusGrid(1, 16), seeded(14));
    for (double x : {0.1, 0.6}) {
      const AubrySample s = wk.partner(v1(x));
      const Vec z = shift(quad1(), s.x, s.y);
      const double id = std::abs(wk.twisted().value(s.y, z) - wk.stilde().value - wk.mane(s.y, z).value);
      const double anti = std::abs(wk.mane(s.y, z).value + wk.mane(z, s.y).value);
      CHECK(id <= 1e-6);
      CHECK(anti <= 1e-6);
    }
  }
}

TEST_CASE("dual Aubry graph examples") {
  const LagrangianGraph g = dual_aubry_graph(quad1(), v1(0.5), TorusGrid(1, 64), {6, 2}, seeded(15));
  for (std::size_t i = 0; i < g.size(); ++i) {
    REQUIRE(g.status[i] == CellStatus::ok);
    CHECK(std::abs(g.p[i][0] - 0.5) <= 1e-9);
  }
  const LagrangianGraph g2 = dual_aubry_graph(quad2(), v2(0, 1), TorusGrid(2, 16), {2, 1}, seeded(15));
  for (std::size_t i = 0; i < g2.size(); ++i) {
    REQUIRE(g2.status[i] == CellStatus::ok);
    CHECK((g2.p[i] - v2(0, 1)).norm() <= 1e-9);
  }
  CHECK(g2.audits.invariance <= 1e-9);
}

TEST_CASE("dual Aubry graph of the standard family agrees with the DP indicator") {
  const TorusGrid grid(1, 16);
  const oracle::StepCostTable cost(standard1(), 256, 512);
  const LagrangianGraph g = dual_aubry_graph(standard1(), v1(0.0), grid, {6, 2}, seeded(16));
  int present = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double x = grid.point(i)[0];
    const oracle::CircleDp dp(cost, x, 6, x - 4.0, x + 5.0);
    const double ind = oracle::mane_dp(standard1(), x, x, 6, 2, kPotentialMin, dp);
    INFO("x=" << x << " indicator=" << ind);
    CHECK((g.status[i] == CellStatus::ok) == (ind <= 1e-2));
    if (g.status[i] == CellStatus::ok) ++present;
  }
  CHECK(present > 0);
  CHECK(g.status[8] == CellStatus::ok);  // x = 0.5, the minimizing fixed point
  CHECK(std::abs(g.p[8][0]) <= 1e-9);
}

TEST_CASE("potential audits on the quadratic family") {
  const WeakKam wk(quad1(), v1(0.5), {64, 2}, TorusGrid(1, 16), seeded(17));
  std::vector<Triple> commensurate = {{v1(0), v1(0.5), v1(0)}, {v1(0.25), v1(0.75), v1(0.25)},
                                      {v1(0.0), v1(0.5), v1(1.0)}};
  const PotentialAudit a = potential_audits(wk, commensurate);
  CHECK(a.additivity_max <= 1e-9);
  CHECK(a.antisymmetry_max <= 1e-9);
  CHECK(a.triangle_min >= -1e-9);

  Gen gen(45);
  std::vector<Triple> random;
  for (int k = 0; k < 20; ++k) random.push_back({gen.vec(1, 0, 1), gen.vec(1, 0, 1), gen.vec(1, 0, 1)});
  std::vector<AubrySample> samples;
  for (double x : {0.1, 0.4, 0.8}) samples.push_back(wk.partner(v1(x)));
  const PotentialAudit b = potential_audits(wk, random, samples);
  CHECK(b.additivity_max <= 2.0 / 64);
  CHECK(b.antisymmetry_max <= 2.0 / 64);
  CHECK(b.calibration_min >= -1e-9);
  CHECK(b.partner_displacement_max <= b.partner_bound);
}

TEST_CASE("potential audits on the standard family") {
  const WeakKam wk(standard1(), v1(0.0), {6, 2}, TorusGrid(1, 16), seeded(18));
  Gen gen(46);
  std::vector<Triple> triples;
  for (int k = 0; k < 30; ++k) {
    triples.push_back({v1(gen.integer(0, 15) / 16.0), v1(gen.integer(0, 15) / 16.0), v1(gen.integer(0, 15) / 16.0)});
  }
  triples.push_back({v1(0.0), v1(0.5), v1(0.0)});
  // Passing through the hyperbolic point at 1/2 costs more than 6 steps on
  // each leg, so the truncated potential may break the triangle inequality.
  triples.push_back({v1(3 / 16.0), v1(0.5), v1(13 / 16.0)});
  const PotentialAudit a = potential_audits(wk, triples);

  const oracle::StepCostTable cost(standard1(), 256, 512);
  const double st = wk.stilde().value;
  auto ref = [&](const Vec& x, const Vec& y) {
    const oracle::CircleDp dp(cost, x[0], 6, x[0] - 4.0, x[0] + 5.0);
    return oracle::mane_dp(standard1(), x[0], y[0], 6, 2, st, dp);
  };
  double tri_ref = std::numeric_limits<double>::infinity();
  for (const Triple& t : triples) tri_ref = std::min(tri_ref, ref(t.x, t.y) + ref(t.y, t.z) - ref(t.x, t.z));
  CHECK(std::abs(a.triangle_min - tri_ref) <= 1e-9);
  CHECK(a.triangle_min < -1e-4);
  CHECK(a.additivity_max > 0.01);
  CHECK(a.lipschitz > 0.0);

  // Concatenating two 6-step witnesses is a 12-step candidate.
  const WeakKam wide(standard1(), v1(0.0), {12, 4}, TorusGrid(1, 16), seeded(18));
  for (const Triple& t : triples) {
    CHECK(wide.mane(t.x, t.z).value <= wk.mane(t.x, t.y).value + wk.mane(t.y, t.z).value + 1e-9);
  }
}

TEST_CASE("the potential is upper semicontinuous along converging classes") {
  const Vec x = v1(0.1);
  const Vec y = v1(0.45);
  const double limit = WeakKam(quad1(), v1(0.5), {6, 2}, TorusGrid(1, 16), seeded(19)).mane(x, y).value;
  double last = 0.0;
  for (int k = 1; k <= 8; ++k) {
    const double c = 0.5 + std::ldexp(1.0, -k);
    last = WeakKam(quad1(), v1(c), {6, 2}, TorusGrid(1, 16), seeded(19)).mane(x, y).value;
  }
  CHECK(last <= limit + 1e-2);
  CHECK(std::abs(last - limit) <= 1e-2);
}
