#include "doctest.h"

#include "support/families.hpp"
#include "support/oracles.hpp"

#include "twistkam/errors.hpp"
#include "twistkam/genfun.hpp"

#include <cmath>
#include <numbers>

using namespace twistkam;
using testing_support::Gen;

namespace {

Vec v1(double a) { return Vec::Constant(1, a); }
Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }

double rel_err(const Mat& got, const Mat& want) {
  return (got - want).cwiseAbs().maxCoeff() / std::max(1.0, want.cwiseAbs().maxCoeff());
}

}  // namespace

TEST_CASE("quadratic and standard values") {
  const GeneratingFunction q(quadratic_spec(testing_support::diag({1.0})));
  CHECK(q.value(v1(0.0), v1(0.3)) == doctest::Approx(0.045).epsilon(1e-15));
  const GeneratingFunction s(standard_spec(1.0));
  CHECK(std::abs(s.value(v1(0.25), v1(0.25))) < 1e-17);
  const GeneratingFunction q2(quadratic_spec(testing_support::diag({1.0, 2.0})));
  CHECK(q2.value(v2(0, 0), v2(0, 1)) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("quadratic derivatives are exact") {
  const GeneratingFunction q(quadratic_spec(testing_support::diag({1.0})));
  const auto b = q.derivatives(v1(0.0), v1(0.3));
  CHECK(b.d1[0] == doctest::Approx(-0.3));
  CHECK(b.d2[0] == doctest::Approx(0.3));
  CHECK(b.d12(0, 0) == -1.0);
  const GeneratingFunction q2(quadratic_spec(testing_support::diag({1.0, 2.0})));
  const auto b2 = q2.derivatives(v2(0.1, 0.2), v2(0.4, -0.3));
  CHECK(rel_err(b2.d12, -testing_support::diag({1.0, 2.0})) == 0.0);
}

TEST_CASE("analytic derivatives match central differences for every family") {
  Gen gen(11);
  for (const auto& fam : testing_support::all_families()) {
    const auto& S = fam.S;
    const int d = S.dim();
    for (int trial = 0; trial < 40; ++trial) {
      const Vec x = gen.vec(d, -1.5, 1.5);
      const Vec y = x + gen.vec(d, -1.5, 1.5);
      const auto b = S.derivatives(x, y);
      const Vec g1 = oracle::central_gradient([&](const Vec& z) { return S.value(z, y); }, x);
      const Vec g2 = oracle::central_gradient([&](const Vec& z) { return S.value(x, z); }, y);
      INFO(fam.name);
      CHECK(rel_err(b.d1, g1) < 1e-6);
      CHECK(rel_err(b.d2, g2) < 1e-6);
      const Mat h11 = oracle::central_jacobian([&](const Vec& z) { return S.d1(z, y); }, x);
      const Mat h12 = oracle::central_jacobian([&](const Vec& z) { return S.d1(x, z); }, y);
      const Mat h22 = oracle::central_jacobian([&](const Vec& z) { return S.d2(x, z); }, y);
      CHECK(rel_err(b.d11, h11) < 1e-6);
      CHECK(rel_err(b.d12, h12) < 1e-6);
      CHECK(rel_err(b.d22, h22) < 1e-6);
      CHECK((b.d11 - b.d11.transpose()).norm() < 1e-12);
      CHECK((b.d22 - b.d22.transpose()).norm() < 1e-12);
    }
  }
}

TEST_CASE("diagonal lattice translation leaves S unchanged") {
  Gen gen(12);
  for (const auto& fam : testing_support::all_families()) {
    const int d = fam.S.dim();
    for (int trial = 0; trial < 100; ++trial) {
      const Vec x = gen.vec(d, -1, 1);
      const Vec y = gen.vec(d, -2, 2);
      const Vec r = gen.ivec(d, -5, 5).cast<double>();
      const double s0 = fam.S.value(x, y);
      INFO(fam.name);
      CHECK(std::abs(fam.S.value(x + r, y + r) - s0) <= 1e-12 * (1.0 + std::abs(s0)));
    }
  }
}

TEST_CASE("audit reports the twist constant") {
  const GeneratingFunction q(quadratic_spec(testing_support::diag({1.0})));
  const AuditReport a = audit(q, 500, 1);
  CHECK(a.twist_lower_bound == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(a.periodicity_residual <= 1e-14);
  CHECK(a.passed);
  const AuditReport a2 = audit(GeneratingFunction(quadratic_spec(testing_support::diag({1.0, 2.0}))), 500, 1);
  CHECK(a2.twist_lower_bound == doctest::Approx(1.0).epsilon(1e-12));
  // D12 = -1 for the standard family, independent of K.
  const AuditReport a3 = audit(GeneratingFunction(standard_spec(1.0)), 500, 1);
  CHECK(a3.twist_lower_bound == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("sampled twist bound holds in every direction") {
  Gen gen(13);
  for (const auto& fam : testing_support::all_families()) {
    const auto& S = fam.S;
    const int d = S.dim();
    const AuditReport a = audit(S, 400, 3);
    for (int trial = 0; trial < 200; ++trial) {
      const Vec x = gen.vec(d, 0, 1);
      const Vec y = x + gen.vec(d, -2, 2);
      const Vec xi = gen.vec(d, -1, 1);
      const Mat B = S.derivatives(x, y).d12;
      const double q = xi.dot(0.5 * (B + B.transpose()) * xi);
      INFO(fam.name);
      // A sampled estimate: allow 5% slack on unseen points.
      CHECK(q <= -0.95 * a.twist_lower_bound * xi.squaredNorm() + 1e-12);
    }
  }
}

TEST_CASE("coercivity bound is a rigorous minorant") {
  Gen gen(14);
  for (const auto& fam : testing_support::all_families()) {
    const auto& S = fam.S;
    const int d = S.dim();
    const CoercivityBound cb = S.coercivity_bound();
    CHECK(cb.gamma > 0.0);
    for (int trial = 0; trial < 500; ++trial) {
      const Vec x = gen.vec(d, 0, 1);
      const Vec y = x + gen.vec(d, -4, 4);
      INFO(fam.name);
      CHECK(S.value(x, y) >= cb.minorant((y - x).norm()) - 1e-12);
    }
    const AuditReport a = audit(S, 300, 5);
    CHECK(a.coercivity.gamma > 0.0);
  }
}

TEST_CASE("twisting by a cocycle keeps second derivatives") {
  Gen gen(15);
  const GeneratingFunction S(coupled_standard_spec(0.7, 0.05));
  const Vec c = v2(0.3, -0.4);
  const GeneratingFunction Sc = S.twisted(c);
  for (int trial = 0; trial < 20; ++trial) {
    const Vec x = gen.vec(2, 0, 1);
    const Vec y = gen.vec(2, -1, 2);
    const auto a = S.derivatives(x, y);
    const auto b = Sc.derivatives(x, y);
    CHECK((a.d12 - b.d12).norm() == 0.0);
    CHECK(std::abs(Sc.value(x, y) - S.value(x, y) - c.dot(x - y)) < 1e-14);
  }
}

TEST_CASE("invalid families are rejected") {
  CHECK_THROWS_AS(family_from_string("henon"), Error);
  try {
    family_from_string("henon");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::unknown_family);
  }
  FamilySpec bad = quadratic_spec(testing_support::diag({1.0, -1.0}));
  CHECK_THROWS_AS(GeneratingFunction{bad}, Error);

  // A velocity term strong enough to flip the sign of D12 somewhere.
  FamilySpec flip;
  flip.family = Family::custom_fourier;
  flip.dim = 1;
  FourierTerm t;
  t.x_freq = IVec::Zero(1);
  t.v_freq = IVec::Constant(1, 1);
  t.cos_coeff = 1.0;
  flip.fourier = {t};
  bool audit_failed = false;
  try {
    make_family(flip);
  } catch (const Error& e) {
    audit_failed = e.kind() == ErrorKind::audit_failed;
  }
  CHECK(audit_failed);
}

TEST_CASE("family names round trip") {
  for (Family f : {Family::integrable_quadratic, Family::integrable_convex, Family::standard,
                   Family::coupled_standard, Family::custom_fourier}) {
    CHECK(family_from_string(to_string(f)) == f);
  }
}
