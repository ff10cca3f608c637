#include "twistkam/genfun.hpp"

#include "twistkam/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace twistkam {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Mat quadratic_from_spec(const FamilySpec& spec) {
  const int d = spec.dim;
  if (spec.M.empty()) return Mat::Identity(d, d);
  if (spec.M.size() != static_cast<std::size_t>(d) * static_cast<std::size_t>(d)) {
    throw Error(ErrorKind::invalid_argument, "M must hold d*d entries (row-major)");
  }
  Mat M(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) M(i, j) = spec.M[static_cast<std::size_t>(i * d + j)];
  }
  return M;
}

FourierTerm potential_term(int dim, std::initializer_list<int> k, double a) {
  FourierTerm t;
  t.x_freq = IVec::Zero(dim);
  int i = 0;
  for (int v : k) t.x_freq[i++] = v;
  t.v_freq = IVec::Zero(dim);
  t.cos_coeff = a;
  return t;
}

}  // namespace

const char* to_string(Family family) {
  switch (family) {
    case Family::integrable_quadratic: return "integrable_quadratic";
    case Family::integrable_convex: return "integrable_convex";
    case Family::standard: return "standard";
    case Family::coupled_standard: return "coupled_standard";
    case Family::custom_fourier: return "custom_fourier";
  }
  return "unknown";
}

Family family_from_string(const std::string& name) {
  for (Family f : {Family::integrable_quadratic, Family::integrable_convex, Family::standard,
                   Family::coupled_standard, Family::custom_fourier}) {
    if (name == to_string(f)) return f;
  }
  throw Error(ErrorKind::unknown_family, "unknown family '" + name + "'");
}

double CoercivityBound::minorant(double t) const {
  t = std::max(t, 0.0);
  if (beta < 0.0 && gamma > 0.0) t = std::max(t, -beta / (2.0 * gamma));
  return alpha + beta * t + gamma * t * t;
}

GeneratingFunction::GeneratingFunction(FamilySpec spec) : spec_(std::move(spec)), dim_(spec_.dim) {
  if (dim_ < 1) throw Error(ErrorKind::invalid_argument, "dimension must be >= 1");
  M_ = quadratic_from_spec(spec_);
  if ((M_ - M_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + M_.cwiseAbs().maxCoeff())) {
    throw Error(ErrorKind::invalid_argument, "M must be symmetric");
  }
  Eigen::LLT<Mat> llt(M_);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorKind::invalid_argument, "M must be positive definite (twist condition)");
  }
  M_inv_ = llt.solve(Mat::Identity(dim_, dim_));
  cocycle_ = Vec::Zero(dim_);

  switch (spec_.family) {
    case Family::integrable_quadratic:
      if (!spec_.fourier.empty()) {
        throw Error(ErrorKind::invalid_argument, "integrable_quadratic takes no Fourier terms");
      }
      break;
    case Family::integrable_convex:
      for (const auto& t : spec_.fourier) {
        if (t.x_freq.size() != dim_ || t.v_freq.size() != dim_ || t.x_freq.any()) {
          throw Error(ErrorKind::invalid_argument,
                      "integrable_convex Fourier terms depend on y - x only");
        }
        terms_.push_back(t);
      }
      break;
    case Family::standard:
      if (dim_ != 1) throw Error(ErrorKind::invalid_argument, "standard family needs d = 1");
      terms_.push_back(potential_term(1, {1}, spec_.K / (kTwoPi * kTwoPi)));
      break;
    case Family::coupled_standard:
      if (dim_ != 2) throw Error(ErrorKind::invalid_argument, "coupled_standard family needs d = 2");
      terms_.push_back(potential_term(2, {1, 0}, spec_.K / (kTwoPi * kTwoPi)));
      terms_.push_back(potential_term(2, {0, 1}, spec_.K / (kTwoPi * kTwoPi)));
      terms_.push_back(potential_term(2, {1, -1}, spec_.eps));
      break;
    case Family::custom_fourier:
      for (const auto& t : spec_.fourier) {
        if (t.x_freq.size() != dim_ || t.v_freq.size() != dim_) {
          throw Error(ErrorKind::invalid_argument, "Fourier index vectors must have length 2d");
        }
        terms_.push_back(t);
      }
      break;
  }
  for (const auto& t : terms_) {
    if (!std::isfinite(t.cos_coeff) || !std::isfinite(t.sin_coeff)) {
      throw Error(ErrorKind::invalid_argument, "non-finite Fourier coefficient");
    }
  }
}

double GeneratingFunction::value(const Vec& x, const Vec& y) const {
  const Vec v = y - x;
  double s = 0.5 * v.dot(M_ * v) + cocycle_.dot(x - y);
  for (const auto& t : terms_) {
    double th = 0.0;
    for (int i = 0; i < dim_; ++i) th += t.x_freq[i] * x[i] + t.v_freq[i] * v[i];
    s += t.cos_coeff * std::cos(kTwoPi * th) + t.sin_coeff * std::sin(kTwoPi * th);
  }
  return s;
}

Vec GeneratingFunction::d1(const Vec& x, const Vec& y) const {
  const Vec v = y - x;
  Vec g = -(M_ * v) + cocycle_;
  for (const auto& t : terms_) {
    double th = 0.0;
    for (int i = 0; i < dim_; ++i) th += t.x_freq[i] * x[i] + t.v_freq[i] * v[i];
    const double dth = kTwoPi * (-t.cos_coeff * std::sin(kTwoPi * th) + t.sin_coeff * std::cos(kTwoPi * th));
    for (int i = 0; i < dim_; ++i) g[i] += dth * (t.x_freq[i] - t.v_freq[i]);
  }
  return g;
}

Vec GeneratingFunction::d2(const Vec& x, const Vec& y) const {
  const Vec v = y - x;
  Vec g = M_ * v - cocycle_;
  for (const auto& t : terms_) {
    double th = 0.0;
    for (int i = 0; i < dim_; ++i) th += t.x_freq[i] * x[i] + t.v_freq[i] * v[i];
    const double dth = kTwoPi * (-t.cos_coeff * std::sin(kTwoPi * th) + t.sin_coeff * std::cos(kTwoPi * th));
    for (int i = 0; i < dim_; ++i) g[i] += dth * t.v_freq[i];
  }
  return g;
}

DerivativeBundle GeneratingFunction::derivatives(const Vec& x, const Vec& y) const {
  const Vec v = y - x;
  DerivativeBundle b;
  const Vec Mv = M_ * v;
  b.value = 0.5 * v.dot(Mv) + cocycle_.dot(x - y);
  b.d1 = -Mv + cocycle_;
  b.d2 = Mv - cocycle_;
  b.d11 = M_;
  b.d12 = -M_;
  b.d22 = M_;
  Vec u(dim_);
  Vec w(dim_);
  for (const auto& t : terms_) {
    double th = 0.0;
    for (int i = 0; i < dim_; ++i) {
      th += t.x_freq[i] * x[i] + t.v_freq[i] * v[i];
      u[i] = t.x_freq[i] - t.v_freq[i];
      w[i] = t.v_freq[i];
    }
    const double c = std::cos(kTwoPi * th);
    const double s = std::sin(kTwoPi * th);
    b.value += t.cos_coeff * c + t.sin_coeff * s;
    const double first = kTwoPi * (-t.cos_coeff * s + t.sin_coeff * c);
    const double second = -kTwoPi * kTwoPi * (t.cos_coeff * c + t.sin_coeff * s);
    b.d1 += first * u;
    b.d2 += first * w;
    b.d11 += second * u * u.transpose();
    b.d12 += second * u * w.transpose();
    b.d22 += second * w * w.transpose();
  }
  return b;
}

GeneratingFunction GeneratingFunction::twisted(const Vec& c) const {
  if (c.size() != dim_) throw Error(ErrorKind::invalid_argument, "cohomology class has wrong dimension");
  GeneratingFunction out = *this;
  out.cocycle_ = cocycle_ + c;
  return out;
}

CoercivityBound GeneratingFunction::coercivity_bound() const {
  CoercivityBound b;
  for (const auto& t : terms_) b.alpha -= std::hypot(t.cos_coeff, t.sin_coeff);
  b.beta = -cocycle_.norm();
  Eigen::SelfAdjointEigenSolver<Mat> es(M_, Eigen::EigenvaluesOnly);
  b.gamma = 0.5 * es.eigenvalues().minCoeff();
  return b;
}

AuditReport audit_report(const GeneratingFunction& S, int n_samples, std::uint64_t seed) {
  if (n_samples < 1) throw Error(ErrorKind::invalid_argument, "n_samples must be >= 1");
  const int d = S.dim();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> step(-3.0, 3.0);
  std::uniform_int_distribution<int> shift(-5, 5);
  std::normal_distribution<double> gauss(0.0, 1.0);

  AuditReport rep;
  rep.n_samples = n_samples;
  rep.twist_lower_bound = std::numeric_limits<double>::infinity();

  for (int s = 0; s < n_samples; ++s) {
    Vec x(d), y(d), r(d);
    for (int i = 0; i < d; ++i) {
      x[i] = unit(rng);
      y[i] = x[i] + step(rng);
      r[i] = shift(rng);
    }
    const double s0 = S.value(x, y);
    rep.periodicity_residual = std::max(rep.periodicity_residual, std::abs(S.value(x + r, y + r) - s0));
    const Mat d12 = S.derivatives(x, y).d12;
    const Mat sym = -0.5 * (d12 + d12.transpose());
    Eigen::SelfAdjointEigenSolver<Mat> es(sym, Eigen::EigenvaluesOnly);
    rep.twist_lower_bound = std::min(rep.twist_lower_bound, es.eigenvalues().minCoeff());
  }

  // Least-squares fit of S against (1, t, t^2), t = |x - y| in [0, 10].
  const int m = std::max(3 * n_samples, 32);
  Mat A(m, 3);
  Vec b(m);
  for (int s = 0; s < m; ++s) {
    Vec x(d), dir(d);
    for (int i = 0; i < d; ++i) {
      x[i] = unit(rng);
      dir[i] = gauss(rng);
    }
    if (dir.norm() < 1e-12) dir = Vec::Unit(d, 0);
    dir.normalize();
    const double t = 10.0 * unit(rng);
    A(s, 0) = 1.0;
    A(s, 1) = t;
    A(s, 2) = t * t;
    b[s] = S.value(x, x + t * dir);
  }
  const Vec coef = A.colPivHouseholderQr().solve(b);
  rep.coercivity.alpha = coef[0];
  rep.coercivity.beta = coef[1];
  rep.coercivity.gamma = coef[2];
  rep.coercivity.worst_violation = std::max(0.0, (A * coef - b).maxCoeff());
  rep.coercivity.alpha_lower = coef[0] - rep.coercivity.worst_violation;

  rep.passed = rep.twist_lower_bound > 0.0;
  if (S.spec().twist_constant_hint && *S.spec().twist_constant_hint > rep.twist_lower_bound + 1e-9) {
    rep.passed = false;
  }
  return rep;
}

AuditReport audit(const GeneratingFunction& S, int n_samples, std::uint64_t seed) {
  AuditReport rep = audit_report(S, n_samples, seed);
  if (!rep.passed) {
    throw Error(ErrorKind::audit_failed,
                "twist audit failed: A_est = " + std::to_string(rep.twist_lower_bound));
  }
  return rep;
}

GeneratingFunction make_family(const FamilySpec& spec) {
  GeneratingFunction S(spec);
  audit(S, 64, 0x7457'6b61'6dULL);
  return S;
}

FamilySpec quadratic_spec(const Mat& M) {
  FamilySpec spec;
  spec.family = Family::integrable_quadratic;
  spec.dim = static_cast<int>(M.rows());
  spec.M.resize(static_cast<std::size_t>(M.size()));
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    for (Eigen::Index j = 0; j < M.cols(); ++j) spec.M[static_cast<std::size_t>(i * M.cols() + j)] = M(i, j);
  }
  return spec;
}

FamilySpec standard_spec(double K) {
  FamilySpec spec;
  spec.family = Family::standard;
  spec.dim = 1;
  spec.K = K;
  return spec;
}

FamilySpec coupled_standard_spec(double K, double eps) {
  FamilySpec spec;
  spec.family = Family::coupled_standard;
  spec.dim = 2;
  spec.K = K;
  spec.eps = eps;
  return spec;
}

}  // namespace twistkam
