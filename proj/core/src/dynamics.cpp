#include "twistkam/dynamics.hpp"

#include "twistkam/errors.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace twistkam {

namespace {

// Newton iteration on R(z) = 0 with backtracking on ||R||. The twist condition
// makes R strongly monotone, so for d = 1 a bracketing bisection is a sound
// fallback when the line search stalls.
template <class Eval>
Vec solve_monotone(Eval&& eval, Vec z, const SolverOptions& opts, double scale, const char* what) {
  const Eigen::Index d = z.size();
  auto [R, J] = eval(z);
  double rn = R.norm();
  for (int it = 0; it < opts.max_iter; ++it) {
    if (rn <= opts.tolerance) return z;
    const Vec step = -J.partialPivLu().solve(R);
    bool accepted = false;
    double t = 1.0;
    for (int ls = 0; ls < 40; ++ls, t *= 0.5) {
      const Vec trial = z + t * step;
      auto [Rt, Jt] = eval(trial);
      const double rt = Rt.norm();
      if (std::isfinite(rt) && rt < (1.0 - 1e-4 * t) * rn) {
        z = trial;
        R = std::move(Rt);
        J = std::move(Jt);
        rn = rt;
        accepted = true;
        break;
      }
    }
    if (accepted) continue;
    // Residual stuck at the rounding floor of the data.
    if (rn <= 1e3 * opts.tolerance * (1.0 + scale)) return z;
    if (d != 1) break;

    // Scalar fallback: R is monotone, so bracket and bisect.
    const double slope_sign = J(0, 0) < 0.0 ? -1.0 : 1.0;
    const double dir = -slope_sign * (R[0] > 0.0 ? 1.0 : -1.0);
    double a = z[0];
    double b = z[0];
    double width = 1.0;
    Vec probe = z;
    bool bracketed = false;
    for (int k = 0; k < 200; ++k, width *= 2.0) {
      b = a + dir * width;
      probe[0] = b;
      if (eval(probe).first[0] * R[0] <= 0.0) {
        bracketed = true;
        break;
      }
    }
    if (!bracketed) break;
    const double r_a = R[0];
    for (int k = 0; k < 200; ++k) {
      probe[0] = 0.5 * (a + b);
      const double rm = eval(probe).first[0];
      if (std::abs(rm) <= opts.tolerance || std::abs(b - a) <= 1e-15 * (1.0 + std::abs(a))) break;
      if (rm * r_a > 0.0) a = probe[0]; else b = probe[0];
    }
    z = probe;
    std::tie(R, J) = eval(z);
    rn = R.norm();
  }
  if (rn <= 1e3 * opts.tolerance * (1.0 + scale)) return z;
  std::ostringstream msg;
  msg << what << " did not converge (residual " << rn << ")";
  throw NoConvergence(msg.str());
}

}  // namespace

Vec fiber_solve(const GeneratingFunction& S, const Vec& x, const Vec& p, const SolverOptions& opts) {
  Vec y0 = x + S.quadratic_inverse() * (p + S.cocycle());
  auto eval = [&](const Vec& y) {
    DerivativeBundle b = S.derivatives(x, y);
    return std::pair<Vec, Mat>(b.d1 + p, b.d12);
  };
  return solve_monotone(eval, std::move(y0), opts, p.norm() + x.norm(), "fiber_solve");
}

Vec fiber_solve_backward(const GeneratingFunction& S, const Vec& y, const Vec& p_next, const SolverOptions& opts) {
  Vec x0 = y - S.quadratic_inverse() * (p_next + S.cocycle());
  auto eval = [&](const Vec& x) {
    DerivativeBundle b = S.derivatives(x, y);
    return std::pair<Vec, Mat>(b.d2 - p_next, b.d12.transpose());
  };
  return solve_monotone(eval, std::move(x0), opts, p_next.norm() + y.norm(), "fiber_solve_backward");
}

Vec shift(const GeneratingFunction& S, const Vec& x0, const Vec& x1, const SolverOptions& opts) {
  return fiber_solve(S, x1, S.d2(x0, x1), opts);
}

Vec shift_backward(const GeneratingFunction& S, const Vec& x1, const Vec& x2, const SolverOptions& opts) {
  return fiber_solve_backward(S, x1, -S.d1(x1, x2), opts);
}

PhasePoint lagrangian_lift(const GeneratingFunction& S, const Vec& x, const Vec& y) {
  return {x, -S.d1(x, y)};
}

PhasePoint twist_map(const GeneratingFunction& S, const PhasePoint& pt, int n, const SolverOptions& opts) {
  PhasePoint z = pt;
  for (int k = 0; k < n; ++k) {
    const Vec x_next = fiber_solve(S, z.x, z.p, opts);
    z.p = S.d2(z.x, x_next);
    z.x = x_next;
  }
  for (int k = 0; k < -n; ++k) {
    const Vec x_prev = fiber_solve_backward(S, z.x, z.p, opts);
    z.p = -S.d1(x_prev, z.x);
    z.x = x_prev;
  }
  return z;
}

std::vector<PhasePoint> orbit(const GeneratingFunction& S, const PhasePoint& pt, int n, const SolverOptions& opts) {
  std::vector<PhasePoint> out{pt};
  const int step = n >= 0 ? 1 : -1;
  for (int k = 0; k < std::abs(n); ++k) out.push_back(twist_map(S, out.back(), step, opts));
  return out;
}

Mat symplectic_form(int d) {
  Mat omega = Mat::Zero(2 * d, 2 * d);
  omega.topRightCorner(d, d) = Mat::Identity(d, d);
  omega.bottomLeftCorner(d, d) = -Mat::Identity(d, d);
  return omega;
}

double TangentBlock::symplectic_residual() const {
  const int d = static_cast<int>(J.rows() / 2);
  const Mat omega = symplectic_form(d);
  return (J.transpose() * omega * J - omega).cwiseAbs().maxCoeff();
}

Mat tangent_at(const GeneratingFunction& S, const Vec& x, const Vec& x_next) {
  const int d = S.dim();
  const DerivativeBundle b = S.derivatives(x, x_next);
  const Mat Binv = b.d12.partialPivLu().inverse();
  Mat J(2 * d, 2 * d);
  J.topLeftCorner(d, d) = -Binv * b.d11;
  J.topRightCorner(d, d) = -Binv;
  J.bottomLeftCorner(d, d) = b.d12.transpose() - b.d22 * Binv * b.d11;
  J.bottomRightCorner(d, d) = -b.d22 * Binv;
  return J;
}

TangentBlock tangent(const GeneratingFunction& S, const PhasePoint& pt, const SolverOptions& opts) {
  const Vec x_next = fiber_solve(S, pt.x, pt.p, opts);
  return {tangent_at(S, pt.x, x_next)};
}

std::size_t PhaseRegion::size(int d) const {
  std::size_t n = 1;
  for (int k = 0; k < d; ++k) n *= static_cast<std::size_t>(x_resolution);
  for (int k = 0; k < d; ++k) n *= static_cast<std::size_t>(p_resolution);
  return n;
}

namespace {

std::vector<int> region_multi(const PhaseRegion& r, int d, std::size_t index) {
  std::vector<int> m(static_cast<std::size_t>(2 * d));
  for (int k = 2 * d - 1; k >= 0; --k) {
    const auto res = static_cast<std::size_t>(k < d ? r.x_resolution : r.p_resolution);
    m[static_cast<std::size_t>(k)] = static_cast<int>(index % res);
    index /= res;
  }
  return m;
}

double p_node(const PhaseRegion& r, int i) {
  if (r.p_resolution == 1) return 0.5 * (r.p_lo + r.p_hi);
  return r.p_lo + (r.p_hi - r.p_lo) * i / (r.p_resolution - 1);
}

}  // namespace

PhasePoint PhaseRegion::point(int d, std::size_t index) const {
  const auto m = region_multi(*this, d, index);
  PhasePoint pt{Vec(d), Vec(d)};
  for (int k = 0; k < d; ++k) {
    pt.x[k] = x_lo + (x_hi - x_lo) * m[static_cast<std::size_t>(k)] / x_resolution;
    pt.p[k] = p_node(*this, m[static_cast<std::size_t>(d + k)]);
  }
  return pt;
}

std::optional<std::size_t> PhaseRegion::next(int d, std::size_t index, int axis) const {
  auto m = region_multi(*this, d, index);
  const int res = axis < d ? x_resolution : p_resolution;
  if (m[static_cast<std::size_t>(axis)] + 1 >= res) return std::nullopt;
  m[static_cast<std::size_t>(axis)] += 1;
  std::size_t out = 0;
  for (int k = 0; k < 2 * d; ++k) {
    out = out * static_cast<std::size_t>(k < d ? x_resolution : p_resolution) +
          static_cast<std::size_t>(m[static_cast<std::size_t>(k)]);
  }
  return out;
}

namespace {

struct PushedVertical {
  double min_singular = 0.0;
  double basis_norm = 0.0;
  double det = 0.0;
};

// Pushes the vertical basis [0; I] through n_max forward (dir = +1) or
// backward (dir = -1) steps. Positive rescaling keeps the sign of det M_n.
std::vector<PushedVertical> push_vertical(const GeneratingFunction& S, const PhasePoint& start, int n_max, int dir) {
  const int d = S.dim();
  const Mat omega = symplectic_form(d);
  Mat Y = Mat::Zero(2 * d, d);
  Y.bottomRows(d) = Mat::Identity(d, d);
  PhasePoint z = start;
  std::vector<PushedVertical> out;
  out.reserve(static_cast<std::size_t>(n_max));
  for (int n = 1; n <= n_max; ++n) {
    if (dir > 0) {
      const Vec x_next = fiber_solve(S, z.x, z.p);
      Y = tangent_at(S, z.x, x_next) * Y;
      z.p = S.d2(z.x, x_next);
      z.x = x_next;
    } else {
      const Vec x_prev = fiber_solve_backward(S, z.x, z.p);
      const Mat J = tangent_at(S, x_prev, z.x);
      Y = (-omega * J.transpose() * omega) * Y;
      z.p = -S.d1(x_prev, z.x);
      z.x = x_prev;
    }
    // DF is Z^d-periodic in x, so the lift can be reduced.
    const Vec shift_back = z.x - wrap_unit(z.x);
    z.x -= shift_back;

    Eigen::JacobiSVD<Mat> svd_y(Y);
    const double norm = svd_y.singularValues()[0];
    const Mat Mn = Y.topRows(d);
    Eigen::JacobiSVD<Mat> svd_m(Mn);
    out.push_back({svd_m.singularValues()[d - 1], norm, Mn.determinant()});
    if (norm > 1e8) Y /= norm;
  }
  return out;
}

}  // namespace

ConjugateReport conjugate_scan(const GeneratingFunction& S, const PhaseRegion& region, int n_max, double threshold) {
  if (n_max < 1) throw Error(ErrorKind::invalid_argument, "n_max must be >= 1");
  if (!(threshold > 0.0)) throw Error(ErrorKind::invalid_argument, "threshold must be positive");
  if (region.x_resolution < 1 || region.p_resolution < 1) {
    throw Error(ErrorKind::invalid_argument, "region resolution must be >= 1");
  }
  const int d = S.dim();
  const std::size_t npts = region.size(d);

  ConjugateReport rep;
  rep.n_max = n_max;
  rep.threshold = threshold;
  rep.min_relative_singular.assign(static_cast<std::size_t>(n_max), std::numeric_limits<double>::infinity());

  // data[dir][point][n-1]
  std::vector<std::vector<PushedVertical>> fwd(npts), bwd(npts);
  for (std::size_t i = 0; i < npts; ++i) {
    const PhasePoint pt = region.point(d, i);
    fwd[i] = push_vertical(S, pt, n_max, +1);
    bwd[i] = push_vertical(S, pt, n_max, -1);
  }

  auto is_degenerate = [&](const PushedVertical& v) { return v.min_singular <= threshold * v.basis_norm; };

  for (std::size_t i = 0; i < npts; ++i) {
    const PhasePoint pt = region.point(d, i);
    for (int dir : {+1, -1}) {
      const auto& data = dir > 0 ? fwd[i] : bwd[i];
      for (int n = 1; n <= n_max; ++n) {
        const auto& v = data[static_cast<std::size_t>(n - 1)];
        rep.samples.push_back({pt, dir * n, v.min_singular, v.basis_norm, v.det, is_degenerate(v), false});
        double& slot = rep.min_relative_singular[static_cast<std::size_t>(n - 1)];
        slot = std::min(slot, v.min_singular / v.basis_norm);
      }
    }
  }

  // First degeneracy: direct hits on the grid, otherwise a sign change of
  // det M_n between neighbouring nodes, located by bisection.
  for (int n = 1; n <= n_max && !rep.first_degenerate_n; ++n) {
    for (int dir : {+1, -1}) {
      const auto& data = dir > 0 ? fwd : bwd;
      for (std::size_t i = 0; i < npts && !rep.first_degenerate_n; ++i) {
        if (is_degenerate(data[i][static_cast<std::size_t>(n - 1)])) {
          rep.first_degenerate_n = dir * n;
          rep.location = region.point(d, i);
        }
      }
      for (std::size_t i = 0; i < npts && !rep.first_degenerate_n; ++i) {
        const double det_a = data[i][static_cast<std::size_t>(n - 1)].det;
        for (int axis = 0; axis < 2 * d && !rep.first_degenerate_n; ++axis) {
          const auto j = region.next(d, i, axis);
          if (!j) continue;
          const double det_b = data[*j][static_cast<std::size_t>(n - 1)].det;
          if (!(det_a * det_b < 0.0)) continue;
          const PhasePoint za = region.point(d, i);
          const PhasePoint zb = region.point(d, *j);
          double lo = 0.0;
          double hi = 1.0;
          PhasePoint zm = za;
          PushedVertical vm{};
          for (int it = 0; it < 60; ++it) {
            const double t = 0.5 * (lo + hi);
            zm = {za.x + t * (zb.x - za.x), za.p + t * (zb.p - za.p)};
            vm = push_vertical(S, zm, n, dir).back();
            if (vm.det == 0.0) break;
            if ((vm.det < 0.0) == (det_a < 0.0)) lo = t; else hi = t;
          }
          const bool degenerate = is_degenerate(vm);
          rep.samples.push_back({zm, dir * n, vm.min_singular, vm.basis_norm, vm.det, degenerate, true});
          if (degenerate) {
            rep.first_degenerate_n = dir * n;
            rep.location = zm;
          }
        }
      }
      if (rep.first_degenerate_n) break;
    }
  }

  std::ostringstream cert;
  const double hx = (region.x_hi - region.x_lo) / region.x_resolution;
  const double hp = region.p_resolution > 1 ? (region.p_hi - region.p_lo) / (region.p_resolution - 1) : 0.0;
  if (rep.first_degenerate_n) {
    cert << "degeneracy at n=" << *rep.first_degenerate_n << " x=" << rep.location->x.transpose()
         << " p=" << rep.location->p.transpose();
  } else {
    cert << "no degeneracy found up to n_max=" << n_max << " at resolution hx=" << hx << " hp=" << hp;
  }
  rep.certificate = cert.str();
  return rep;
}

namespace {

Mat pushed_green_basis(const GeneratingFunction& S, const PhasePoint& pt, int n) {
  const int d = S.dim();
  std::vector<PhasePoint> back{pt};
  for (int k = 0; k < n; ++k) back.push_back(twist_map(S, back.back(), -1));
  Mat Y = Mat::Zero(2 * d, d);
  Y.bottomRows(d) = Mat::Identity(d, d);
  for (int k = n; k > 0; --k) {
    Y = tangent_at(S, back[static_cast<std::size_t>(k)].x, back[static_cast<std::size_t>(k - 1)].x) * Y;
    if ((n - k + 1) % 8 == 0) {
      Eigen::HouseholderQR<Mat> qr(Y);
      Y = qr.householderQ() * Mat::Identity(2 * d, d);
    }
  }
  return Y;
}

Mat slope_from_basis(const Mat& Y, int d, int n, double threshold) {
  const Mat X = Y.topRows(d);
  const Mat P = Y.bottomRows(d);
  Eigen::JacobiSVD<Mat> svd_x(X);
  Eigen::JacobiSVD<Mat> svd_y(Y);
  if (svd_x.singularValues()[d - 1] <= threshold * svd_y.singularValues()[0]) {
    throw NotTransverse("pushed vertical is not a graph over dx", n);
  }
  return P * X.partialPivLu().inverse();
}

}  // namespace

GreenSlope green_slope(const GeneratingFunction& S, const PhasePoint& pt, int n_iter, double threshold) {
  if (n_iter < 1) throw Error(ErrorKind::invalid_argument, "n_iter must be >= 1");
  const int d = S.dim();
  GreenSlope g;
  g.n_iter = n_iter;
  g.slope = slope_from_basis(pushed_green_basis(S, pt, n_iter), d, n_iter, threshold);
  g.asymmetry = (g.slope - g.slope.transpose()).cwiseAbs().maxCoeff();
  if (n_iter >= 2) {
    const int half = n_iter / 2;
    const Mat g_half = slope_from_basis(pushed_green_basis(S, pt, half), d, half, threshold);
    g.gap = (g.slope - g_half).norm();
  } else {
    g.gap = std::numeric_limits<double>::quiet_NaN();
  }
  return g;
}

std::vector<double> backward_projection_growth(const GeneratingFunction& S, const PhasePoint& pt, const Vec& v,
                                               int n_max) {
  const int d = S.dim();
  if (v.size() != 2 * d) throw Error(ErrorKind::invalid_argument, "tangent vector must have 2d entries");
  const Mat omega = symplectic_form(d);
  Vec w = v;
  PhasePoint z = pt;
  std::vector<double> out;
  for (int n = 1; n <= n_max; ++n) {
    const Vec x_prev = fiber_solve_backward(S, z.x, z.p);
    const Mat J = tangent_at(S, x_prev, z.x);
    w = (-omega * J.transpose() * omega) * w;
    z.p = -S.d1(x_prev, z.x);
    z.x = x_prev;
    out.push_back(w.head(d).norm());
  }
  return out;
}

}  // namespace twistkam
