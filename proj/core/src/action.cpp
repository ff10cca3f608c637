#include "twistkam/action.hpp"

#include "twistkam/dynamics.hpp"
#include "twistkam/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

namespace twistkam {

double action_sum(const GeneratingFunction& S, const std::vector<Vec>& points) {
  if (points.size() < 2) throw Error(ErrorKind::invalid_argument, "action_sum needs at least two points");
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < points.size(); ++k) total += S.value(points[k], points[k + 1]);
  return total;
}

Vec action_gradient(const GeneratingFunction& S, const std::vector<Vec>& points) {
  const int d = S.dim();
  const int interior = static_cast<int>(points.size()) - 2;
  Vec g(std::max(interior, 0) * d);
  for (int k = 1; k <= interior; ++k) {
    const auto i = static_cast<std::size_t>(k);
    g.segment((k - 1) * d, d) = S.d2(points[i - 1], points[i]) + S.d1(points[i], points[i + 1]);
  }
  return g;
}

BlockTridiagonal action_hessian(const GeneratingFunction& S, const std::vector<Vec>& points) {
  const int interior = static_cast<int>(points.size()) - 2;
  BlockTridiagonal H;
  if (interior <= 0) return H;
  std::vector<DerivativeBundle> steps;
  steps.reserve(points.size() - 1);
  for (std::size_t k = 0; k + 1 < points.size(); ++k) steps.push_back(S.derivatives(points[k], points[k + 1]));
  for (int k = 1; k <= interior; ++k) {
    const auto i = static_cast<std::size_t>(k);
    H.diag.push_back(steps[i - 1].d22 + steps[i].d11);
    if (k < interior) H.upper.push_back(steps[i].d12);
  }
  return H;
}

double extremal_residual(const GeneratingFunction& S, const std::vector<Vec>& points) {
  if (points.size() < 3) throw Error(ErrorKind::invalid_argument, "extremal_residual needs at least three points");
  double worst = 0.0;
  for (std::size_t k = 1; k + 1 < points.size(); ++k) {
    worst = std::max(worst, (S.d2(points[k - 1], points[k]) + S.d1(points[k], points[k + 1])).norm());
  }
  return worst;
}

std::vector<Vec> extend_extremal(const GeneratingFunction& S, const Vec& x0, const Vec& x1, int n_minus, int n_plus) {
  if (n_minus < 0 || n_plus < 1) {
    throw Error(ErrorKind::invalid_argument, "extend_extremal needs n_minus >= 0 and n_plus >= 1");
  }
  std::vector<Vec> forward{x0, x1};
  for (int k = 1; k < n_plus; ++k) {
    forward.push_back(shift(S, forward[forward.size() - 2], forward.back()));
  }
  std::vector<Vec> backward;  // x_{-1}, x_{-2}, ...
  Vec a = x0;
  Vec b = x1;
  for (int k = 0; k < n_minus; ++k) {
    Vec prev = shift_backward(S, a, b);
    b = a;
    a = prev;
    backward.push_back(prev);
  }
  std::vector<Vec> out(backward.rbegin(), backward.rend());
  out.insert(out.end(), forward.begin(), forward.end());
  return out;
}

namespace {

struct StartOutcome {
  std::vector<Vec> points;
  double value = 0.0;
  double grad_norm = 0.0;
  int iters = 0;
  bool converged = false;
  bool escaped = false;
  bool positive_definite = false;
};

StartOutcome run_newton(const GeneratingFunction& S, std::vector<Vec> pts, const std::vector<Vec>& seed,
                        double box, const MinimizeOptions& opts) {
  const int d = S.dim();
  const int interior = static_cast<int>(pts.size()) - 2;
  StartOutcome out;
  auto apply = [&](const std::vector<Vec>& base, const Vec& step, double t) {
    std::vector<Vec> next = base;
    for (int k = 1; k <= interior; ++k) next[static_cast<std::size_t>(k)] += t * step.segment((k - 1) * d, d);
    return next;
  };
  double f = action_sum(S, pts);
  for (int it = 0; it < opts.max_iter; ++it) {
    const Vec g = action_gradient(S, pts);
    out.iters = it;
    if (g.norm() <= opts.grad_tol) {
      out.converged = true;
      break;
    }
    // Indefinite Hessian: shift the diagonal until the factorization is
    // positive definite; plain gradient descent only if no shift works.
    BlockTridiagonal H = action_hessian(S, pts);
    Vec step = -g;
    bool newton = false;
    double shift = 0.0;
    for (int tries = 0; tries < 24; ++tries) {
      const BlockLdlt ldlt(H);
      if (ldlt.ok() && ldlt.positive_definite()) {
        step = -ldlt.solve(g);
        newton = shift == 0.0;
        break;
      }
      const double next = shift == 0.0 ? 1e-3 : 4.0 * shift;
      for (Mat& D : H.diag) D.diagonal().array() += next - shift;
      shift = next;
    }
    const double slope = g.dot(step);
    bool accepted = false;
    double t = 1.0;
    for (int ls = 0; ls < 60; ++ls, t *= 0.5) {
      auto trial = apply(pts, step, t);
      const double ft = action_sum(S, trial);
      if (std::isfinite(ft) && ft <= f + 1e-4 * t * slope) {
        pts = std::move(trial);
        f = ft;
        accepted = true;
        break;
      }
    }
    if (!accepted && newton) {
      // Near the optimum the decrease drowns in rounding; fall back to the
      // gradient norm as merit for a full Newton step.
      auto trial = apply(pts, step, 1.0);
      if (action_gradient(S, trial).norm() < g.norm()) {
        pts = std::move(trial);
        f = action_sum(S, pts);
        accepted = true;
      }
    }
    if (!accepted) break;
    for (int k = 1; k <= interior; ++k) {
      const auto i = static_cast<std::size_t>(k);
      if ((pts[i] - seed[i]).cwiseAbs().maxCoeff() > box) {
        out.escaped = true;
        out.points = std::move(pts);
        return out;
      }
    }
  }
  const Vec g = action_gradient(S, pts);
  out.grad_norm = g.norm();
  if (out.grad_norm <= opts.grad_tol) out.converged = true;
  out.value = f;
  if (out.converged) {
    const BlockLdlt ldlt(action_hessian(S, pts));
    out.positive_definite = ldlt.positive_definite();
  }
  out.points = std::move(pts);
  return out;
}

double min_eigenvalue(const BlockTridiagonal& H) {
  if (H.blocks() == 0) return std::numeric_limits<double>::infinity();
  Eigen::SelfAdjointEigenSolver<Mat> es(H.to_dense(), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

}  // namespace

MinimizeResult minimize_endpoints(const GeneratingFunction& S, const Vec& x, const Vec& y, int N,
                                  const MinimizeOptions& opts) {
  if (N < 1) throw Error(ErrorKind::invalid_argument, "N must be >= 1");
  if (x.size() != S.dim() || y.size() != S.dim()) throw Error(ErrorKind::invalid_argument, "endpoint dimension");
  MinimizeResult res;
  if (N == 1) {
    res.segment.points = {x, y};
    res.segment.action = S.value(x, y);
    res.value = res.segment.action;
    res.multistart_count = 1;
    res.converged_starts = 1;
    res.min_hessian_eig = std::numeric_limits<double>::infinity();
    return res;
  }

  const int d = S.dim();
  std::vector<Vec> seed(static_cast<std::size_t>(N + 1));
  for (int k = 0; k <= N; ++k) seed[static_cast<std::size_t>(k)] = x + (static_cast<double>(k) / N) * (y - x);
  seed.back() = y;

  // Search box from the coercivity bound: no step of a segment whose action
  // does not exceed the seed's can be longer than V.
  const CoercivityBound cb = S.coercivity_bound();
  const double seed_action = action_sum(S, seed);
  const double rhs = seed_action - (N - 1) * cb.minorant(0.0);
  double V = 1.0;
  if (cb.gamma > 0.0) {
    const double disc = cb.beta * cb.beta - 4.0 * cb.gamma * (cb.alpha - rhs);
    V = disc > 0.0 ? (-cb.beta + std::sqrt(disc)) / (2.0 * cb.gamma) : 1.0;
  }
  double box = N * std::max(V, 0.0) + (y - x).cwiseAbs().maxCoeff() + 1.0;

  std::uint64_t h = hash_combine(opts.seed, static_cast<std::uint64_t>(N));
  h = hash_vec(h, x);
  h = hash_vec(h, y);
  std::mt19937_64 rng(h);
  std::uniform_real_distribution<double> pert(-opts.perturbation, opts.perturbation);
  std::vector<std::vector<Vec>> starts{seed};
  // Odd starts move all interior points together along a sine profile, so
  // detours of the whole segment are sampled and not only local wiggles.
  std::uniform_real_distribution<double> sweep(-2.0 * opts.perturbation, 2.0 * opts.perturbation);
  for (int s = 0; s < opts.multistart; ++s) {
    auto st = seed;
    if (s % 2 == 1) {
      Vec offset(d);
      for (int i = 0; i < d; ++i) offset[i] = sweep(rng);
      for (int k = 1; k < N; ++k) st[static_cast<std::size_t>(k)] += std::sin(std::numbers::pi * k / N) * offset;
    } else {
      for (int k = 1; k < N; ++k) {
        for (int i = 0; i < d; ++i) st[static_cast<std::size_t>(k)][i] += pert(rng);
      }
    }
    starts.push_back(std::move(st));
  }
  res.multistart_count = static_cast<int>(starts.size());

  for (int attempt = 0; attempt <= opts.max_box_enlargements; ++attempt) {
    const StartOutcome* best_min = nullptr;
    const StartOutcome* best_any = nullptr;
    std::vector<StartOutcome> outcomes;
    outcomes.reserve(starts.size());
    int escaped = 0;
    int total_iters = 0;
    for (const auto& st : starts) {
      outcomes.push_back(run_newton(S, st, seed, box, opts));
      total_iters += outcomes.back().iters;
      if (outcomes.back().escaped) ++escaped;
    }
    int converged = 0;
    for (const auto& o : outcomes) {
      if (!o.converged) continue;
      ++converged;
      if (!best_any || o.value < best_any->value) best_any = &o;
      if (o.positive_definite && (!best_min || o.value < best_min->value)) best_min = &o;
    }
    // Basin hopping: perturb the best minimum found and keep improvements.
    StartOutcome hopped;
    if (best_min && opts.multistart > 0) {
      hopped = *best_min;
      for (int hop = 0; hop < opts.hops; ++hop) {
        auto st = hopped.points;
        for (int k = 1; k < N; ++k) {
          for (int i = 0; i < d; ++i) st[static_cast<std::size_t>(k)][i] += pert(rng);
        }
        StartOutcome o = run_newton(S, st, seed, box, opts);
        total_iters += o.iters;
        if (o.converged && o.positive_definite && o.value < hopped.value) hopped = std::move(o);
      }
      best_min = &hopped;
      if (hopped.value < best_any->value) best_any = &hopped;
    }
    if (best_any) {
      const StartOutcome* pick = best_min;
      double min_eig = 0.0;
      if (!pick) {
        // Not positive definite at any converged start: accept PSD to tolerance.
        for (const auto& o : outcomes) {
          if (!o.converged) continue;
          const double e = min_eigenvalue(action_hessian(S, o.points));
          if (e >= -opts.psd_tol && (!pick || o.value < pick->value)) {
            pick = &o;
            min_eig = e;
          }
        }
      }
      res.status = pick ? MinimizeStatus::minimum : MinimizeStatus::saddle_detected;
      if (!pick) pick = best_any;
      if (pick == best_min) min_eig = min_eigenvalue(action_hessian(S, pick->points));
      res.segment.points = pick->points;
      res.segment.points.front() = x;
      res.segment.points.back() = y;
      res.segment.action = action_sum(S, res.segment.points);
      res.value = res.segment.action;
      res.grad_norm = pick->grad_norm;
      res.newton_iters = total_iters;
      res.converged_starts = converged;
      res.min_hessian_eig = min_eig;
      return res;
    }
    if (escaped == 0) break;
    box *= 2.0;
  }
  std::ostringstream msg;
  msg << "minimize_endpoints: no start converged (N=" << N << ")";
  throw NoConvergence(msg.str());
}

namespace {

// Cycle variables z = (x_0, .., x_{N-1}); x_N = x_0 + r.
std::vector<Vec> cycle_points(const Vec& z, int N, int d, const Vec& r) {
  std::vector<Vec> pts(static_cast<std::size_t>(N + 1));
  for (int k = 0; k < N; ++k) pts[static_cast<std::size_t>(k)] = z.segment(k * d, d);
  pts.back() = pts.front() + r;
  return pts;
}

void cycle_gradient_hessian(const GeneratingFunction& S, const std::vector<Vec>& pts, int N, int d, Vec& g,
                            Mat& H) {
  g = Vec::Zero(N * d);
  H = Mat::Zero(N * d, N * d);
  for (int k = 0; k < N; ++k) {
    const auto db = S.derivatives(pts[static_cast<std::size_t>(k)], pts[static_cast<std::size_t>(k + 1)]);
    const int a = k * d;
    const int b = ((k + 1) % N) * d;
    g.segment(a, d) += db.d1;
    g.segment(b, d) += db.d2;
    H.block(a, a, d, d) += db.d11;
    H.block(b, b, d, d) += db.d22;
    H.block(a, b, d, d) += db.d12;
    H.block(b, a, d, d) += db.d12.transpose();
  }
}

}  // namespace

Segment polish_cycle(const GeneratingFunction& S, const Segment& seed, double grad_tol, int max_iter) {
  const int N = seed.steps();
  const int d = S.dim();
  if (N < 1) throw Error(ErrorKind::invalid_argument, "cycle needs at least one step");
  const Vec r = seed.points.back() - seed.points.front();
  Vec z(N * d);
  for (int k = 0; k < N; ++k) z.segment(k * d, d) = seed.points[static_cast<std::size_t>(k)];
  double f = action_sum(S, seed.points);
  const double f0 = f;
  Vec g;
  Mat H;
  for (int it = 0; it < max_iter; ++it) {
    cycle_gradient_hessian(S, cycle_points(z, N, d, r), N, d, g, H);
    if (g.norm() <= grad_tol) break;
    Eigen::LLT<Mat> llt(H);
    const bool newton = llt.info() == Eigen::Success;
    const Vec step = newton ? Vec(-llt.solve(g)) : Vec(-g);
    const double slope = g.dot(step);
    bool accepted = false;
    double t = 1.0;
    for (int ls = 0; ls < 60; ++ls, t *= 0.5) {
      const Vec trial = z + t * step;
      const double ft = action_sum(S, cycle_points(trial, N, d, r));
      if (std::isfinite(ft) && ft <= f + 1e-4 * t * slope) {
        z = trial;
        f = ft;
        accepted = true;
        break;
      }
    }
    if (!accepted && newton) {
      const Vec trial = z + step;
      Vec g2;
      Mat H2;
      cycle_gradient_hessian(S, cycle_points(trial, N, d, r), N, d, g2, H2);
      if (g2.norm() < g.norm()) {
        z = trial;
        f = action_sum(S, cycle_points(z, N, d, r));
        accepted = true;
      }
    }
    if (!accepted) break;
  }
  if (!(f <= f0)) return seed;
  Segment out;
  out.points = cycle_points(z, N, d, r);
  out.action = action_sum(S, out.points);
  return out;
}

TriangleGap triangle_gap(const GeneratingFunction& S, const Vec& x, const Vec& y, const Vec& z, int N, int N2,
                         const MinimizeOptions& opts) {
  if (N < 1 || N2 < 1) throw Error(ErrorKind::invalid_argument, "N and N' must be >= 1");
  const MinimizeResult a = minimize_endpoints(S, x, y, N, opts);
  const MinimizeResult b = minimize_endpoints(S, y, z, N2, opts);
  const MinimizeResult ab = minimize_endpoints(S, x, z, N + N2, opts);
  TriangleGap out;
  out.gap = a.value + b.value - ab.value;
  out.distance_to_split = (y - ab.segment.points[static_cast<std::size_t>(N)]).norm();
  return out;
}

FProfile f_profile(const GeneratingFunction& S, int N, const IVec& r, const TorusGrid& grid,
                   const MinimizeOptions& opts) {
  if (N < 1) throw Error(ErrorKind::invalid_argument, "N must be >= 1");
  if (grid.size() == 0) throw Error(ErrorKind::invalid_argument, "grid must be nonempty");
  if (r.size() != S.dim() || grid.dim() != S.dim()) throw Error(ErrorKind::invalid_argument, "dimension mismatch");
  FProfile out;
  out.grid = grid;
  out.values.resize(grid.size());
  const Vec shift_r = r.cast<double>();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Vec x = grid.point(i);
    out.values[i] = minimize_endpoints(S, x, x + shift_r, N, opts).value;
  }
  const auto [mn, mx] = std::minmax_element(out.values.begin(), out.values.end());
  out.argmin = static_cast<std::size_t>(mn - out.values.begin());
  out.argmax = static_cast<std::size_t>(mx - out.values.begin());
  out.gap = *mx - *mn;
  return out;
}

}  // namespace twistkam
