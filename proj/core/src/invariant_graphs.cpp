#include "twistkam/invariant_graphs.hpp"

#include "twistkam/dynamics.hpp"
#include "twistkam/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace twistkam {

PeriodicFiber periodic_fiber(const GeneratingFunction& S, const Vec& x, int N, const IVec& r,
                             const MinimizeOptions& opts) {
  if (N < 1) throw Error(ErrorKind::invalid_argument, "N must be >= 1");
  if (x.size() != S.dim() || r.size() != S.dim()) throw Error(ErrorKind::invalid_argument, "dimension mismatch");
  const Vec target = x + r.cast<double>();
  const MinimizeResult m = minimize_endpoints(S, x, target, N, opts);
  PeriodicFiber out;
  out.segment = m.segment;
  const Vec& x1 = m.segment.points[1];
  out.p = -S.d1(x, x1);
  const PhasePoint img = twist_map(S, PhasePoint{x, out.p}, N);
  Vec diff(2 * S.dim());
  diff << img.x - target, img.p - out.p;
  out.residual = diff.norm();
  const auto ext = extend_extremal(S, x, x1, 0, 2 * N);
  out.translation_residual = (ext[static_cast<std::size_t>(2 * N)] - (ext[static_cast<std::size_t>(N)] +
                                                                        r.cast<double>()))
                                 .norm();
  return out;
}

LagrangianGraph build_graph(const GeneratingFunction& S, int N, const IVec& r, const TorusGrid& grid,
                            const MinimizeOptions& opts) {
  if (grid.size() == 0 || grid.dim() != S.dim()) throw Error(ErrorKind::invalid_argument, "grid");
  LagrangianGraph g;
  g.grid = grid;
  g.N = N;
  g.r = r;
  g.p.assign(grid.size(), Vec::Zero(S.dim()));
  g.status.assign(grid.size(), CellStatus::ok);
  g.residual.assign(grid.size(), 0.0);
  int failed = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    try {
      const PeriodicFiber f = periodic_fiber(S, grid.point(i), N, r, opts);
      g.p[i] = f.p;
      g.residual[i] = f.residual;
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::invalid_argument) throw;
      g.status[i] = CellStatus::solver_failed;
      g.residual[i] = std::numeric_limits<double>::infinity();
      ++failed;
    }
  }
  if (100 * failed > static_cast<int>(grid.size())) {
    throw Error(ErrorKind::graph_rejected,
                std::to_string(failed) + " of " + std::to_string(grid.size()) + " cells failed");
  }
  compute_graph_audits(g);
  return g;
}

Vec graph_cohomology(const LagrangianGraph& g) {
  const double threshold = 1e-4 * std::max(1.0, g.audits.lipschitz);
  if (g.audits.asymmetry > threshold) {
    throw Error(ErrorKind::not_lagrangian, "Jacobian asymmetry " + std::to_string(g.audits.asymmetry));
  }
  Vec sum = Vec::Zero(g.dim());
  int ok = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g.status[i] != CellStatus::ok) continue;
    sum += g.p[i];
    ++ok;
  }
  if (ok == 0) throw Error(ErrorKind::not_lagrangian, "graph has no valid cells");
  return sum / ok;
}

GraphDistance compare_graphs(const LagrangianGraph& a, const LagrangianGraph& b) {
  if (!a.grid.same_as(b.grid)) throw Error(ErrorKind::grid_mismatch, "graphs live on different grids");
  GraphDistance out;
  out.inf = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a.status[i] != CellStatus::ok || b.status[i] != CellStatus::ok) continue;
    const double dist = (a.p[i] - b.p[i]).norm();
    out.sup = std::max(out.sup, dist);
    out.inf = std::min(out.inf, dist);
    ++out.common_cells;
  }
  if (out.common_cells == 0) out.inf = 0.0;
  return out;
}

FoliationSection foliation_section(const GeneratingFunction& S, const Vec& x, const std::vector<Vec>& c_grid,
                                   Truncation trunc, const WeakKamOptions& opts) {
  if (c_grid.empty()) throw Error(ErrorKind::invalid_argument, "c_grid must be nonempty");
  const int d = S.dim();
  FoliationSection out;
  out.x = x;
  const TorusGrid probe = default_probe_grid(d);
  for (const Vec& c : c_grid) {
    FoliationEntry e;
    e.c = c;
    e.p = Vec::Constant(d, std::numeric_limits<double>::quiet_NaN());
    try {
      const WeakKam wk(S, c, trunc, probe, opts);
      const AubrySample s = wk.partner(x);
      e.p = s.p;
      e.indicator = s.indicator;
    } catch (const Error& err) {
      e.status = err.kind() == ErrorKind::not_in_aubry        ? CellStatus::absent
                 : err.kind() == ErrorKind::ambiguous_partner ? CellStatus::ambiguous
                                                              : CellStatus::solver_failed;
      ++out.failed;
    }
    out.entries.push_back(e);
  }

  std::vector<std::size_t> ok;
  for (std::size_t i = 0; i < out.entries.size(); ++i) {
    if (out.entries[i].status == CellStatus::ok) ok.push_back(i);
  }
  out.injectivity_gap = ok.size() > 1 ? std::numeric_limits<double>::infinity() : 0.0;
  for (std::size_t a = 0; a < ok.size(); ++a) {
    for (std::size_t b = a + 1; b < ok.size(); ++b) {
      const auto& ea = out.entries[ok[a]];
      const auto& eb = out.entries[ok[b]];
      if ((ea.c - eb.c).norm() == 0.0) continue;
      out.injectivity_gap = std::min(out.injectivity_gap, (ea.p - eb.p).norm());
    }
  }
  if (d == 1) {
    auto sorted = ok;
    std::stable_sort(sorted.begin(), sorted.end(),
                     [&](std::size_t a, std::size_t b) { return out.entries[a].c[0] < out.entries[b].c[0]; });
    for (std::size_t k = 0; k + 1 < sorted.size(); ++k) {
      const double drop = out.entries[sorted[k]].p[0] - out.entries[sorted[k + 1]].p[0];
      out.monotonicity_violation = std::max(out.monotonicity_violation, drop);
    }
  }
  for (std::size_t a : ok) {
    double nearest = std::numeric_limits<double>::infinity();
    double ratio = 0.0;
    for (std::size_t b : ok) {
      const double dc = (out.entries[a].c - out.entries[b].c).norm();
      if (a == b || dc == 0.0 || dc > nearest) continue;
      if (dc < nearest) ratio = 0.0;
      nearest = dc;
      ratio = std::max(ratio, (out.entries[a].p - out.entries[b].p).norm() / dc);
    }
    out.continuity_modulus = std::max(out.continuity_modulus, ratio);
  }
  if (ok.size() > 1) {
    double mc = 0.0;
    double mp = 0.0;
    for (std::size_t a : ok) {
      mc += out.entries[a].c.norm();
      mp += out.entries[a].p.norm();
    }
    mc /= static_cast<double>(ok.size());
    mp /= static_cast<double>(ok.size());
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t a : ok) {
      const double dc = out.entries[a].c.norm() - mc;
      sxy += dc * (out.entries[a].p.norm() - mp);
      sxx += dc * dc;
    }
    out.coercivity_slope = sxx > 0.0 ? sxy / sxx : 0.0;
  }
  return out;
}

}  // namespace twistkam
