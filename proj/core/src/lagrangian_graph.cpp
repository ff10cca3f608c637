#include "twistkam/lagrangian_graph.hpp"

#include "twistkam/errors.hpp"

#include <algorithm>
#include <cmath>

namespace twistkam {

const char* to_string(CellStatus status) {
  switch (status) {
    case CellStatus::ok: return "ok";
    case CellStatus::solver_failed: return "solver_failed";
    case CellStatus::absent: return "absent";
    case CellStatus::ambiguous: return "ambiguous";
  }
  return "unknown";
}

std::optional<Vec> LagrangianGraph::evaluate(const Vec& x) const {
  const int d = dim();
  if (x.size() != d) throw Error(ErrorKind::invalid_argument, "evaluation point has wrong dimension");
  const Vec h = grid.spacing();
  std::vector<int> base(static_cast<std::size_t>(d));
  Vec t(d);
  for (int i = 0; i < d; ++i) {
    const int res = grid.resolution()[static_cast<std::size_t>(i)];
    double u = (x[i] - grid.lo()[i]) / h[i];
    u -= res * std::floor(u / res);
    double fl = std::floor(u);
    t[i] = u - fl;
    base[static_cast<std::size_t>(i)] = static_cast<int>(fl) % res;
  }
  Vec out = Vec::Zero(d);
  for (int corner = 0; corner < (1 << d); ++corner) {
    std::vector<int> multi = base;
    double w = 1.0;
    for (int i = 0; i < d; ++i) {
      const bool up = (corner >> i) & 1;
      const int res = grid.resolution()[static_cast<std::size_t>(i)];
      if (up) multi[static_cast<std::size_t>(i)] = (multi[static_cast<std::size_t>(i)] + 1) % res;
      w *= up ? t[i] : 1.0 - t[i];
    }
    if (w == 0.0) continue;
    const std::size_t idx = grid.flatten(multi);
    if (status[idx] != CellStatus::ok) return std::nullopt;
    out += w * p[idx];
  }
  return out;
}

namespace {

// Max asymmetry and max |entry| of the central-difference Jacobian with the
// given stride in cells.
std::pair<double, double> jacobian_audit(const LagrangianGraph& g, int stride) {
  const int d = g.dim();
  const Vec h = g.grid.spacing();
  double asym = 0.0;
  double lip = 0.0;
  for (std::size_t idx = 0; idx < g.size(); ++idx) {
    if (g.status[idx] != CellStatus::ok) continue;
    Mat J(d, d);
    bool complete = true;
    for (int j = 0; j < d && complete; ++j) {
      const std::size_t fwd = g.grid.neighbour(idx, j, stride);
      const std::size_t bwd = g.grid.neighbour(idx, j, -stride);
      if (g.status[fwd] != CellStatus::ok || g.status[bwd] != CellStatus::ok) {
        complete = false;
        break;
      }
      J.col(j) = (g.p[fwd] - g.p[bwd]) / (2.0 * stride * h[j]);
    }
    if (!complete) continue;
    asym = std::max(asym, (J - J.transpose()).cwiseAbs().maxCoeff());
    lip = std::max(lip, J.cwiseAbs().maxCoeff());
  }
  return {asym, lip};
}

}  // namespace

void compute_graph_audits(LagrangianGraph& g) {
  const int d = g.dim();
  GraphAudits& a = g.audits;
  a.failed_cells = 0;
  a.max_residual = 0.0;
  a.average_momentum = Vec::Zero(d);
  int ok = 0;
  for (std::size_t idx = 0; idx < g.size(); ++idx) {
    if (g.status[idx] != CellStatus::ok) {
      ++a.failed_cells;
      continue;
    }
    ++ok;
    a.average_momentum += g.p[idx];
    if (idx < g.residual.size()) a.max_residual = std::max(a.max_residual, g.residual[idx]);
  }
  if (ok > 0) a.average_momentum /= ok;
  if (!g.grid.periodic()) return;
  const auto [asym, lip] = jacobian_audit(g, 1);
  a.asymmetry = asym;
  a.lipschitz = lip;
  const int min_res = *std::min_element(g.grid.resolution().begin(), g.grid.resolution().end());
  a.asymmetry_coarse = min_res >= 4 ? jacobian_audit(g, 2).first : asym;
}

}  // namespace twistkam
