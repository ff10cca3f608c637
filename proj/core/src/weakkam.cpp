#include "twistkam/weakkam.hpp"

#include "twistkam/dynamics.hpp"
#include "twistkam/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

namespace twistkam {

const char* to_string(EstimateKind kind) {
  switch (kind) {
    case EstimateKind::stilde: return "stilde";
    case EstimateKind::alpha: return "alpha";
    case EstimateKind::mane: return "mane";
    case EstimateKind::aubry_indicator: return "aubry_indicator";
  }
  return "unknown";
}

GeneratingFunction twist_by_cocycle(const GeneratingFunction& S, const Vec& c) { return S.twisted(c); }

TorusGrid default_probe_grid(int dim) {
  if (dim < 1) throw Error(ErrorKind::invalid_argument, "dimension must be >= 1");
  return TorusGrid(dim, dim == 1 ? 16 : dim == 2 ? 8 : 4);
}

namespace {

// Ties between truncation candidates go to the one evaluated first (smaller
// lower bound, then smaller n); later candidates must improve by this much.
constexpr double kImprovement = 1e-13;

void check_truncation(const Truncation& t) {
  if (t.N_max < 1) throw Error(ErrorKind::invalid_argument, "N_max must be >= 1");
  if (t.R_max < 0) throw Error(ErrorKind::invalid_argument, "R_max must be >= 0");
}

// Lower bound for A_n of S_c from x to x + delta:
//   n * alpha0 + gamma |delta|^2 / n - cc.delta,
// where alpha0 bounds the trigonometric part, gamma = lambda_min(M)/2 and cc
// is the total cocycle (the cocycle part telescopes along a segment).
struct SegmentBound {
  double alpha0 = 0.0;
  double gamma = 0.0;
  Vec cc;

  explicit SegmentBound(const GeneratingFunction& Sc) {
    const CoercivityBound b = Sc.coercivity_bound();
    alpha0 = b.alpha;
    gamma = b.gamma;
    cc = Sc.cocycle();
  }
  double operator()(int n, const Vec& delta) const {
    return n * alpha0 + gamma * delta.squaredNorm() / n - cc.dot(delta);
  }
};

struct Candidate {
  double bound;
  int n;
  IVec r;
};

std::vector<Candidate> sorted_candidates(std::vector<Candidate> c) {
  std::stable_sort(c.begin(), c.end(), [](const Candidate& a, const Candidate& b) {
    return std::tie(a.bound, a.n) < std::tie(b.bound, b.n);
  });
  return c;
}

std::vector<int> axis_index(const std::vector<int>& res, std::size_t flat) {
  std::vector<int> m(res.size());
  for (int k = static_cast<int>(res.size()) - 1; k >= 0; --k) {
    const auto kk = static_cast<std::size_t>(k);
    m[kk] = static_cast<int>(flat % static_cast<std::size_t>(res[kk]));
    flat /= static_cast<std::size_t>(res[kk]);
  }
  return m;
}

}  // namespace

WeakKamEstimate stilde(const GeneratingFunction& S, const Vec& c, Truncation trunc, const TorusGrid& probe,
                       const WeakKamOptions& opts) {
  check_truncation(trunc);
  if (c.size() != S.dim()) throw Error(ErrorKind::invalid_argument, "cohomology class has wrong dimension");
  if (probe.dim() != S.dim() || probe.size() == 0) throw Error(ErrorKind::invalid_argument, "probe grid");
  const GeneratingFunction Sc = S.twisted(c);
  const SegmentBound lb(Sc);
  std::vector<Candidate> cand;
  for (int n = 1; n <= trunc.N_max; ++n) {
    for (const IVec& r : lattice_box(S.dim(), trunc.R_max)) {
      cand.push_back({lb(n, r.cast<double>()) / n, n, r});
    }
  }
  WeakKamEstimate est;
  est.kind = EstimateKind::stilde;
  est.truncation = trunc;
  est.grid_resolution = probe.resolution().front();
  est.truncation_allowance = 1.0 / trunc.N_max;
  double best = std::numeric_limits<double>::infinity();
  for (const Candidate& k : sorted_candidates(std::move(cand))) {
    if (k.bound >= best) break;
    ++est.evaluated;
    const Vec shift_r = k.r.cast<double>();
    Segment seg;
    double val = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < probe.size(); ++i) {
      const Vec x = probe.point(i);
      const MinimizeResult m = minimize_endpoints(Sc, x, x + shift_r, k.n, opts.minimize);
      if (m.value < val) {
        val = m.value;
        seg = m.segment;
      }
    }
    if (opts.polish_cycles) {
      seg = polish_cycle(Sc, seg);
      val = seg.action;
    }
    val /= k.n;
    if (val < best - kImprovement * (1.0 + std::abs(best == std::numeric_limits<double>::infinity() ? 0.0 : best))) {
      best = val;
      est.witness = Witness{k.n, k.r, seg};
    }
  }
  est.value = best;
  return est;
}

WeakKamEstimate mane(const GeneratingFunction& S, const Vec& c, const Vec& x, const Vec& y, Truncation trunc,
                     double stilde_value, const WeakKamOptions& opts) {
  check_truncation(trunc);
  if (c.size() != S.dim() || x.size() != S.dim() || y.size() != S.dim()) {
    throw Error(ErrorKind::invalid_argument, "dimension mismatch");
  }
  const GeneratingFunction Sc = S.twisted(c);
  const SegmentBound lb(Sc);
  // Shifts are counted from the translate of y nearest to x, so the truncated
  // potential depends on x and y only modulo Z^d.
  IVec base(S.dim());
  for (int i = 0; i < S.dim(); ++i) base[i] = -static_cast<int>(std::lround(y[i] - x[i]));
  std::vector<Candidate> cand;
  for (int n = 1; n <= trunc.N_max; ++n) {
    for (const IVec& r0 : lattice_box(S.dim(), trunc.R_max)) {
      const IVec r = base + r0;
      cand.push_back({lb(n, y + r.cast<double>() - x) - n * stilde_value, n, r});
    }
  }
  WeakKamEstimate est;
  est.kind = EstimateKind::mane;
  est.truncation = trunc;
  est.truncation_allowance = 1.0 / trunc.N_max;
  double best = std::numeric_limits<double>::infinity();
  for (const Candidate& k : sorted_candidates(std::move(cand))) {
    if (k.bound >= best) break;
    ++est.evaluated;
    const MinimizeResult m = minimize_endpoints(Sc, x, y + k.r.cast<double>(), k.n, opts.minimize);
    const double val = m.value - k.n * stilde_value;
    if (val < best - kImprovement * (1.0 + std::abs(best == std::numeric_limits<double>::infinity() ? 0.0 : best))) {
      best = val;
      est.witness = Witness{k.n, k.r, m.segment};
    }
  }
  est.value = best;
  return est;
}

WeakKam::WeakKam(const GeneratingFunction& S, const Vec& c, Truncation trunc, const TorusGrid& probe,
                 WeakKamOptions opts)
    : S_(S), Sc_(S.twisted(c)), c_(c), trunc_(trunc), probe_(probe), opts_(opts) {
  stilde_ = twistkam::stilde(S_, c_, trunc_, probe_, opts_);
}

WeakKamEstimate WeakKam::mane(const Vec& x, const Vec& y) const {
  return twistkam::mane(S_, c_, x, y, trunc_, stilde_.value, opts_);
}

WeakKamEstimate WeakKam::indicator(const Vec& x) const {
  WeakKamEstimate e = mane(x, x);
  e.kind = EstimateKind::aubry_indicator;
  return e;
}

AubryResiduals WeakKam::residuals(const Vec& x, const Vec& y) const {
  const double pxy = mane(x, y).value;
  const double pyx = mane(y, x).value;
  AubryResiduals out;
  out.action_identity = std::abs(Sc_.value(x, y) - stilde_.value - pxy);
  out.antisymmetry = std::abs(pxy + pyx);
  return out;
}

double WeakKam::partner_residual(const Vec& x, const Vec& y) const {
  const AubryResiduals r = residuals(x, y);
  return r.action_identity + r.antisymmetry;
}

double WeakKam::partner_bound() const {
  if (partner_bound_) return *partner_bound_;
  // B = max over the unit cell of S_c(x, x + v) - stilde bounds pi, hence
  // S_c(x, y) <= B + stilde on Aubry pairs; invert the coercivity bound.
  const int d = S_.dim();
  const int per_axis = d <= 2 ? 16 : 4;
  const TorusGrid cell(2 * d, per_axis);
  double B = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < cell.size(); ++i) {
    const Vec z = cell.point(i);
    const Vec x = z.head(d);
    B = std::max(B, Sc_.value(x, x + z.tail(d)) - stilde_.value);
  }
  const SegmentBound lb(Sc_);
  const double cn = lb.cc.norm();
  const double rhs = B + stilde_.value - lb.alpha0;
  double t = 1.0;
  if (lb.gamma > 0.0) t = (cn + std::sqrt(std::max(0.0, cn * cn + 4.0 * lb.gamma * rhs))) / (2.0 * lb.gamma);
  partner_bound_ = 1.1 * t + 0.1;
  return *partner_bound_;
}

namespace {

struct PolishedPartner {
  Vec y;
  double rho;
  bool from_witness;
};

Vec golden_or_compass(const WeakKam& wk, const Vec& x, Vec y, double h, double tol, double& rho) {
  const int d = static_cast<int>(y.size());
  if (d == 1) {
    constexpr double invphi = 0.6180339887498949;
    double a = y[0] - h;
    double b = y[0] + h;
    auto f = [&](double t) { return wk.partner_residual(x, Vec::Constant(1, t)); };
    double c1 = b - invphi * (b - a);
    double c2 = a + invphi * (b - a);
    double f1 = f(c1);
    double f2 = f(c2);
    while (b - a > tol) {
      if (f1 <= f2) {
        b = c2;
        c2 = c1;
        f2 = f1;
        c1 = b - invphi * (b - a);
        f1 = f(c1);
      } else {
        a = c1;
        c1 = c2;
        f1 = f2;
        c2 = a + invphi * (b - a);
        f2 = f(c2);
      }
    }
    const double mid = 0.5 * (a + b);
    const double fm = f(mid);
    if (fm < rho) {
      rho = fm;
      y[0] = mid;
    }
    return y;
  }
  double step = 0.5 * h;
  while (step > tol) {
    bool moved = false;
    for (int i = 0; i < d && !moved; ++i) {
      for (int s : {1, -1}) {
        Vec t = y;
        t[i] += s * step;
        const double ft = wk.partner_residual(x, t);
        if (ft < rho) {
          rho = ft;
          y = t;
          moved = true;
          break;
        }
      }
    }
    if (!moved) step *= 0.5;
  }
  return y;
}

}  // namespace

AubrySample WeakKam::partner(const Vec& x) const {
  const int d = S_.dim();
  if (x.size() != d) throw Error(ErrorKind::invalid_argument, "base point has wrong dimension");
  const WeakKamEstimate ind = indicator(x);
  if (!(ind.value <= opts_.indicator_tol)) {
    throw Error(ErrorKind::not_in_aubry, "indicator pi(x,x) = " + std::to_string(ind.value) + " above tolerance");
  }
  constexpr double kExact = 1e-13;
  std::vector<PolishedPartner> found;
  const double Mb = partner_bound();
  int res = opts_.partner_grid;
  if (res < 0) res = d == 1 ? 64 : d == 2 ? 12 : 6;
  const double h = res > 1 ? 2.0 * Mb / (res - 1) : 0.05;

  if (ind.witness && ind.witness->segment.points.size() >= 2) {
    const Vec yw = ind.witness->segment.points[1];
    double rho = partner_residual(x, yw);
    found.push_back({yw, rho, true});
    if (rho > kExact && res == 0) {
      const Vec yp = golden_or_compass(*this, x, yw, std::min(h, 0.05), opts_.partner_tol, rho);
      if (rho < found.back().rho) found.push_back({yp, rho, false});
    }
  }
  if (res > 0) {
    std::vector<int> dims(static_cast<std::size_t>(d), res);
    std::size_t total = 1;
    for (int k = 0; k < d; ++k) total *= static_cast<std::size_t>(res);
    std::vector<double> rho(total);
    auto node = [&](const std::vector<int>& m) {
      Vec y(d);
      for (int k = 0; k < d; ++k) y[k] = x[k] - Mb + m[static_cast<std::size_t>(k)] * h;
      return y;
    };
    for (std::size_t i = 0; i < total; ++i) rho[i] = partner_residual(x, node(axis_index(dims, i)));
    std::vector<std::pair<double, std::size_t>> minima;
    for (std::size_t i = 0; i < total; ++i) {
      const auto m = axis_index(dims, i);
      bool local = true;
      std::size_t stride = 1;
      for (int k = d - 1; k >= 0 && local; --k) {
        const int mk = m[static_cast<std::size_t>(k)];
        if (mk > 0 && rho[i - stride] < rho[i]) local = false;
        if (mk + 1 < res && rho[i + stride] < rho[i]) local = false;
        stride *= static_cast<std::size_t>(res);
      }
      if (local) minima.emplace_back(rho[i], i);
    }
    std::sort(minima.begin(), minima.end());
    if (minima.size() > 8) minima.resize(8);
    for (const auto& [r0, i] : minima) {
      double rv = r0;
      const Vec y0 = node(axis_index(dims, i));
      const Vec yp = rv > kExact ? golden_or_compass(*this, x, y0, h, opts_.partner_tol, rv) : y0;
      found.push_back({yp, rv, false});
    }
  }
  if (found.empty()) throw NoConvergence("aubry_partner: no candidate partner");

  auto best = std::min_element(found.begin(), found.end(),
                               [](const PolishedPartner& a, const PolishedPartner& b) { return a.rho < b.rho; });
  // The witness step comes from a converged Newton solve and is more accurate
  // than residual polishing; keep it when it is the same partner and ties.
  for (const auto& f : found) {
    if (f.from_witness && (f.y - best->y).norm() <= opts_.ambiguity_separation &&
        f.rho <= best->rho + opts_.ambiguity_tol) {
      best = std::find_if(found.begin(), found.end(), [](const PolishedPartner& q) { return q.from_witness; });
    }
  }
  for (const auto& f : found) {
    if ((f.y - best->y).norm() > opts_.ambiguity_separation && f.rho <= best->rho + opts_.ambiguity_tol) {
      throw Error(ErrorKind::ambiguous_partner, "two partners with equal residual");
    }
  }
  AubrySample out;
  out.x = x;
  out.y = best->y;
  out.p = -S_.d1(x, out.y);
  out.residuals = residuals(x, out.y);
  out.indicator = ind.value;
  return out;
}

LagrangianGraph WeakKam::dual_graph(const TorusGrid& grid) const {
  if (grid.dim() != S_.dim() || grid.size() == 0) throw Error(ErrorKind::invalid_argument, "grid");
  WeakKam local = *this;
  if (local.opts_.partner_grid < 0) local.opts_.partner_grid = 0;
  LagrangianGraph g;
  g.grid = grid;
  g.c = c_;
  g.p.assign(grid.size(), Vec::Zero(S_.dim()));
  g.status.assign(grid.size(), CellStatus::ok);
  g.residual.assign(grid.size(), 0.0);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    try {
      const AubrySample s = local.partner(grid.point(i));
      g.p[i] = s.p;
      g.residual[i] = s.residuals.action_identity + s.residuals.antisymmetry;
    } catch (const Error& e) {
      g.status[i] = e.kind() == ErrorKind::not_in_aubry        ? CellStatus::absent
                    : e.kind() == ErrorKind::ambiguous_partner ? CellStatus::ambiguous
                                                               : CellStatus::solver_failed;
    }
  }
  compute_graph_audits(g);
  double inv = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (g.status[i] != CellStatus::ok) continue;
    try {
      const PhasePoint img = twist_map(S_, PhasePoint{grid.point(i), g.p[i]}, 1);
      if (const auto q = g.evaluate(img.x)) inv = std::max(inv, (*q - img.p).norm());
    } catch (const Error&) {
      inv = std::numeric_limits<double>::infinity();
    }
  }
  g.audits.invariance = inv;
  return g;
}

AubrySample aubry_partner(const GeneratingFunction& S, const Vec& c, const Vec& x, Truncation trunc,
                          const WeakKamOptions& opts) {
  return WeakKam(S, c, trunc, default_probe_grid(S.dim()), opts).partner(x);
}

LagrangianGraph dual_aubry_graph(const GeneratingFunction& S, const Vec& c, const TorusGrid& grid, Truncation trunc,
                                 const WeakKamOptions& opts) {
  return WeakKam(S, c, trunc, default_probe_grid(S.dim()), opts).dual_graph(grid);
}

AlphaProfile alpha_profile(const GeneratingFunction& S, const std::vector<Vec>& c_grid, Truncation trunc,
                           const TorusGrid& probe, const WeakKamOptions& opts) {
  AlphaProfile out;
  out.truncation_allowance = 1.0 / trunc.N_max;
  for (const Vec& c : c_grid) {
    const WeakKamEstimate e = stilde(S, c, trunc, probe, opts);
    AlphaEntry a;
    a.c = c;
    a.alpha = -e.value;
    if (e.witness) {
      a.N_at = e.witness->n;
      a.r_at = e.witness->r;
    }
    out.entries.push_back(a);
  }
  double worst = -std::numeric_limits<double>::infinity();
  const std::size_t n = out.entries.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const Vec mid = 0.5 * (out.entries[i].c + out.entries[j].c);
      for (std::size_t k = 0; k < n; ++k) {
        if ((out.entries[k].c - mid).cwiseAbs().maxCoeff() > 1e-12) continue;
        worst = std::max(worst, out.entries[k].alpha - 0.5 * (out.entries[i].alpha + out.entries[j].alpha));
        ++out.convexity_triples;
      }
    }
  }
  out.convexity_violation = out.convexity_triples > 0 ? worst : 0.0;
  std::vector<std::pair<double, double>> ratio;
  for (const auto& e : out.entries) {
    const double nc = e.c.norm();
    if (nc > 0.0) ratio.emplace_back(nc, e.alpha / nc);
  }
  std::stable_sort(ratio.begin(), ratio.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  for (const auto& [nc, q] : ratio) out.superlinearity.push_back(q);
  return out;
}

PotentialAudit potential_audits(const WeakKam& wk, const std::vector<Triple>& triples,
                                const std::vector<AubrySample>& aubry) {
  PotentialAudit a;
  a.triangle_min = std::numeric_limits<double>::infinity();
  a.calibration_min = std::numeric_limits<double>::infinity();
  for (const Triple& t : triples) {
    const double pxy = wk.mane(t.x, t.y).value;
    const double pyz = wk.mane(t.y, t.z).value;
    const double pxz = wk.mane(t.x, t.z).value;
    const double pyx = wk.mane(t.y, t.x).value;
    a.triangle_min = std::min(a.triangle_min, pxy + pyz - pxz);
    a.additivity_max = std::max(a.additivity_max, std::abs(pxz - pxy - pyz));
    a.antisymmetry_max = std::max(a.antisymmetry_max, std::abs(pxy + pyx));
    Vec dyz = t.y - t.z;
    for (int i = 0; i < dyz.size(); ++i) dyz[i] -= std::round(dyz[i]);
    if (dyz.norm() > 1e-12) a.lipschitz = std::max(a.lipschitz, std::abs(pxy - pxz) / dyz.norm());
    ++a.triples;
  }
  if (a.triples == 0) a.triangle_min = 0.0;
  a.partner_bound = wk.partner_bound();
  const GeneratingFunction& Sc = wk.twisted();
  for (const AubrySample& s : aubry) {
    const Vec z = shift(wk.base(), s.x, s.y);
    const double defect = Sc.value(s.x, s.y) + Sc.value(s.y, z) - Sc.value(s.x, z);
    a.calibration_min = std::min(a.calibration_min, wk.stilde().value - defect);
    a.partner_displacement_max = std::max(a.partner_displacement_max, (s.y - s.x).norm());
    ++a.aubry_samples;
  }
  if (a.aubry_samples == 0) a.calibration_min = 0.0;
  return a;
}

}  // namespace twistkam
