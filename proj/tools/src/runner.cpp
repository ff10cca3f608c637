#include "twistkam_cli/runner.hpp"

#include "twistkam/action.hpp"
#include "twistkam/dynamics.hpp"
#include "twistkam/errors.hpp"
#include "twistkam/invariant_graphs.hpp"
#include "twistkam/weakkam.hpp"
#include "twistkam_cli/output.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <map>
#include <random>

namespace twistkam::cli {

namespace fs = std::filesystem;
using nlohmann::json;

json RunReport::to_json() const {
  json j;
  j["command"] = command;
  j["seed"] = seed ? json(*seed) : json(nullptr);
  j["wall_time"] = wall_time;
  j["exit_code"] = exit_code;
  if (!error.empty()) j["error"] = error;
  j["checks"] = json::array();
  for (const auto& c : checks) {
    j["checks"].push_back({{"name", c.name},
                           {"value", std::isfinite(c.value) ? json(c.value) : json(format_double(c.value))},
                           {"bound", c.bound},
                           {"relation", c.relation},
                           {"passed", c.passed}});
  }
  j["files"] = json::array();
  for (const auto& f : files) j["files"].push_back({{"path", f.path}, {"sha256", f.sha256}});
  j["summary"] = summary;
  return j;
}

namespace {

json to_json(const Vec& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(std::isfinite(v[i]) ? json(v[i]) : json(format_double(v[i])));
  return a;
}

json to_json(const IVec& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

json to_json(const Mat& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) rows.push_back(to_json(Vec(m.row(i).transpose())));
  return rows;
}

json finite_or_string(double v) { return std::isfinite(v) ? json(v) : json(format_double(v)); }

std::vector<std::string> axis_headers(const std::string& prefix, int d) {
  std::vector<std::string> h;
  for (int i = 1; i <= d; ++i) h.push_back(prefix + "_" + std::to_string(i));
  return h;
}

void append(std::vector<Cell>& row, const Vec& v) {
  for (int i = 0; i < v.size(); ++i) row.emplace_back(v[i]);
}

void append(std::vector<Cell>& row, const IVec& v) {
  for (int i = 0; i < v.size(); ++i) row.emplace_back(static_cast<long long>(v[i]));
}

class Context {
 public:
  Context(const ExperimentConfig& cfg, RunReport& report) : cfg_(cfg), report_(report), dir_(cfg.output.dir) {}

  const ExperimentConfig& cfg() const { return cfg_; }
  int dim() const { return cfg_.genfun.dim; }

  void check(const std::string& name, double value, const std::string& relation, double bound) {
    bool ok = false;
    if (relation == "<=") ok = value <= bound;
    if (relation == ">=") ok = value >= bound;
    if (relation == "<") ok = value < bound;
    if (relation == ">") ok = value > bound;
    report_.checks.push_back({name, value, bound, relation, ok});
  }

  void table(const std::string& stem, const Table& t) { record(write_table(dir_, stem, t, cfg_.output.format)); }

  void summary(const json& j) {
    report_.summary = j;
    record(write_json(dir_, "summary.json", j));
  }

  std::uint64_t seed_or_throw(const std::string& why) const {
    if (!cfg_.seed) throw ConfigError("seed is required for " + why);
    return *cfg_.seed;
  }

  MinimizeOptions minimize_options(Params& p) const {
    MinimizeOptions o;
    o.multistart = p.integer("multistart", o.multistart);
    if (o.multistart < 0) throw ConfigError("params.multistart must be >= 0");
    o.perturbation = p.positive("perturbation", o.perturbation);
    o.grad_tol = p.positive("grad_tol", o.grad_tol);
    o.max_iter = p.integer("max_iter", o.max_iter);
    if (o.max_iter < 1) throw ConfigError("params.max_iter must be >= 1");
    if (o.multistart > 0) o.seed = seed_or_throw("multistart minimization");
    return o;
  }

  WeakKamOptions weakkam_options(Params& p) const {
    WeakKamOptions o;
    o.minimize = minimize_options(p);
    o.indicator_tol = p.positive("indicator_tol", o.indicator_tol);
    o.ambiguity_tol = p.positive("ambiguity_tol", o.ambiguity_tol);
    o.partner_grid = p.integer("partner_grid", o.partner_grid);
    o.polish_cycles = p.flag("polish_cycles", o.polish_cycles);
    return o;
  }

  Truncation truncation(Params& p) const {
    Truncation t;
    t.N_max = p.integer("N_max", t.N_max);
    t.R_max = p.integer("R_max", t.R_max);
    if (t.N_max < 1 || t.R_max < 0) throw ConfigError("need N_max >= 1 and R_max >= 0");
    return t;
  }

  int positive_int(Params& p, const std::string& key, std::optional<int> fallback = std::nullopt) const {
    const int v = p.integer(key, fallback);
    if (v < 1) throw ConfigError("params." + key + " must be >= 1");
    return v;
  }

 private:
  void record(const std::string& name) { report_.files.push_back({name, sha256_file(dir_ / name)}); }

  const ExperimentConfig& cfg_;
  RunReport& report_;
  fs::path dir_;
};

Table graph_table(const LagrangianGraph& g) {
  const int d = g.dim();
  Table t;
  t.headers = axis_headers("x", d);
  for (const auto& h : axis_headers("p", d)) t.headers.push_back(h);
  t.headers.push_back("residual");
  t.headers.push_back("status");
  for (std::size_t i = 0; i < g.size(); ++i) {
    std::vector<Cell> row;
    append(row, g.grid.point(i));
    append(row, g.p[i]);
    row.emplace_back(g.residual[i]);
    row.emplace_back(std::string(to_string(g.status[i])));
    t.add(std::move(row));
  }
  return t;
}

json graph_audits_json(const LagrangianGraph& g) {
  json j;
  j["max_residual"] = finite_or_string(g.audits.max_residual);
  j["asymmetry"] = g.audits.asymmetry;
  j["asymmetry_coarse"] = g.audits.asymmetry_coarse;
  j["lipschitz"] = g.audits.lipschitz;
  j["average_momentum"] = to_json(g.audits.average_momentum);
  j["invariance"] = finite_or_string(g.audits.invariance);
  j["failed_cells"] = g.audits.failed_cells;
  j["cells"] = g.size();
  return j;
}

json estimate_json(const WeakKamEstimate& e) {
  json j;
  j["value"] = finite_or_string(e.value);
  j["kind"] = to_string(e.kind);
  j["N_max"] = e.truncation.N_max;
  j["R_max"] = e.truncation.R_max;
  j["grid_resolution"] = e.grid_resolution;
  j["truncation_allowance"] = e.truncation_allowance;
  j["evaluated"] = e.evaluated;
  if (e.witness) {
    j["witness"] = {{"n", e.witness->n}, {"r", to_json(e.witness->r)}};
    json pts = json::array();
    for (const auto& x : e.witness->segment.points) pts.push_back(to_json(x));
    j["witness"]["segment"] = pts;
  }
  return j;
}

// ---------------------------------------------------------------- commands

void cmd_audit(Context& ctx, Params& p) {
  const int samples = ctx.positive_int(p, "samples", 256);
  p.finish();
  const std::uint64_t seed = ctx.seed_or_throw("the audit sample set");
  const GeneratingFunction S(ctx.cfg().genfun);
  const AuditReport r = audit_report(S, samples, seed);
  json j;
  j["family"] = to_string(S.family());
  j["d"] = S.dim();
  j["n_samples"] = r.n_samples;
  j["periodicity_residual"] = r.periodicity_residual;
  j["twist_lower_bound"] = r.twist_lower_bound;
  j["coercivity"] = {{"alpha", r.coercivity.alpha},
                     {"beta", r.coercivity.beta},
                     {"gamma", r.coercivity.gamma},
                     {"worst_violation", r.coercivity.worst_violation},
                     {"alpha_lower", r.coercivity.alpha_lower}};
  j["passed"] = r.passed;
  ctx.summary(j);
  ctx.check("twist_lower_bound", r.twist_lower_bound, ">", 0.0);
  ctx.check("periodicity_residual", r.periodicity_residual, "<=", 1e-9);
  if (ctx.cfg().genfun.twist_constant_hint) {
    ctx.check("twist_constant_hint", r.twist_lower_bound, ">=", *ctx.cfg().genfun.twist_constant_hint);
  }
}

void cmd_orbit(Context& ctx, Params& p, const GeneratingFunction& S) {
  const int d = S.dim();
  const Vec x = p.vec("x");
  const Vec pm = p.vec("p");
  const int n = p.integer("n");
  const int samples = p.integer("conjugacy_samples", 0);
  const double tol = p.positive("conjugacy_tol", 1e-9);
  p.finish();
  if (samples < 0) throw ConfigError("params.conjugacy_samples must be >= 0");
  const auto orb = orbit(S, PhasePoint{x, pm}, n);
  Table t;
  t.headers = {"k"};
  for (const auto& h : axis_headers("x", d)) t.headers.push_back(h);
  for (const auto& h : axis_headers("p", d)) t.headers.push_back(h);
  const int sgn = n < 0 ? -1 : 1;
  for (std::size_t k = 0; k < orb.size(); ++k) {
    std::vector<Cell> row{static_cast<long long>(sgn * static_cast<long long>(k))};
    append(row, orb[k].x);
    append(row, orb[k].p);
    t.add(std::move(row));
  }
  ctx.table("orbit", t);
  const double symp = tangent(S, PhasePoint{x, pm}).symplectic_residual();
  json j;
  j["steps"] = n;
  j["final"] = {{"x", to_json(orb.back().x)}, {"p", to_json(orb.back().p)}};
  j["symplectic_residual"] = symp;
  ctx.check("symplectic_residual", symp, "<=", 1e-8);
  if (samples > 0) {
    std::mt19937_64 rng(ctx.seed_or_throw("conjugacy sampling"));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> step(-1.0, 1.0);
    double worst = 0.0;
    for (int s = 0; s < samples; ++s) {
      Vec a(d);
      Vec b(d);
      for (int i = 0; i < d; ++i) {
        a[i] = unit(rng);
        b[i] = a[i] + step(rng);
      }
      const PhasePoint lhs = twist_map(S, lagrangian_lift(S, a, b), 1);
      const PhasePoint rhs = lagrangian_lift(S, b, shift(S, a, b));
      Vec diff(2 * d);
      diff << lhs.x - rhs.x, lhs.p - rhs.p;
      worst = std::max(worst, diff.norm());
    }
    j["conjugacy_residual"] = worst;
    j["conjugacy_samples"] = samples;
    ctx.check("conjugacy_residual", worst, "<=", tol);
  }
  ctx.summary(j);
}

void cmd_conjugate_scan(Context& ctx, Params& p, const GeneratingFunction& S) {
  const int d = S.dim();
  PhaseRegion region;
  region.x_lo = p.number("x_lo", region.x_lo);
  region.x_hi = p.number("x_hi", region.x_hi);
  region.p_lo = p.number("p_lo", region.p_lo);
  region.p_hi = p.number("p_hi", region.p_hi);
  region.x_resolution = ctx.positive_int(p, "x_resolution", region.x_resolution);
  region.p_resolution = ctx.positive_int(p, "p_resolution", region.p_resolution);
  const int n_max = ctx.positive_int(p, "n_max");
  const double threshold = p.positive("threshold", 1e-8);
  const auto expect = p.optional_string("expect");
  const int expect_within = p.integer("expect_within", n_max);
  p.finish();
  if (expect && *expect != "none" && *expect != "found") throw ConfigError("params.expect must be none or found");
  if (!(region.x_hi > region.x_lo) || !(region.p_hi >= region.p_lo)) throw ConfigError("empty phase region");

  const ConjugateReport rep = conjugate_scan(S, region, n_max, threshold);
  Table t;
  t.headers = axis_headers("x", d);
  for (const auto& h : axis_headers("p", d)) t.headers.push_back(h);
  for (const char* h : {"n", "min_singular_value", "degenerate"}) t.headers.emplace_back(h);
  int degenerate = 0;
  for (const auto& s : rep.samples) {
    std::vector<Cell> row;
    append(row, s.pt.x);
    append(row, s.pt.p);
    row.emplace_back(static_cast<long long>(s.n));
    row.emplace_back(s.min_singular);
    row.emplace_back(static_cast<long long>(s.degenerate ? 1 : 0));
    if (s.degenerate) ++degenerate;
    t.add(std::move(row));
  }
  ctx.table("conjugate", t);
  json j;
  j["n_max"] = rep.n_max;
  j["threshold"] = rep.threshold;
  j["degenerate_samples"] = degenerate;
  j["certificate"] = rep.certificate;
  j["min_relative_singular"] = json::array();
  for (double v : rep.min_relative_singular) j["min_relative_singular"].push_back(v);
  if (rep.first_degenerate_n) j["first_degenerate_n"] = *rep.first_degenerate_n;
  if (rep.location) j["location"] = {{"x", to_json(rep.location->x)}, {"p", to_json(rep.location->p)}};
  ctx.summary(j);
  if (expect == "none") ctx.check("degenerate_samples", degenerate, "<=", 0.0);
  if (expect == "found") {
    const double at = rep.first_degenerate_n ? std::abs(*rep.first_degenerate_n) : INFINITY;
    ctx.check("first_degenerate_abs_n", at, "<=", expect_within);
  }
}

void cmd_green(Context& ctx, Params& p, const GeneratingFunction& S) {
  const int d = S.dim();
  const Vec x = p.vec("x");
  const Vec pm = p.vec("p");
  const std::vector<int> ns = p.int_list("n_iter");
  const double threshold = p.positive("threshold", 1e-8);
  p.finish();
  for (int n : ns) {
    if (n < 1) throw ConfigError("params.n_iter entries must be >= 1");
  }
  Table t;
  t.headers = {"n", "gap", "asymmetry"};
  for (int i = 1; i <= d; ++i) {
    for (int k = 1; k <= d; ++k) t.headers.push_back("slope_" + std::to_string(i) + "_" + std::to_string(k));
  }
  json rows = json::array();
  for (int n : ns) {
    const GreenSlope g = green_slope(S, PhasePoint{x, pm}, n, threshold);
    std::vector<Cell> row{static_cast<long long>(n), g.gap, g.asymmetry};
    for (int i = 0; i < d; ++i) {
      for (int k = 0; k < d; ++k) row.emplace_back(g.slope(i, k));
    }
    t.add(std::move(row));
    rows.push_back({{"n", n}, {"slope", to_json(g.slope)}, {"gap", finite_or_string(g.gap)}});
  }
  ctx.table("green", t);
  ctx.summary(json{{"slopes", rows}});
}

void cmd_minimize(Context& ctx, Params& p, const GeneratingFunction& S) {
  const int d = S.dim();
  const Vec x = p.vec("x");
  const Vec y = p.vec("y");
  const int N = ctx.positive_int(p, "N");
  const MinimizeOptions opts = ctx.minimize_options(p);
  p.finish();
  const MinimizeResult m = minimize_endpoints(S, x, y, N, opts);
  Table t;
  t.headers = {"k"};
  for (const auto& h : axis_headers("x", d)) t.headers.push_back(h);
  for (std::size_t k = 0; k < m.segment.points.size(); ++k) {
    std::vector<Cell> row{static_cast<long long>(k)};
    append(row, m.segment.points[k]);
    t.add(std::move(row));
  }
  ctx.table("segment", t);
  ctx.summary({{"value", m.value},
               {"grad_norm", m.grad_norm},
               {"status", m.status == MinimizeStatus::minimum ? "minimum" : "saddle_detected"},
               {"newton_iters", m.newton_iters},
               {"multistart_count", m.multistart_count},
               {"converged_starts", m.converged_starts},
               {"min_hessian_eig", finite_or_string(m.min_hessian_eig)}});
}

void cmd_f_profile(Context& ctx, Params& p, const GeneratingFunction& S) {
  const int d = S.dim();
  const int N = ctx.positive_int(p, "N");
  const IVec r = p.ivec("r", IVec::Zero(d));
  const TorusGrid grid = p.grid("grid", 64);
  const auto above = p.optional_number("assert_gap_above");
  const auto below = p.optional_number("assert_gap_below");
  const MinimizeOptions opts = ctx.minimize_options(p);
  p.finish();
  const FProfile f = f_profile(S, N, r, grid, opts);
  Table t;
  t.headers = axis_headers("x", d);
  t.headers.emplace_back("f_value");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    std::vector<Cell> row;
    append(row, grid.point(i));
    row.emplace_back(f.values[i]);
    t.add(std::move(row));
  }
  ctx.table("f_profile", t);
  ctx.summary({{"gap", f.gap},
               {"argmax", to_json(grid.point(f.argmax))},
               {"argmin", to_json(grid.point(f.argmin))},
               {"max", f.values[f.argmax]},
               {"min", f.values[f.argmin]},
               {"N", N},
               {"r", to_json(r)}});
  if (above) ctx.check("gap", f.gap, ">=", *above);
  if (below) ctx.check("gap", f.gap, "<=", *below);
}

void cmd_periodic(Context& ctx, Params& p, const GeneratingFunction& S) {
  const Vec x = p.vec("x");
  const int N = ctx.positive_int(p, "N");
  const IVec r = p.ivec("r");
  const auto below = p.optional_number("assert_residual_below");
  const MinimizeOptions opts = ctx.minimize_options(p);
  p.finish();
  const PeriodicFiber f = periodic_fiber(S, x, N, r, opts);
  json pts = json::array();
  for (const auto& v : f.segment.points) pts.push_back(to_json(v));
  ctx.summary({{"x", to_json(x)},
               {"N", N},
               {"r", to_json(r)},
               {"p", to_json(f.p)},
               {"residual", f.residual},
               {"translation_residual", f.translation_residual},
               {"action", f.segment.action},
               {"segment", pts}});
  if (below) ctx.check("residual", f.residual, "<=", *below);
}

void cmd_graph(Context& ctx, Params& p, const GeneratingFunction& S) {
  const int N = ctx.positive_int(p, "N");
  const IVec r = p.ivec("r");
  const TorusGrid grid = p.grid("grid", S.dim() == 1 ? 64 : 16);
  const auto res_below = p.optional_number("assert_residual_below");
  const auto asym_below = p.optional_number("assert_asymmetry_below");
  const MinimizeOptions opts = ctx.minimize_options(p);
  p.finish();
  const LagrangianGraph g = build_graph(S, N, r, grid, opts);
  ctx.table("graph", graph_table(g));
  json j = graph_audits_json(g);
  j["N"] = N;
  j["r"] = to_json(r);
  ctx.summary(j);
  if (res_below) ctx.check("max_residual", g.audits.max_residual, "<=", *res_below);
  if (asym_below) ctx.check("asymmetry", g.audits.asymmetry, "<=", *asym_below);
}

void cmd_alpha(Context& ctx, Params& p, const GeneratingFunction& S) {
  const int d = S.dim();
  const std::vector<Vec> cs = p.vec_list("c_grid");
  const Truncation trunc = ctx.truncation(p);
  const TorusGrid probe = p.grid("probe", default_probe_grid(d).resolution().front());
  const auto conv = p.optional_number("assert_convexity_below");
  const WeakKamOptions opts = ctx.weakkam_options(p);
  p.finish();
  const AlphaProfile a = alpha_profile(S, cs, trunc, probe, opts);
  Table t;
  t.headers = axis_headers("c", d);
  t.headers.emplace_back("alpha");
  t.headers.emplace_back("N_at");
  if (d == 1) {
    t.headers.emplace_back("r_at");
  } else {
    for (const auto& h : axis_headers("r_at", d)) t.headers.push_back(h);
  }
  for (const auto& e : a.entries) {
    std::vector<Cell> row;
    append(row, e.c);
    row.emplace_back(e.alpha);
    row.emplace_back(static_cast<long long>(e.N_at));
    append(row, e.r_at.size() == d ? e.r_at : IVec(IVec::Zero(d)));
    t.add(std::move(row));
  }
  ctx.table("alpha", t);
  json sl = json::array();
  for (double v : a.superlinearity) sl.push_back(v);
  ctx.summary({{"convexity_violation", a.convexity_violation},
               {"convexity_triples", a.convexity_triples},
               {"superlinearity", sl},
               {"truncation_allowance", a.truncation_allowance},
               {"N_max", trunc.N_max},
               {"R_max", trunc.R_max}});
  if (conv) ctx.check("convexity_violation", a.convexity_violation, "<=", *conv);
}

void cmd_mane(Context& ctx, Params& p, const GeneratingFunction& S) {
  const int d = S.dim();
  const Vec c = p.vec("c", Vec(Vec::Zero(d)));
  const Truncation trunc = ctx.truncation(p);
  const TorusGrid probe = p.grid("probe", default_probe_grid(d).resolution().front());
  const bool pair = p.has("x") || p.has("y");
  Vec x;
  Vec y;
  TorusGrid grid;
  if (pair) {
    x = p.vec("x");
    y = p.vec("y");
  } else {
    grid = p.grid("grid", d == 1 ? 16 : 4);
  }
  const int triples = p.integer("triples", 0);
  const auto tri_above = p.optional_number("assert_triangle_above");
  const WeakKamOptions opts = ctx.weakkam_options(p);
  p.finish();
  if (triples < 0) throw ConfigError("params.triples must be >= 0");
  const WeakKam wk(S, c, trunc, probe, opts);
  Table t;
  t.headers = axis_headers("x", d);
  for (const auto& h : axis_headers("y", d)) t.headers.push_back(h);
  t.headers.emplace_back("value");
  t.headers.emplace_back("n");
  for (const auto& h : axis_headers("r", d)) t.headers.push_back(h);
  auto emit = [&](const Vec& a, const Vec& b) {
    const WeakKamEstimate e = wk.mane(a, b);
    std::vector<Cell> row;
    append(row, a);
    append(row, b);
    row.emplace_back(e.value);
    row.emplace_back(static_cast<long long>(e.witness ? e.witness->n : 0));
    append(row, e.witness ? e.witness->r : IVec(IVec::Zero(d)));
    t.add(std::move(row));
    return e;
  };
  json j;
  j["stilde"] = estimate_json(wk.stilde());
  if (pair) {
    j["mane"] = estimate_json(emit(x, y));
  } else {
    for (std::size_t i = 0; i < grid.size(); ++i) {
      for (std::size_t k = 0; k < grid.size(); ++k) emit(grid.point(i), grid.point(k));
    }
  }
  ctx.table("mane", t);
  if (triples > 0) {
    std::mt19937_64 rng(ctx.seed_or_throw("triple sampling"));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<Triple> ts;
    for (int s = 0; s < triples; ++s) {
      Triple tr{Vec(d), Vec(d), Vec(d)};
      for (int i = 0; i < d; ++i) {
        tr.x[i] = unit(rng);
        tr.y[i] = unit(rng);
        tr.z[i] = unit(rng);
      }
      ts.push_back(tr);
    }
    const PotentialAudit a = potential_audits(wk, ts);
    j["audits"] = {{"triangle_min", a.triangle_min},
                   {"additivity_max", a.additivity_max},
                   {"antisymmetry_max", a.antisymmetry_max},
                   {"lipschitz", a.lipschitz},
                   {"partner_bound", a.partner_bound},
                   {"triples", a.triples}};
    if (tri_above) ctx.check("triangle_min", a.triangle_min, ">=", *tri_above);
  }
  ctx.summary(j);
}

void cmd_aubry(Context& ctx, Params& p, const GeneratingFunction& S) {
  const int d = S.dim();
  const Vec c = p.vec("c", Vec(Vec::Zero(d)));
  const Truncation trunc = ctx.truncation(p);
  const TorusGrid probe = p.grid("probe", default_probe_grid(d).resolution().front());
  const bool single = p.has("x");
  Vec x;
  TorusGrid grid;
  if (single) {
    x = p.vec("x");
  } else {
    grid = p.grid("grid", d == 1 ? 64 : 16);
  }
  const WeakKamOptions opts = ctx.weakkam_options(p);
  p.finish();
  const WeakKam wk(S, c, trunc, probe, opts);
  json j;
  j["stilde"] = estimate_json(wk.stilde());
  j["c"] = to_json(c);
  Table t;
  t.headers = axis_headers("x", d);
  for (const auto& h : axis_headers("p", d)) t.headers.push_back(h);
  t.headers.emplace_back("status");
  t.headers.emplace_back("residuals");
  if (single) {
    const AubrySample s = wk.partner(x);
    j["sample"] = {{"x", to_json(s.x)},
                   {"y", to_json(s.y)},
                   {"p", to_json(s.p)},
                   {"indicator", s.indicator},
                   {"action_identity_res", s.residuals.action_identity},
                   {"antisymmetry_res", s.residuals.antisymmetry}};
    std::vector<Cell> row;
    append(row, s.x);
    append(row, s.p);
    row.emplace_back(std::string("ok"));
    row.emplace_back(s.residuals.action_identity + s.residuals.antisymmetry);
    t.add(std::move(row));
  } else {
    const LagrangianGraph g = wk.dual_graph(grid);
    for (std::size_t i = 0; i < g.size(); ++i) {
      std::vector<Cell> row;
      append(row, grid.point(i));
      append(row, g.p[i]);
      row.emplace_back(std::string(to_string(g.status[i])));
      row.emplace_back(g.residual[i]);
      t.add(std::move(row));
    }
    j["audits"] = graph_audits_json(g);
  }
  ctx.table("dual_aubry", t);
  ctx.summary(j);
}

void cmd_foliation(Context& ctx, Params& p, const GeneratingFunction& S) {
  const int d = S.dim();
  const Vec x = p.vec("x");
  const std::vector<Vec> cs = p.vec_list("c_grid");
  const Truncation trunc = ctx.truncation(p);
  const bool monotone = p.flag("assert_monotone", false);
  const bool injective = p.flag("assert_injective", false);
  const WeakKamOptions opts = ctx.weakkam_options(p);
  p.finish();
  const FoliationSection f = foliation_section(S, x, cs, trunc, opts);
  Table t;
  t.headers = axis_headers("c", d);
  for (const auto& h : axis_headers("p", d)) t.headers.push_back(h);
  t.headers.emplace_back("indicator");
  json statuses = json::array();
  for (const auto& e : f.entries) {
    std::vector<Cell> row;
    append(row, e.c);
    append(row, e.p);
    row.emplace_back(e.indicator);
    t.add(std::move(row));
    statuses.push_back(to_string(e.status));
  }
  ctx.table("foliation", t);
  ctx.summary({{"x", to_json(x)},
               {"injectivity_gap", finite_or_string(f.injectivity_gap)},
               {"monotonicity_violation", f.monotonicity_violation},
               {"coercivity_slope", f.coercivity_slope},
               {"continuity_modulus", f.continuity_modulus},
               {"failed", f.failed},
               {"status", statuses}});
  if (monotone) ctx.check("monotonicity_violation", f.monotonicity_violation, "<=", 1e-9);
  if (injective) ctx.check("injectivity_gap", f.injectivity_gap, ">", 0.0);
}

void cmd_crosscheck(Context& ctx, Params& p, const GeneratingFunction& S) {
  const int d = S.dim();
  const int N = ctx.positive_int(p, "N");
  const IVec r = p.ivec("r");
  const TorusGrid grid = p.grid("grid", d == 1 ? 64 : 16);
  const Truncation trunc = ctx.truncation(p);
  const TorusGrid probe = p.grid("probe", default_probe_grid(d).resolution().front());
  const bool refine = p.flag("refine", true);
  const auto match_below = p.optional_number("assert_match_below");
  const WeakKamOptions opts = ctx.weakkam_options(p);
  p.finish();

  const LagrangianGraph gamma = build_graph(S, N, r, grid, opts.minimize);
  ctx.table("graph_periodic", graph_table(gamma));
  const Vec cbar = graph_cohomology(gamma);
  const LagrangianGraph aubry = WeakKam(S, cbar, trunc, probe, opts).dual_graph(grid);
  ctx.table("graph_dual_aubry", graph_table(aubry));
  const GraphDistance dist = compare_graphs(gamma, aubry);
  json j;
  j["N"] = N;
  j["r"] = to_json(r);
  j["cohomology"] = to_json(cbar);
  j["match_distance"] = dist.sup;
  j["min_distance"] = dist.inf;
  j["common_cells"] = dist.common_cells;
  j["periodic_graph"] = graph_audits_json(gamma);
  j["dual_aubry_graph"] = graph_audits_json(aubry);
  j["truncation_allowance"] = 1.0 / trunc.N_max;
  if (refine && trunc.N_max >= 2) {
    Truncation coarse = trunc;
    coarse.N_max = trunc.N_max / 2;
    const LagrangianGraph a2 = WeakKam(S, cbar, coarse, probe, opts).dual_graph(grid);
    const double coarse_dist = compare_graphs(gamma, a2).sup;
    j["coarse_N_max"] = coarse.N_max;
    j["coarse_match_distance"] = coarse_dist;
    ctx.check("refinement_monotone", dist.sup - coarse_dist, "<=", 1e-12);
  }
  ctx.summary(j);
  if (match_below) ctx.check("match_distance", dist.sup, "<=", *match_below);
}

int exit_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_argument:
    case ErrorKind::unknown_family:
      return exit_invalid_config;
    case ErrorKind::no_convergence:
    case ErrorKind::not_transverse:
      return exit_no_convergence;
    default:
      return exit_property_failed;
  }
}

}  // namespace

RunReport run(const ExperimentConfig& cfg) {
  RunReport report;
  report.command = cfg.command;
  report.seed = cfg.seed;
  const auto start = std::chrono::steady_clock::now();
  bool dir_ok = true;
  try {
    fs::create_directories(cfg.output.dir);
  } catch (const std::exception& e) {
    report.exit_code = exit_invalid_config;
    report.error = std::string("cannot create output directory: ") + e.what();
    dir_ok = false;
  }
  if (dir_ok) {
    try {
      Context ctx(cfg, report);
      Params params(cfg.params, cfg.genfun.dim);
      if (cfg.command == "audit") {
        cmd_audit(ctx, params);
      } else {
        static const std::map<std::string, std::function<void(Context&, Params&, const GeneratingFunction&)>>
            table{{"orbit", cmd_orbit},         {"conjugate-scan", cmd_conjugate_scan},
                  {"green", cmd_green},         {"minimize", cmd_minimize},
                  {"f-profile", cmd_f_profile}, {"periodic", cmd_periodic},
                  {"graph", cmd_graph},         {"alpha", cmd_alpha},
                  {"mane", cmd_mane},           {"aubry", cmd_aubry},
                  {"foliation", cmd_foliation}, {"crosscheck", cmd_crosscheck}};
        const GeneratingFunction S = make_family(cfg.genfun);
        table.at(cfg.command)(ctx, params, S);
      }
      for (const auto& c : report.checks) {
        if (!c.passed) report.exit_code = exit_property_failed;
      }
    } catch (const ConfigError& e) {
      report.exit_code = exit_invalid_config;
      report.error = e.what();
    } catch (const Error& e) {
      report.exit_code = exit_for(e.kind());
      report.error = e.what();
    } catch (const std::exception& e) {
      report.exit_code = exit_internal;
      report.error = e.what();
    }
  }
  report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (dir_ok) {
    try {
      write_json(cfg.output.dir, "report.json", report.to_json());
    } catch (const std::exception& e) {
      if (report.exit_code == exit_ok) report.exit_code = exit_internal;
      report.error = e.what();
    }
  }
  return report;
}

RunReport run_document(const json& doc) {
  ExperimentConfig cfg;
  try {
    cfg = parse_config(doc);
  } catch (const ConfigError& e) {
    RunReport r;
    r.command = doc.is_object() && doc.contains("command") && doc["command"].is_string()
                    ? doc["command"].get<std::string>()
                    : "";
    r.exit_code = exit_invalid_config;
    r.error = e.what();
    return r;
  }
  return run(cfg);
}

}  // namespace twistkam::cli
