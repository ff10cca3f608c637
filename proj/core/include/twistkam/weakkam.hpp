#pragma once

// Discrete weak KAM quantities of S_c(x, y) = S(x, y) + c.(x - y): the
// minimizing holonomic value, the Mather alpha function, the Mane potential,
// Aubry samples and the dual Aubry graph. Every infimum over step counts and
// lattice shifts is truncated to n <= N_max, |r|_inf <= R_max.

#include "twistkam/action.hpp"
#include "twistkam/genfun.hpp"
#include "twistkam/grid.hpp"
#include "twistkam/lagrangian_graph.hpp"
#include "twistkam/types.hpp"

#include <optional>
#include <vector>

namespace twistkam {

struct Truncation {
  int N_max = 6;
  int R_max = 2;
};

enum class EstimateKind { stilde, alpha, mane, aubry_indicator };

const char* to_string(EstimateKind kind);

struct Witness {
  int n = 0;
  IVec r;
  Segment segment;  // under S_c
};

struct WeakKamEstimate {
  double value = 0.0;
  EstimateKind kind = EstimateKind::stilde;
  Truncation truncation;
  int grid_resolution = 0;  // probe grid points per axis, 0 if unused
  std::optional<Witness> witness;
  double truncation_allowance = 0.0;  // order-of-magnitude bound 1/N_max
  int evaluated = 0;                  // (n, r) pairs that were not pruned
};

struct WeakKamOptions {
  MinimizeOptions minimize;
  bool polish_cycles = true;      // refine the probe-grid optimum over the base point
  double indicator_tol = 1e-2;    // Aubry membership threshold on pi(x, x)
  double ambiguity_tol = 1e-8;    // residual gap below which two partners tie
  double ambiguity_separation = 1e-3;
  int partner_grid = -1;          // coarse partner search per axis; -1 auto, 0 witness only
  double partner_tol = 1e-11;     // polishing tolerance on the partner position
};

struct AubryResiduals {
  double action_identity = 0.0;  // |S_c(x,y) - stilde - pi(x,y)|
  double antisymmetry = 0.0;     // |pi(x,y) + pi(y,x)|
};

struct AubrySample {
  Vec x;
  Vec y;
  Vec p;  // -D1 S(x, y)
  AubryResiduals residuals;
  double indicator = 0.0;  // truncated pi(x, x)
};

GeneratingFunction twist_by_cocycle(const GeneratingFunction& S, const Vec& c);

/// Default probe grid: 16 points for d = 1, 8 per axis for d = 2, 4 beyond.
TorusGrid default_probe_grid(int dim);

/// Weak KAM computations for one (S, c, truncation). The minimizing holonomic
/// value is computed once at construction.
class WeakKam {
 public:
  WeakKam(const GeneratingFunction& S, const Vec& c, Truncation trunc, const TorusGrid& probe,
          WeakKamOptions opts = {});

  const GeneratingFunction& base() const { return S_; }
  const GeneratingFunction& twisted() const { return Sc_; }
  const Vec& cohomology() const { return c_; }
  const Truncation& truncation() const { return trunc_; }
  const WeakKamOptions& options() const { return opts_; }
  const WeakKamEstimate& stilde() const { return stilde_; }

  WeakKamEstimate mane(const Vec& x, const Vec& y) const;
  WeakKamEstimate indicator(const Vec& x) const;
  /// rho(y) = |S_c(x,y) - stilde - pi(x,y)| + |pi(x,y) + pi(y,x)|.
  double partner_residual(const Vec& x, const Vec& y) const;
  /// Displacement bound for Aubry pairs, |y - x| <= bound (sampled, not proven).
  double partner_bound() const;
  AubrySample partner(const Vec& x) const;
  LagrangianGraph dual_graph(const TorusGrid& grid) const;

 private:
  AubryResiduals residuals(const Vec& x, const Vec& y) const;

  GeneratingFunction S_;
  GeneratingFunction Sc_;
  Vec c_;
  Truncation trunc_;
  TorusGrid probe_;
  WeakKamOptions opts_;
  WeakKamEstimate stilde_;
  mutable std::optional<double> partner_bound_;
};

WeakKamEstimate stilde(const GeneratingFunction& S, const Vec& c, Truncation trunc, const TorusGrid& probe,
                       const WeakKamOptions& opts = {});

/// min over n <= N_max and shifts r of A_n(x, y + r) - n * stilde_value under
/// S_c. The shifts range over |r - r0|_inf <= R_max where y + r0 is the
/// translate of y nearest to x; the witness records the total shift r.
WeakKamEstimate mane(const GeneratingFunction& S, const Vec& c, const Vec& x, const Vec& y, Truncation trunc,
                     double stilde_value, const WeakKamOptions& opts = {});

AubrySample aubry_partner(const GeneratingFunction& S, const Vec& c, const Vec& x, Truncation trunc,
                          const WeakKamOptions& opts = {});

LagrangianGraph dual_aubry_graph(const GeneratingFunction& S, const Vec& c, const TorusGrid& grid, Truncation trunc,
                                 const WeakKamOptions& opts = {});

struct AlphaEntry {
  Vec c;
  double alpha = 0.0;
  int N_at = 0;
  IVec r_at;
};

struct AlphaProfile {
  std::vector<AlphaEntry> entries;
  double convexity_violation = 0.0;  // worst alpha(mid) - (alpha(c1) + alpha(c2))/2 over grid midpoints
  int convexity_triples = 0;
  std::vector<double> superlinearity;  // alpha(c)/|c| in increasing |c|, c != 0
  double truncation_allowance = 0.0;
};

AlphaProfile alpha_profile(const GeneratingFunction& S, const std::vector<Vec>& c_grid, Truncation trunc,
                           const TorusGrid& probe, const WeakKamOptions& opts = {});

struct Triple {
  Vec x;
  Vec y;
  Vec z;
};

struct PotentialAudit {
  double triangle_min = 0.0;      // min of pi(x,y) + pi(y,z) - pi(x,z)
  double additivity_max = 0.0;    // max |pi(x,z) - pi(x,y) - pi(y,z)|
  double antisymmetry_max = 0.0;  // max |pi(x,y) + pi(y,x)|
  double calibration_min = 0.0;   // min of stilde - [S_c(x,y) + S_c(y,z) - S_c(x,z)] over Aubry samples
  double partner_bound = 0.0;
  double partner_displacement_max = 0.0;
  double lipschitz = 0.0;         // max |pi(x,y) - pi(x,z)| / |y - z| over triples
  int triples = 0;
  int aubry_samples = 0;
};

/// Audits over sampled triples; `aubry` samples supply (x, y) pairs whose
/// successor z = shift(x, y) enters the calibration bound.
PotentialAudit potential_audits(const WeakKam& wk, const std::vector<Triple>& triples,
                                const std::vector<AubrySample>& aubry = {});

}  // namespace twistkam
