#pragma once

// The twist map F(x,p) = (x',p') <=> p = -D1 S(x,x'), p' = D2 S(x,x'),
// the shift phi(x0,x1) = (x1,x2) on extremal sequences, the conjugacy
// L(x,y) = (x, -D1 S(x,y)), tangent maps, conjugate-point scans and
// Green-bundle slopes.

#include "twistkam/genfun.hpp"
#include "twistkam/types.hpp"

#include <optional>
#include <string>
#include <vector>

namespace twistkam {

struct SolverOptions {
  double tolerance = 1e-11;  // on the residual norm
  int max_iter = 100;
};

/// Solves D1 S(x, y) + p = 0 for y.
Vec fiber_solve(const GeneratingFunction& S, const Vec& x, const Vec& p, const SolverOptions& opts = {});

/// Solves D2 S(x, y) = p_next for x (the inverse-map fiber equation).
Vec fiber_solve_backward(const GeneratingFunction& S, const Vec& y, const Vec& p_next,
                         const SolverOptions& opts = {});

/// x2 with D2 S(x0, x1) + D1 S(x1, x2) = 0.
Vec shift(const GeneratingFunction& S, const Vec& x0, const Vec& x1, const SolverOptions& opts = {});

/// x0 with D2 S(x0, x1) + D1 S(x1, x2) = 0.
Vec shift_backward(const GeneratingFunction& S, const Vec& x1, const Vec& x2, const SolverOptions& opts = {});

/// L(x, y) = (x, -D1 S(x, y)).
PhasePoint lagrangian_lift(const GeneratingFunction& S, const Vec& x, const Vec& y);

/// n-th iterate of the lifted twist map; negative n iterates the inverse.
PhasePoint twist_map(const GeneratingFunction& S, const PhasePoint& pt, int n, const SolverOptions& opts = {});

/// Orbit (pt, F(pt), ..., F^n(pt)); n may be negative.
std::vector<PhasePoint> orbit(const GeneratingFunction& S, const PhasePoint& pt, int n,
                              const SolverOptions& opts = {});

/// Differential of F in (dx, dp) block coordinates.
struct TangentBlock {
  Mat J;  // 2d x 2d

  /// max-norm of J^T Omega J - Omega.
  double symplectic_residual() const;
};

TangentBlock tangent(const GeneratingFunction& S, const PhasePoint& pt, const SolverOptions& opts = {});

/// Tangent block of F at a point whose image x' is already known.
Mat tangent_at(const GeneratingFunction& S, const Vec& x, const Vec& x_next);

/// Standard symplectic form matrix [[0, I], [-I, 0]].
Mat symplectic_form(int d);

/// Box of phase points: x in [x_lo, x_hi)^d, p in [p_lo, p_hi]^d.
struct PhaseRegion {
  double x_lo = 0.0;
  double x_hi = 1.0;
  double p_lo = -1.0;
  double p_hi = 1.0;
  int x_resolution = 16;
  int p_resolution = 16;

  std::size_t size(int d) const;
  PhasePoint point(int d, std::size_t index) const;
  /// Neighbour index along axis (0..2d-1) with step +1, or nullopt at the box edge.
  std::optional<std::size_t> next(int d, std::size_t index, int axis) const;
};

struct ConjugateSample {
  PhasePoint pt;
  int n = 0;                 // signed: negative for the backward direction
  double min_singular = 0.0;  // smallest singular value of the dx block M_n
  double basis_norm = 0.0;   // spectral norm of the pushed vertical basis
  double det = 0.0;          // det M_n (sign is meaningful)
  bool degenerate = false;
  bool refined = false;      // located by bisection between grid nodes
};

struct ConjugateReport {
  std::vector<ConjugateSample> samples;
  /// per |n| = 1..n_max, min over grid and directions of min_singular / basis_norm
  std::vector<double> min_relative_singular;
  std::optional<int> first_degenerate_n;  // signed n of the first degeneracy
  std::optional<PhasePoint> location;
  int n_max = 0;
  double threshold = 0.0;
  std::string certificate;
};

ConjugateReport conjugate_scan(const GeneratingFunction& S, const PhaseRegion& region, int n_max,
                               double threshold = 1e-8);

struct GreenSlope {
  int n_iter = 0;
  Mat slope;          // G_n
  double gap = 0.0;   // ||G_n - G_{n/2}||, NaN when n_iter < 2
  double asymmetry = 0.0;
};

/// Pushes the vertical at F^{-n}(pt) forward n steps and writes the image as
/// {(dx, G dx)}. Throws NotTransverse when the image is not a graph over dx.
GreenSlope green_slope(const GeneratingFunction& S, const PhasePoint& pt, int n_iter, double threshold = 1e-8);

/// Diagnostic for the divergence test: ||D(pi o F^{-n}) v|| for n = 1..n_max,
/// v a tangent vector (dx, dp) at pt.
std::vector<double> backward_projection_growth(const GeneratingFunction& S, const PhasePoint& pt,
                                               const Vec& v, int n_max);

}  // namespace twistkam
