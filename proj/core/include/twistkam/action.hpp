#pragma once

// Action sums, fixed-endpoint minimization A_N(x, y), extremal sequences and
// the Busemann observables of the periodic-orbit construction.

#include "twistkam/block_tridiagonal.hpp"
#include "twistkam/genfun.hpp"
#include "twistkam/grid.hpp"
#include "twistkam/types.hpp"

#include <cstdint>
#include <vector>

namespace twistkam {

struct Segment {
  std::vector<Vec> points;  // x_0 .. x_n
  double action = 0.0;

  int steps() const { return static_cast<int>(points.size()) - 1; }
};

enum class MinimizeStatus { minimum, saddle_detected };

struct MinimizeOptions {
  int multistart = 16;         // random perturbations on top of the linear seed
  double perturbation = 0.5;   // half-width of the uniform perturbation per coordinate
  int hops = 8;                // perturbations of the best minimum, when multistart > 0
  std::uint64_t seed = 0;
  double grad_tol = 1e-9;
  int max_iter = 200;          // per start
  int max_box_enlargements = 3;
  double psd_tol = 1e-8;
};

struct MinimizeResult {
  Segment segment;
  double value = 0.0;  // A_N(x, y)
  double grad_norm = 0.0;
  int newton_iters = 0;
  int multistart_count = 0;
  int converged_starts = 0;
  double min_hessian_eig = 0.0;  // only meaningful for N >= 2
  MinimizeStatus status = MinimizeStatus::minimum;
};

double action_sum(const GeneratingFunction& S, const std::vector<Vec>& points);

/// Gradient of S(x_0, .., x_N) with respect to the interior points.
Vec action_gradient(const GeneratingFunction& S, const std::vector<Vec>& points);

/// Block-tridiagonal Hessian of the fixed-endpoint action: diagonal blocks
/// D22(x_{k-1}, x_k) + D11(x_k, x_{k+1}), off-diagonal D12(x_k, x_{k+1}).
BlockTridiagonal action_hessian(const GeneratingFunction& S, const std::vector<Vec>& points);

/// A_N(x, y) with its minimizing segment.
MinimizeResult minimize_endpoints(const GeneratingFunction& S, const Vec& x, const Vec& y, int N,
                                  const MinimizeOptions& opts = {});

/// Local minimization of the closed-cycle action over (x_0, .., x_{N-1}) with
/// x_N = x_0 + r held as a lattice translate of x_0. Starts from `seed`
/// (N + 1 points); returns the seed unchanged when no descent is possible.
Segment polish_cycle(const GeneratingFunction& S, const Segment& seed, double grad_tol = 1e-10, int max_iter = 100);

/// Extremal sequence x_{-n_minus} .. x_{n_plus} through (x_0, x_1) = (x0, x1).
std::vector<Vec> extend_extremal(const GeneratingFunction& S, const Vec& x0, const Vec& x1, int n_minus, int n_plus);

/// max over interior k of ||D2S(x_{k-1}, x_k) + D1S(x_k, x_{k+1})||.
double extremal_residual(const GeneratingFunction& S, const std::vector<Vec>& points);

struct TriangleGap {
  double gap = 0.0;               // A_N(x,y) + A_N'(y,z) - A_{N+N'}(x,z)
  double distance_to_split = 0.0;  // ||y - w_N||, w the minimizer from x to z
};

TriangleGap triangle_gap(const GeneratingFunction& S, const Vec& x, const Vec& y, const Vec& z, int N, int N2,
                         const MinimizeOptions& opts = {});

struct FProfile {
  TorusGrid grid;
  std::vector<double> values;  // f(x) = A_N(x, x + r) per grid node
  double gap = 0.0;            // max - min
  std::size_t argmax = 0;
  std::size_t argmin = 0;
};

FProfile f_profile(const GeneratingFunction& S, int N, const IVec& r, const TorusGrid& grid,
                   const MinimizeOptions& opts = {});

}  // namespace twistkam
