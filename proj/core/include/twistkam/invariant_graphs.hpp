#pragma once

// Periodic fibers F^N(x, p) = (x + r, p), the invariant graphs they sweep out
// over a torus grid, cohomology classes of graphs and the foliation section
// c -> p(c) at a fixed base point.

#include "twistkam/action.hpp"
#include "twistkam/genfun.hpp"
#include "twistkam/grid.hpp"
#include "twistkam/lagrangian_graph.hpp"
#include "twistkam/weakkam.hpp"

#include <vector>

namespace twistkam {

struct PeriodicFiber {
  Vec p;
  double residual = 0.0;              // |F^N(x, p) - (x + r, p)|
  double translation_residual = 0.0;  // |x_{2N} - (x_N + r)| after extending the segment
  Segment segment;
};

PeriodicFiber periodic_fiber(const GeneratingFunction& S, const Vec& x, int N, const IVec& r,
                             const MinimizeOptions& opts = {});

/// Periodic fiber per grid cell. Throws graph_rejected when more than 1% of
/// the cells fail.
LagrangianGraph build_graph(const GeneratingFunction& S, int N, const IVec& r, const TorusGrid& grid,
                            const MinimizeOptions& opts = {});

/// Grid average of p. Throws not_lagrangian when the asymmetry audit exceeds
/// 1e-4 * max(1, Lipschitz estimate).
Vec graph_cohomology(const LagrangianGraph& g);

struct GraphDistance {
  double sup = 0.0;
  double inf = 0.0;
  int common_cells = 0;
};

/// Distances over cells that are ok in both graphs. Throws grid_mismatch.
GraphDistance compare_graphs(const LagrangianGraph& a, const LagrangianGraph& b);

struct FoliationEntry {
  Vec c;
  Vec p;
  double indicator = 0.0;
  CellStatus status = CellStatus::ok;
};

struct FoliationSection {
  Vec x;
  std::vector<FoliationEntry> entries;
  double injectivity_gap = 0.0;         // min over ok pairs of |p(c) - p(c')|
  double monotonicity_violation = 0.0;  // d = 1: max decrease of p along increasing c
  double coercivity_slope = 0.0;        // least-squares slope of |p| against |c|
  double continuity_modulus = 0.0;      // max |p(c) - p(c')| / |c - c'| over nearest neighbours
  int failed = 0;
};

FoliationSection foliation_section(const GeneratingFunction& S, const Vec& x, const std::vector<Vec>& c_grid,
                                   Truncation trunc, const WeakKamOptions& opts = {});

}  // namespace twistkam
