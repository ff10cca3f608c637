#pragma once

// Sampled sections x -> p(x) of T*T^d over a regular torus grid.

#include "twistkam/grid.hpp"
#include "twistkam/types.hpp"

#include <optional>
#include <string>
#include <vector>

namespace twistkam {

enum class CellStatus { ok, solver_failed, absent, ambiguous };

const char* to_string(CellStatus status);

struct GraphAudits {
  double max_residual = 0.0;     // worst per-cell residual over ok cells
  double asymmetry = 0.0;        // max |dp_i/dx_j - dp_j/dx_i|, step one cell
  double asymmetry_coarse = 0.0;  // same with step two cells
  double lipschitz = 0.0;        // max |dp_i/dx_j| from the same differences
  Vec average_momentum;          // mean of p over ok cells
  double invariance = 0.0;       // dual Aubry graphs: image of a sample vs interpolated graph
  int failed_cells = 0;          // cells whose status is not ok
};

struct LagrangianGraph {
  TorusGrid grid;
  std::vector<Vec> p;
  std::vector<CellStatus> status;
  std::vector<double> residual;
  std::optional<int> N;
  std::optional<IVec> r;
  std::optional<Vec> c;
  GraphAudits audits;

  int dim() const { return grid.dim(); }
  std::size_t size() const { return grid.size(); }
  /// Multilinear interpolation at x (taken mod Z^d); nullopt when a corner
  /// cell is not ok.
  std::optional<Vec> evaluate(const Vec& x) const;
};

/// Fills asymmetry, Lipschitz estimate, average momentum, failed count and
/// max residual from the stored samples.
void compute_graph_audits(LagrangianGraph& g);

}  // namespace twistkam
