#pragma once

#include "twistkam/types.hpp"

#include <cstddef>
#include <vector>

namespace twistkam {

/// Regular product grid. Nodes are lo + i*(hi-lo)/res along each axis,
/// i = 0..res-1, so the upper bound is excluded. When hi - lo == 1 on every
/// axis the grid is a periodic sampling of the torus.
class TorusGrid {
 public:
  TorusGrid() = default;
  TorusGrid(int dim, int resolution, double lo = 0.0, double hi = 1.0);
  TorusGrid(std::vector<int> resolution, Vec lo, Vec hi);

  int dim() const { return static_cast<int>(res_.size()); }
  std::size_t size() const { return size_; }
  const std::vector<int>& resolution() const { return res_; }
  const Vec& lo() const { return lo_; }
  const Vec& hi() const { return hi_; }
  Vec spacing() const;
  bool periodic() const;

  /// Multi-index of a flat index; axis 0 varies slowest.
  std::vector<int> unflatten(std::size_t index) const;
  std::size_t flatten(const std::vector<int>& multi) const;
  Vec point(std::size_t index) const;
  /// Flat index of the neighbour along axis with periodic wrap (step = +-1).
  std::size_t neighbour(std::size_t index, int axis, int step) const;

  bool same_as(const TorusGrid& other) const;

 private:
  std::vector<int> res_;
  Vec lo_;
  Vec hi_;
  std::size_t size_ = 0;
};

}  // namespace twistkam
