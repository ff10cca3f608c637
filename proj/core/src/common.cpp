#include "twistkam/errors.hpp"
#include "twistkam/grid.hpp"
#include "twistkam/types.hpp"

#include <cmath>
#include <cstring>

namespace twistkam {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_argument: return "invalid_argument";
    case ErrorKind::unknown_family: return "unknown_family";
    case ErrorKind::audit_failed: return "audit_failed";
    case ErrorKind::no_convergence: return "no_convergence";
    case ErrorKind::not_transverse: return "not_transverse";
    case ErrorKind::not_in_aubry: return "not_in_aubry";
    case ErrorKind::ambiguous_partner: return "ambiguous_partner";
    case ErrorKind::not_lagrangian: return "not_lagrangian";
    case ErrorKind::grid_mismatch: return "grid_mismatch";
    case ErrorKind::graph_rejected: return "graph_rejected";
  }
  return "unknown";
}

std::uint64_t hash_vec(std::uint64_t seed, const Vec& v) {
  std::uint64_t h = hash_combine(seed, static_cast<std::uint64_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    double value = v[i] == 0.0 ? 0.0 : v[i];  // fold -0.0 into +0.0
    std::uint64_t bits = 0;
    std::memcpy(&bits, &value, sizeof bits);
    h = hash_combine(h, bits);
  }
  return h;
}

std::uint64_t hash_ivec(std::uint64_t seed, const IVec& v) {
  std::uint64_t h = hash_combine(seed, static_cast<std::uint64_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    h = hash_combine(h, static_cast<std::uint64_t>(static_cast<std::int64_t>(v[i])));
  }
  return h;
}

Vec wrap_unit(const Vec& x) {
  Vec out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) out[i] = x[i] - std::floor(x[i]);
  return out;
}

std::vector<IVec> lattice_box(int dim, int radius) {
  std::vector<IVec> out;
  if (dim <= 0 || radius < 0) return out;
  const int side = 2 * radius + 1;
  std::size_t total = 1;
  for (int k = 0; k < dim; ++k) total *= static_cast<std::size_t>(side);
  out.reserve(total);
  for (std::size_t idx = 0; idx < total; ++idx) {
    IVec r(dim);
    std::size_t rem = idx;
    for (int k = dim - 1; k >= 0; --k) {
      r[k] = static_cast<int>(rem % side) - radius;
      rem /= side;
    }
    out.push_back(r);
  }
  return out;
}

TorusGrid::TorusGrid(int dim, int resolution, double lo, double hi)
    : TorusGrid(std::vector<int>(static_cast<std::size_t>(dim > 0 ? dim : 0), resolution),
                Vec::Constant(dim > 0 ? dim : 0, lo), Vec::Constant(dim > 0 ? dim : 0, hi)) {}

TorusGrid::TorusGrid(std::vector<int> resolution, Vec lo, Vec hi)
    : res_(std::move(resolution)), lo_(std::move(lo)), hi_(std::move(hi)) {
  if (res_.empty() || static_cast<Eigen::Index>(res_.size()) != lo_.size() ||
      lo_.size() != hi_.size()) {
    throw Error(ErrorKind::invalid_argument, "grid dimensions are inconsistent");
  }
  size_ = 1;
  for (std::size_t k = 0; k < res_.size(); ++k) {
    if (res_[k] < 1) throw Error(ErrorKind::invalid_argument, "grid resolution must be >= 1");
    if (!(hi_[static_cast<Eigen::Index>(k)] > lo_[static_cast<Eigen::Index>(k)])) {
      throw Error(ErrorKind::invalid_argument, "grid bounds must satisfy lo < hi");
    }
    size_ *= static_cast<std::size_t>(res_[k]);
  }
}

Vec TorusGrid::spacing() const {
  Vec h(dim());
  for (int k = 0; k < dim(); ++k) h[k] = (hi_[k] - lo_[k]) / res_[static_cast<std::size_t>(k)];
  return h;
}

bool TorusGrid::periodic() const {
  for (int k = 0; k < dim(); ++k) {
    if (std::abs(hi_[k] - lo_[k] - 1.0) > 1e-14) return false;
  }
  return true;
}

std::vector<int> TorusGrid::unflatten(std::size_t index) const {
  std::vector<int> multi(res_.size());
  for (int k = dim() - 1; k >= 0; --k) {
    const auto r = static_cast<std::size_t>(res_[static_cast<std::size_t>(k)]);
    multi[static_cast<std::size_t>(k)] = static_cast<int>(index % r);
    index /= r;
  }
  return multi;
}

std::size_t TorusGrid::flatten(const std::vector<int>& multi) const {
  std::size_t index = 0;
  for (std::size_t k = 0; k < res_.size(); ++k) {
    index = index * static_cast<std::size_t>(res_[k]) + static_cast<std::size_t>(multi[k]);
  }
  return index;
}

Vec TorusGrid::point(std::size_t index) const {
  const auto multi = unflatten(index);
  Vec x(dim());
  for (int k = 0; k < dim(); ++k) {
    x[k] = lo_[k] + (hi_[k] - lo_[k]) * multi[static_cast<std::size_t>(k)] /
                        res_[static_cast<std::size_t>(k)];
  }
  return x;
}

std::size_t TorusGrid::neighbour(std::size_t index, int axis, int step) const {
  auto multi = unflatten(index);
  const int r = res_[static_cast<std::size_t>(axis)];
  int& m = multi[static_cast<std::size_t>(axis)];
  m = ((m + step) % r + r) % r;
  return flatten(multi);
}

bool TorusGrid::same_as(const TorusGrid& other) const {
  if (res_ != other.res_) return false;
  return (lo_ - other.lo_).cwiseAbs().maxCoeff() <= 1e-15 &&
         (hi_ - other.hi_).cwiseAbs().maxCoeff() <= 1e-15;
}

}  // namespace twistkam
