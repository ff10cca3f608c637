#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace twistkam {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using IVec = Eigen::VectorXi;

/// Cotangent point (x, p) on the universal cover R^d x (R^d)*.
struct PhasePoint {
  Vec x;
  Vec p;
};

/// Deterministic 64-bit mixing (splitmix64 finalizer). Used to derive
/// per-task RNG seeds so results do not depend on evaluation order.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t v) {
  return mix64(seed ^ (v + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2)));
}

std::uint64_t hash_vec(std::uint64_t seed, const Vec& v);
std::uint64_t hash_ivec(std::uint64_t seed, const IVec& v);

/// Reduce every coordinate into [0, 1).
Vec wrap_unit(const Vec& x);

/// Enumerate all integer vectors with ||r||_inf <= radius, lexicographic order.
std::vector<IVec> lattice_box(int dim, int radius);

}  // namespace twistkam
