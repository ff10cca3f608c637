#pragma once

#include "twistkam/types.hpp"

#include <vector>

namespace twistkam {

/// Symmetric block-tridiagonal matrix with n blocks of size d:
/// diag[k] on the diagonal, upper[k] = H(k, k+1), H(k+1, k) = upper[k]^T.
struct BlockTridiagonal {
  std::vector<Mat> diag;
  std::vector<Mat> upper;

  int blocks() const { return static_cast<int>(diag.size()); }
  int block_size() const { return diag.empty() ? 0 : static_cast<int>(diag.front().rows()); }
  Mat to_dense() const;
  Vec multiply(const Vec& v) const;
};

/// Block LDL^T factorization by forward block elimination:
/// D_0 = H_00, D_k = H_kk - H_{k,k-1} D_{k-1}^{-1} H_{k-1,k}.
/// The matrix is positive definite iff every pivot block D_k is.
class BlockLdlt {
 public:
  explicit BlockLdlt(const BlockTridiagonal& H);

  bool positive_definite() const { return positive_definite_; }
  bool ok() const { return ok_; }
  /// Solves H s = rhs by forward elimination and back substitution.
  Vec solve(const Vec& rhs) const;

 private:
  int n_ = 0;
  int d_ = 0;
  std::vector<Mat> pivots_inv_;
  std::vector<Mat> lower_;  // L_k = H_{k,k-1} D_{k-1}^{-1}, k >= 1
  bool positive_definite_ = true;
  bool ok_ = true;
};

}  // namespace twistkam
