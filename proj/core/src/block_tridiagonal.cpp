#include "twistkam/block_tridiagonal.hpp"

#include <cmath>

namespace twistkam {

Mat BlockTridiagonal::to_dense() const {
  const int n = blocks();
  const int d = block_size();
  Mat H = Mat::Zero(n * d, n * d);
  for (int k = 0; k < n; ++k) {
    H.block(k * d, k * d, d, d) = diag[static_cast<std::size_t>(k)];
    if (k + 1 < n) {
      H.block(k * d, (k + 1) * d, d, d) = upper[static_cast<std::size_t>(k)];
      H.block((k + 1) * d, k * d, d, d) = upper[static_cast<std::size_t>(k)].transpose();
    }
  }
  return H;
}

Vec BlockTridiagonal::multiply(const Vec& v) const {
  const int n = blocks();
  const int d = block_size();
  Vec out = Vec::Zero(n * d);
  for (int k = 0; k < n; ++k) {
    out.segment(k * d, d) += diag[static_cast<std::size_t>(k)] * v.segment(k * d, d);
    if (k + 1 < n) {
      out.segment(k * d, d) += upper[static_cast<std::size_t>(k)] * v.segment((k + 1) * d, d);
      out.segment((k + 1) * d, d) += upper[static_cast<std::size_t>(k)].transpose() * v.segment(k * d, d);
    }
  }
  return out;
}

BlockLdlt::BlockLdlt(const BlockTridiagonal& H) : n_(H.blocks()), d_(H.block_size()) {
  pivots_inv_.reserve(static_cast<std::size_t>(n_));
  lower_.reserve(static_cast<std::size_t>(n_));
  Mat pivot = H.diag.empty() ? Mat() : H.diag.front();
  for (int k = 0; k < n_; ++k) {
    if (k > 0) {
      const Mat& coupling = H.upper[static_cast<std::size_t>(k - 1)];  // H_{k-1,k}
      const Mat L = coupling.transpose() * pivots_inv_.back();
      pivot = H.diag[static_cast<std::size_t>(k)] - L * coupling;
      lower_.push_back(L);
    }
    const Mat sym = 0.5 * (pivot + pivot.transpose());
    Eigen::LLT<Mat> llt(sym);
    if (llt.info() != Eigen::Success) positive_definite_ = false;
    Eigen::FullPivLU<Mat> lu(pivot);
    if (!lu.isInvertible()) {
      ok_ = false;
      positive_definite_ = false;
      pivots_inv_.push_back(Mat::Zero(d_, d_));
    } else {
      pivots_inv_.push_back(lu.inverse());
    }
  }
}

Vec BlockLdlt::solve(const Vec& rhs) const {
  Vec w = rhs;
  for (int k = 1; k < n_; ++k) {
    w.segment(k * d_, d_) -= lower_[static_cast<std::size_t>(k - 1)] * w.segment((k - 1) * d_, d_);
  }
  Vec s(n_ * d_);
  for (int k = 0; k < n_; ++k) {
    s.segment(k * d_, d_) = pivots_inv_[static_cast<std::size_t>(k)] * w.segment(k * d_, d_);
  }
  for (int k = n_ - 2; k >= 0; --k) {
    s.segment(k * d_, d_) -= lower_[static_cast<std::size_t>(k)].transpose() * s.segment((k + 1) * d_, d_);
  }
  return s;
}

}  // namespace twistkam
