#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <sstream>
#include <string>
#include <utility>
#include <variant>

#include "maxent/errors.hpp"

namespace maxent {

struct DenseSource {};

struct Dct2Source {
  std::size_t side;
  std::size_t keep;
};

struct AcfSource {
  std::size_t nfft;
  std::size_t order;
};

using MapSource = std::variant<DenseSource, Dct2Source, AcfSource>;

/// Full-rank N x M feature map W with M < N; features are z = W^T x.
/// Immutable once built.
class LinearMap {
 public:
  /// Validates shape and numerical rank (smallest singular value at least
  /// 1e-10 times the largest).
  static LinearMap from_matrix(Eigen::MatrixXd w, MapSource source = DenseSource{}) {
    if (w.cols() < 1 || w.rows() <= w.cols()) {
      throw ShapeError("feature map must be N x M with N > M >= 1, got " +
                       std::to_string(w.rows()) + " x " + std::to_string(w.cols()));
    }
    if (!w.allFinite()) throw ShapeError("feature map has non-finite entries");
    Eigen::BDCSVD<Eigen::MatrixXd> svd(w);
    const auto& sv = svd.singularValues();
    if (!(sv(sv.size() - 1) >= 1e-10 * sv(0))) {
      std::ostringstream msg;
      msg << "feature map is rank-deficient: singular value ratio "
          << sv(sv.size() - 1) / sv(0) << " below 1e-10";
      throw RankError(msg.str());
    }
    return LinearMap(std::move(w), std::move(source));
  }

  const Eigen::MatrixXd& matrix() const { return w_; }
  Eigen::Index n() const { return w_.rows(); }
  Eigen::Index m() const { return w_.cols(); }
  const MapSource& source() const { return source_; }

  Eigen::VectorXd features(const Eigen::VectorXd& x) const {
    if (x.size() != n()) throw ShapeError("input length does not match map rows");
    return w_.transpose() * x;
  }

 private:
  LinearMap(Eigen::MatrixXd w, MapSource source)
      : w_(std::move(w)), source_(std::move(source)) {}

  Eigen::MatrixXd w_;
  MapSource source_;
};

/// Orthonormal N x (N - M) basis of the orthogonal complement of range(W).
struct NullBasis {
  Eigen::MatrixXd b;
};

inline LinearMap dense_map(Eigen::MatrixXd matrix) {
  return LinearMap::from_matrix(std::move(matrix), DenseSource{});
}

/// Orthonormal 2-D DCT-II restricted to the lowest keep x keep frequencies.
/// Images are flattened row-major (pixel (r, c) at r * side + c) and column
/// u * keep + v holds basis image (u, v), so W^T x are the retained
/// coefficients.
inline LinearMap dct2_map(std::size_t side, std::size_t keep) {
  if (keep < 1 || keep >= side) {
    throw ShapeError("dct2_map requires 1 <= keep < side, got keep=" +
                     std::to_string(keep) + " side=" + std::to_string(side));
  }
  const auto n = static_cast<Eigen::Index>(side);
  Eigen::MatrixXd c(static_cast<Eigen::Index>(keep), n);
  for (Eigen::Index k = 0; k < c.rows(); ++k) {
    const double scale = std::sqrt((k == 0 ? 1.0 : 2.0) / static_cast<double>(side));
    for (Eigen::Index t = 0; t < n; ++t) {
      c(k, t) = scale * std::cos(std::numbers::pi * static_cast<double>((2 * t + 1) * k) /
                                 (2.0 * static_cast<double>(side)));
    }
  }
  Eigen::MatrixXd w(n * n, c.rows() * c.rows());
  for (Eigen::Index u = 0; u < c.rows(); ++u) {
    for (Eigen::Index v = 0; v < c.rows(); ++v) {
      const Eigen::Index col = u * c.rows() + v;
      for (Eigen::Index r = 0; r < n; ++r) {
        w.col(col).segment(r * n, n) = c(u, r) * c.row(v).transpose();
      }
    }
  }
  return LinearMap::from_matrix(std::move(w), Dct2Source{side, keep});
}

/// Maps the first nfft/2 + 1 magnitude-squared DFT bins of a real signal to
/// its circular autocorrelation lags 0..order, r_k = (1/nfft) sum_t s_t s_{t+k}.
/// Bins 0 and nfft/2 get weight 1, the conjugate-pair bins between them 2.
inline LinearMap acf_map(std::size_t nfft, std::size_t order) {
  if (nfft < 4 || nfft % 2 != 0) {
    throw ShapeError("acf_map requires an even nfft >= 4, got " + std::to_string(nfft));
  }
  const std::size_t n = nfft / 2 + 1;
  if (order + 1 >= n) {
    throw ShapeError("acf_map requires order + 1 < nfft/2 + 1, got order=" +
                     std::to_string(order));
  }
  const double nf = static_cast<double>(nfft);
  Eigen::MatrixXd w(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(order + 1));
  for (std::size_t i = 0; i < n; ++i) {
    const double weight = (i == 0 || i == n - 1) ? 1.0 : 2.0;
    for (std::size_t k = 0; k <= order; ++k) {
      const double phase = 2.0 * std::numbers::pi * static_cast<double>((i * k) % nfft) / nf;
      w(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
          weight / (nf * nf) * std::cos(phase);
    }
  }
  return LinearMap::from_matrix(std::move(w), AcfSource{nfft, order});
}

/// Complement basis from the trailing columns of the full Q of a
/// column-pivoted Householder QR of W.
inline NullBasis nullspace_basis(const LinearMap& map) {
  const auto& w = map.matrix();
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(w);
  if (qr.rank() != w.cols()) {
    throw NumericalError("QR of the feature map found rank " + std::to_string(qr.rank()) +
                         ", expected " + std::to_string(w.cols()));
  }
  Eigen::MatrixXd q = qr.householderQ();
  return NullBasis{q.rightCols(w.rows() - w.cols())};
}

}  // namespace maxent
