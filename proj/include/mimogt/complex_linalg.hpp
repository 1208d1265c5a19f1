#pragma once

// Complex Gaussian sampling and orthonormal nullspace bases. Eigen provides
// storage and the column-pivoted Householder QR; nothing else is exposed.

#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <utility>

#include <Eigen/Dense>

#include "mimogt/rng.hpp"

namespace mimogt {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

inline constexpr double kDefaultRankTol = 1e-10;

class LinalgError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Circularly-symmetric complex Gaussian CN(0, variance): real and imaginary
/// parts are independent N(0, variance/2).
inline Complex sample_cgrv(Engine& rng, double variance) {
  const double sd = std::sqrt(0.5 * variance);
  const double re = standard_normal(rng);
  const double im = standard_normal(rng);
  return {sd * re, sd * im};
}

/// Fills `m` with i.i.d. CN(0, variance) entries in row-major order.
inline void fill_cgrv(Engine& rng, ComplexMatrix& m, double variance) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = sample_cgrv(rng, variance);
  }
}

namespace detail {

// QR of a^H with column pivoting. Columns of Q beyond the numerical rank span
// the nullspace of a. Pivots below rank_tol * (largest pivot) count as zero;
// the largest pivot tracks the largest singular value to within sqrt(rows).
inline Eigen::ColPivHouseholderQR<ComplexMatrix> adjoint_qr(const ComplexMatrix& a, double rank_tol) {
  if (!(rank_tol > 0.0)) throw std::invalid_argument("rank_tol must be positive");
  if (a.cols() < 1) throw std::invalid_argument("matrix must have at least one column");
  if (!a.allFinite()) throw LinalgError("non-finite entry in matrix");
  Eigen::ColPivHouseholderQR<ComplexMatrix> qr(a.cols(), a.rows());
  qr.setThreshold(rank_tol);
  qr.compute(a.adjoint());
  return qr;
}

}  // namespace detail

inline std::size_t numerical_rank(const ComplexMatrix& a, double rank_tol = kDefaultRankTol) {
  if (a.rows() == 0) return 0;
  return static_cast<std::size_t>(detail::adjoint_qr(a, rank_tol).rank());
}

/// Orthonormal basis (cols x nullity) of the nullspace of `a`.
/// A matrix with no rows constrains nothing, so its basis is the identity.
inline ComplexMatrix nullspace_orthonormal_basis(const ComplexMatrix& a, double rank_tol = kDefaultRankTol) {
  if (a.rows() == 0) {
    if (a.cols() < 1) throw std::invalid_argument("matrix must have at least one column");
    return ComplexMatrix::Identity(a.cols(), a.cols());
  }
  const auto qr = detail::adjoint_qr(a, rank_tol);
  const Eigen::Index n = a.cols();
  const Eigen::Index rank = qr.rank();
  ComplexMatrix q = qr.householderQ();
  return q.rightCols(n - rank);
}

struct NullspaceSum {
  ComplexVector v;       // sum of the basis columns
  std::size_t nullity = 0;
};

/// Sum of the columns of nullspace_orthonormal_basis(a), without forming the
/// basis. Same decomposition, so the result equals basis * ones.
inline NullspaceSum nullspace_column_sum(const ComplexMatrix& a, double rank_tol = kDefaultRankTol) {
  const Eigen::Index n = a.cols();
  if (a.rows() == 0) {
    if (n < 1) throw std::invalid_argument("matrix must have at least one column");
    return {ComplexVector::Ones(n), static_cast<std::size_t>(n)};
  }
  const auto qr = detail::adjoint_qr(a, rank_tol);
  const Eigen::Index rank = qr.rank();
  ComplexVector selector = ComplexVector::Zero(n);
  selector.tail(n - rank).setOnes();
  ComplexVector v = qr.householderQ() * selector;
  return {std::move(v), static_cast<std::size_t>(n - rank)};
}

}  // namespace mimogt
