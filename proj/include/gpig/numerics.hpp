#pragma once

// Dense symmetric positive-definite primitives. Everything here is templated
// on the scalar type and accepts arbitrary Eigen expressions.

#include <cmath>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "gpig/error.hpp"

namespace gpig {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Relative jitter levels tried in order; each is multiplied by the mean
/// diagonal of the matrix being factored.
inline const std::vector<double>& default_jitter_schedule() {
  static const std::vector<double> schedule{0.0, 1e-10, 1e-8, 1e-6};
  return schedule;
}

inline constexpr double kSymmetryTolerance = 1e-8;

/// Lower Cholesky factor L with L Lᵀ = A + jitter_used·I.
template <typename Scalar>
struct PosDefFactor {
  MatrixX<Scalar> lower;
  Scalar jitter_used{0};

  Eigen::Index dimension() const { return lower.rows(); }

  /// L Lᵀ, i.e. the factored matrix including the jitter.
  MatrixX<Scalar> reconstruct() const { return lower * lower.transpose(); }

  /// Solves (A + jitter·I) x = b.
  template <typename Derived>
  MatrixX<Scalar> solve(const Eigen::MatrixBase<Derived>& rhs) const {
    MatrixX<Scalar> x = lower.template triangularView<Eigen::Lower>().solve(rhs);
    lower.transpose().template triangularView<Eigen::Upper>().solveInPlace(x);
    return x;
  }

  /// Solves L x = b.
  template <typename Derived>
  MatrixX<Scalar> half_solve(const Eigen::MatrixBase<Derived>& rhs) const {
    return lower.template triangularView<Eigen::Lower>().solve(rhs);
  }
};

namespace detail {

template <typename Scalar>
bool try_llt(const MatrixX<Scalar>& a, Scalar jitter, MatrixX<Scalar>& out) {
  MatrixX<Scalar> shifted = a;
  shifted.diagonal().array() += jitter;
  Eigen::LLT<MatrixX<Scalar>> llt(shifted);
  if (llt.info() != Eigen::Success) return false;
  out = llt.matrixL();
  // LLT only rejects non-positive pivots; also reject non-finite output.
  return out.diagonal().allFinite() && (out.diagonal().array() > Scalar(0)).all();
}

template <typename Scalar>
Scalar mean_diagonal(const MatrixX<Scalar>& a) {
  if (a.rows() == 0) return Scalar(1);
  const Scalar m = a.diagonal().mean();
  return m > Scalar(0) ? m : Scalar(1);
}

}  // namespace detail

/// Factors a symmetric matrix, trying each jitter level in turn.
///
/// The input is checked for symmetry (max |A - Aᵀ| <= 1e-8) and then
/// symmetrized. Throws AsymmetricInput or NotPositiveDefinite.
template <typename Derived>
PosDefFactor<typename Derived::Scalar> cholesky(
    const Eigen::MatrixBase<Derived>& matrix,
    const std::vector<double>& jitter_schedule = default_jitter_schedule()) {
  using Scalar = typename Derived::Scalar;
  if (matrix.rows() != matrix.cols())
    throw Error(Errc::InvalidArgument, "cholesky: matrix is not square");
  MatrixX<Scalar> a = matrix;
  if (a.size() > 0) {
    const Scalar asym = (a - a.transpose()).cwiseAbs().maxCoeff();
    if (!(asym <= Scalar(kSymmetryTolerance)))
      throw Error(Errc::AsymmetricInput,
                  "max |A - A^T| = " + std::to_string(static_cast<double>(asym)));
    a = (a + a.transpose()) / Scalar(2);
  }
  const Scalar scale = detail::mean_diagonal(a);
  PosDefFactor<Scalar> factor;
  for (double level : jitter_schedule) {
    const Scalar jitter = Scalar(level) * scale;
    if (detail::try_llt(a, jitter, factor.lower)) {
      factor.jitter_used = jitter;
      return factor;
    }
  }
  throw Error(Errc::NotPositiveDefinite,
              "cholesky failed for every jitter level (n = " + std::to_string(a.rows()) + ")");
}

/// log det of the factored matrix, 2 Σ log L_ii.
template <typename Scalar>
Scalar logdet(const PosDefFactor<Scalar>& factor) {
  return Scalar(2) * factor.lower.diagonal().array().log().sum();
}

/// Appends one row/column to a factored matrix in O(n²).
///
/// The factored matrix was A + jI; the result factors [[A, b], [bᵀ, c]] + jI
/// with the same j. If that extension is not positive definite, the full
/// matrix is refactored with the remaining (larger) jitter levels.
template <typename Scalar, typename Derived>
PosDefFactor<Scalar> extend_factor(
    const PosDefFactor<Scalar>& factor, const Eigen::MatrixBase<Derived>& new_row,
    Scalar new_diag,
    const std::vector<double>& jitter_schedule = default_jitter_schedule()) {
  const Eigen::Index n = factor.dimension();
  if (new_row.size() != n)
    throw Error(Errc::InvalidArgument, "extend_factor: row length does not match factor");

  const VectorX<Scalar> b = new_row;
  VectorX<Scalar> l = n > 0 ? VectorX<Scalar>(factor.half_solve(b)) : VectorX<Scalar>(0);
  const Scalar pivot = new_diag + factor.jitter_used - l.squaredNorm();

  if (pivot > Scalar(0) && std::isfinite(static_cast<double>(pivot))) {
    PosDefFactor<Scalar> out;
    out.jitter_used = factor.jitter_used;
    out.lower = MatrixX<Scalar>::Zero(n + 1, n + 1);
    out.lower.topLeftCorner(n, n) = factor.lower;
    out.lower.row(n).head(n) = l.transpose();
    out.lower(n, n) = std::sqrt(pivot);
    return out;
  }

  MatrixX<Scalar> full(n + 1, n + 1);
  full.topLeftCorner(n, n) = factor.reconstruct();
  full.topLeftCorner(n, n).diagonal().array() -= factor.jitter_used;
  full.col(n).head(n) = b;
  full.row(n).head(n) = b.transpose();
  full(n, n) = new_diag;
  const Scalar scale = detail::mean_diagonal(full);
  std::vector<double> remaining;
  for (double level : jitter_schedule)
    if (Scalar(level) * scale > factor.jitter_used) remaining.push_back(level);
  return cholesky(full, remaining);
}

/// Returns (log det P, n log(tr P / n)); the first never exceeds the second
/// for positive-definite P, with equality iff all eigenvalues coincide.
template <typename Derived>
std::pair<typename Derived::Scalar, typename Derived::Scalar> logdet_trace_bound(
    const Eigen::MatrixBase<Derived>& matrix) {
  using Scalar = typename Derived::Scalar;
  const auto factor = cholesky(matrix, std::vector<double>{0.0});
  const Scalar n = static_cast<Scalar>(matrix.rows());
  if (matrix.rows() == 0) return {Scalar(0), Scalar(0)};
  const Scalar trace = matrix.trace();
  return {logdet(factor), n * std::log(trace / n)};
}

}  // namespace gpig
