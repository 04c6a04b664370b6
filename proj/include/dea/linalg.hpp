#pragma once

// Dense symmetric linear algebra: Cholesky, symmetric eigendecomposition and
// the ridge-regularised generalised eigenvalue solver used by every statistic.
// All routines are templated on the scalar type and accept Eigen expressions.

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "dea/error.hpp"

namespace dea {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Square matrix stored symmetrised as (A + A^T) / 2.
template <typename Scalar>
class SymMatrix {
 public:
  using Dense = MatrixX<Scalar>;

  SymMatrix() = default;

  template <typename Derived>
  SymMatrix(const Eigen::MatrixBase<Derived>& a) {  // NOLINT(google-explicit-constructor)
    if (a.rows() != a.cols()) {
      throw Error(ErrorCode::DimensionMismatch,
                  "symmetric matrix must be square, got " + std::to_string(a.rows()) + "x" +
                      std::to_string(a.cols()));
    }
    if (a.rows() < 1) throw Error(ErrorCode::DimensionMismatch, "symmetric matrix order must be >= 1");
    data_ = (a + a.transpose()) / Scalar(2);
  }

  static SymMatrix identity(Eigen::Index order) { return SymMatrix(Dense::Identity(order, order)); }

  Eigen::Index order() const noexcept { return data_.rows(); }
  const Dense& matrix() const noexcept { return data_; }
  Scalar operator()(Eigen::Index i, Eigen::Index j) const { return data_(i, j); }

  /// Quadratic form v^T A v.
  template <typename Derived>
  Scalar quad(const Eigen::MatrixBase<Derived>& v) const {
    return v.dot(data_ * v);
  }

 private:
  Dense data_;
};

using SymMatrixd = SymMatrix<double>;

template <typename Scalar>
struct GevProblem {
  SymMatrix<Scalar> m;
  SymMatrix<Scalar> n;
  Scalar ridge = Scalar(0);
};

/// Eigenvalues in non-increasing order; column k of `eigenvectors` pairs with
/// eigenvalue k and has unit Euclidean norm.
template <typename Scalar>
struct GevSolution {
  VectorX<Scalar> eigenvalues;
  MatrixX<Scalar> eigenvectors;

  VectorX<Scalar> leading() const { return eigenvectors.col(0); }
};

using GevSolutiond = GevSolution<double>;

namespace detail {

// Largest-magnitude entry of each column made positive; first index wins ties.
template <typename Scalar>
void fix_column_signs(MatrixX<Scalar>& v) {
  for (Eigen::Index k = 0; k < v.cols(); ++k) {
    Eigen::Index idx = 0;
    v.col(k).cwiseAbs().maxCoeff(&idx);
    if (v(idx, k) < Scalar(0)) v.col(k) = -v.col(k);
  }
}

// Eigen returns ascending eigenvalues; reorder to non-increasing with a stable sort.
template <typename Scalar>
GevSolution<Scalar> descending(const VectorX<Scalar>& values, const MatrixX<Scalar>& vectors) {
  const Eigen::Index order = values.size();
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(order));
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  std::reverse(perm.begin(), perm.end());
  std::stable_sort(perm.begin(), perm.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return values(a) > values(b); });
  GevSolution<Scalar> out;
  out.eigenvalues.resize(order);
  out.eigenvectors.resize(vectors.rows(), order);
  for (Eigen::Index k = 0; k < order; ++k) {
    out.eigenvalues(k) = values(perm[static_cast<std::size_t>(k)]);
    out.eigenvectors.col(k) = vectors.col(perm[static_cast<std::size_t>(k)]);
  }
  return out;
}

}  // namespace detail

/// Lower-triangular L with L L^T = a. Throws NotPositiveDefinite when a pivot
/// is not strictly positive; callers typically respond by raising the ridge.
template <typename Scalar>
MatrixX<Scalar> cholesky(const SymMatrix<Scalar>& a) {
  Eigen::LLT<MatrixX<Scalar>> llt(a.matrix());
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::NotPositiveDefinite,
                "Cholesky pivot <= 0 on a " + std::to_string(a.order()) + "x" +
                    std::to_string(a.order()) + " matrix (increase the ridge)");
  }
  return llt.matrixL();
}

/// Full spectral decomposition of a symmetric matrix, eigenvalues descending.
template <typename Scalar>
GevSolution<Scalar> sym_eig(const SymMatrix<Scalar>& a) {
  Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> solver(a.matrix(), Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorCode::NoConvergence, "symmetric eigensolver exceeded its iteration cap");
  }
  auto out = detail::descending<Scalar>(solver.eigenvalues(), solver.eigenvectors());
  detail::fix_column_signs(out.eigenvectors);
  return out;
}

/// Solves M w = lambda (N + ridge I) w by whitening with the Cholesky factor of
/// N + ridge I. Eigenvector columns are rescaled to unit Euclidean norm.
template <typename Scalar>
GevSolution<Scalar> gev_solve(const GevProblem<Scalar>& problem) {
  const Eigen::Index order = problem.m.order();
  if (problem.n.order() != order) {
    throw Error(ErrorCode::DimensionMismatch, "GEV numerator has order " + std::to_string(order) +
                                                  " but constraint has order " +
                                                  std::to_string(problem.n.order()));
  }
  if (!(problem.ridge >= Scalar(0))) throw Error(ErrorCode::DomainError, "ridge must be >= 0");

  MatrixX<Scalar> constraint = problem.n.matrix();
  constraint.diagonal().array() += problem.ridge;
  const MatrixX<Scalar> lower = cholesky(SymMatrix<Scalar>(constraint));
  const auto tri = lower.template triangularView<Eigen::Lower>();

  // C = L^{-1} M L^{-T}
  MatrixX<Scalar> half = tri.solve(problem.m.matrix());
  MatrixX<Scalar> whitened = tri.solve(half.transpose());
  const auto spectral = sym_eig(SymMatrix<Scalar>(whitened));

  GevSolution<Scalar> out;
  out.eigenvalues = spectral.eigenvalues;
  out.eigenvectors = tri.transpose().solve(spectral.eigenvectors);
  for (Eigen::Index k = 0; k < order; ++k) out.eigenvectors.col(k).normalize();
  detail::fix_column_signs(out.eigenvectors);
  return out;
}

template <typename DerivedM, typename DerivedN>
GevSolution<typename DerivedM::Scalar> gev_solve(const Eigen::MatrixBase<DerivedM>& m,
                                                 const Eigen::MatrixBase<DerivedN>& n,
                                                 typename DerivedM::Scalar ridge) {
  using Scalar = typename DerivedM::Scalar;
  return gev_solve(GevProblem<Scalar>{SymMatrix<Scalar>(m), SymMatrix<Scalar>(n), ridge});
}

/// Orthonormal basis (d x (d-k)) for the orthogonal complement of the span of
/// the k orthonormal columns of `basis`.
template <typename Derived>
MatrixX<typename Derived::Scalar> orthonormal_complement(const Eigen::MatrixBase<Derived>& basis) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index d = basis.rows();
  const Eigen::Index k = basis.cols();
  if (k == 0) return MatrixX<Scalar>::Identity(d, d);
  Eigen::HouseholderQR<MatrixX<Scalar>> qr(basis);
  MatrixX<Scalar> q = qr.householderQ() * MatrixX<Scalar>::Identity(d, d);
  return q.rightCols(d - k);
}

}  // namespace dea
