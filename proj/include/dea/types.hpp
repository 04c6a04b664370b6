#pragma once

#include <Eigen/Dense>

#include "dea/linalg.hpp"

namespace dea {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using Index = Eigen::Index;

/// Observations of treatment X (n x p), outcome Y (n x d) and conditioning
/// set Z (n x r). A conditioning set with zero columns means "no Z".
struct DataTriplet {
  Matrix x;
  Matrix y;
  Matrix z;

  Index n() const noexcept { return y.rows(); }
  Index p() const noexcept { return x.cols(); }
  Index d() const noexcept { return y.cols(); }
  Index r() const noexcept { return z.cols(); }

  /// Throws DimensionMismatch / DomainError if the row counts differ, n < 2,
  /// or any entry is not finite.
  void validate() const;

  /// [X | Z], the predictors of the full model.
  Matrix xz() const;
};

}  // namespace dea
