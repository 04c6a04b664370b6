#pragma once

// Conditional-mean estimators producing the multivariate residuals of the
// nested full (X, Z -> Y) and restricted (Z -> Y) models.

#include <string_view>

#include "dea/types.hpp"

namespace dea::regression {

enum class RegressorKind { LinearOls, Knn };

std::string_view to_string(RegressorKind kind) noexcept;
RegressorKind regressor_kind_from_string(std::string_view name);

struct RegressorSpec {
  RegressorKind kind = RegressorKind::LinearOls;
  int knn_k = 10;

  static RegressorSpec ols() { return {}; }
  static RegressorSpec knn(int k) { return {RegressorKind::Knn, k}; }
};

/// Relative eigenvalue threshold on the predictor correlation matrix below
/// which an OLS fit is refused as rank deficient.
inline constexpr double kRankRidge = 1e-10;

class FittedRegressor {
 public:
  RegressorKind kind() const noexcept { return kind_; }
  Index input_arity() const noexcept { return input_arity_; }
  Index output_arity() const noexcept { return output_arity_; }
  int knn_k() const noexcept { return knn_k_; }

  /// Linear models: 1 x d intercept and m x d coefficient matrix. For knn the
  /// intercept holds the training target means and coefficients are empty.
  const RowVector& intercept() const noexcept { return intercept_; }
  const Matrix& coefficients() const noexcept { return coefficients_; }

 private:
  friend FittedRegressor fit(const RegressorSpec&, const Matrix&, const Matrix&);
  friend Matrix predict(const FittedRegressor&, const Matrix&);

  RegressorKind kind_ = RegressorKind::LinearOls;
  Index input_arity_ = 0;
  Index output_arity_ = 0;
  int knn_k_ = 0;
  RowVector intercept_;
  Matrix coefficients_;
  Matrix train_points_;  // m x n, one training point per column (knn only)
  Matrix train_targets_;  // n x d (knn only)
};

/// Fits `targets` (n x d) on `predictors` (n x m), always with an intercept.
/// m = 0 gives the intercept-only model (column means).
FittedRegressor fit(const RegressorSpec& spec, const Matrix& predictors, const Matrix& targets);

/// q x d predictions. Linear: intercept + predictors * coefficients. knn: mean
/// target of the k nearest training rows (Euclidean), distance ties broken by
/// the lowest training row index.
Matrix predict(const FittedRegressor& model, const Matrix& predictors);

/// targets - predict(model, predictors).
Matrix residuals(const FittedRegressor& model, const Matrix& predictors, const Matrix& targets);

/// Prediction of a linear model fit on [X | Z] with the Z block set to zero:
/// intercept + x_part * (leading x_part.cols() coefficient rows). The intercept
/// is the plain fitted one, no re-centring of the zeroed block.
Matrix predict_frozen(const FittedRegressor& model, const Matrix& x_part);

}  // namespace dea::regression
