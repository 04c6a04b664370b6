#include "dea/regression.hpp"

#include <algorithm>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

namespace dea::regression {

std::string_view to_string(RegressorKind kind) noexcept {
  return kind == RegressorKind::LinearOls ? "ols" : "knn";
}

RegressorKind regressor_kind_from_string(std::string_view name) {
  if (name == "ols" || name == "linear-ols") return RegressorKind::LinearOls;
  if (name == "knn") return RegressorKind::Knn;
  throw Error(ErrorCode::ConfigInvalid, "unknown regressor '" + std::string(name) + "' (expected ols|knn)");
}

namespace {

void check_shapes(const Matrix& predictors, const Matrix& targets) {
  if (predictors.rows() != targets.rows()) {
    throw Error(ErrorCode::DimensionMismatch,
                "predictors have " + std::to_string(predictors.rows()) + " rows but targets have " +
                    std::to_string(targets.rows()));
  }
}

void fit_linear(const Matrix& predictors, const Matrix& targets, RowVector& intercept,
                Matrix& coefficients) {
  const Index n = predictors.rows();
  const Index m = predictors.cols();
  const RowVector target_mean = targets.colwise().mean();
  if (m == 0) {
    intercept = target_mean;
    coefficients.resize(0, targets.cols());
    return;
  }
  if (n < m + 2) {
    throw Error(ErrorCode::RankDeficient, "OLS with " + std::to_string(m) + " predictors needs n >= " +
                                              std::to_string(m + 2) + ", got " + std::to_string(n));
  }
  const RowVector predictor_mean = predictors.colwise().mean();
  const Matrix centred = predictors.rowwise() - predictor_mean;
  const Matrix gram = centred.transpose() * centred;

  // Rank check on the scale-free correlation form of the Gram matrix.
  const Vector scale = gram.diagonal().cwiseSqrt();
  if ((scale.array() <= 0.0).any()) {
    throw Error(ErrorCode::RankDeficient, "a predictor column is constant");
  }
  const Vector inv_scale = scale.cwiseInverse();
  const Matrix correlation = inv_scale.asDiagonal() * gram * inv_scale.asDiagonal();
  const double min_eig = Eigen::SelfAdjointEigenSolver<Matrix>(correlation, Eigen::EigenvaluesOnly)
                             .eigenvalues()
                             .minCoeff();
  if (min_eig <= kRankRidge) {
    throw Error(ErrorCode::RankDeficient,
                "predictor Gram matrix is singular (collinear predictors, min scaled eigenvalue " +
                    std::to_string(min_eig) + ")");
  }
  Eigen::LLT<Matrix> llt(gram);
  if (llt.info() != Eigen::Success) throw Error(ErrorCode::RankDeficient, "predictor Gram matrix is singular");
  coefficients = llt.solve(centred.transpose() * (targets.rowwise() - target_mean));
  intercept = target_mean - predictor_mean * coefficients;
}

}  // namespace

FittedRegressor fit(const RegressorSpec& spec, const Matrix& predictors, const Matrix& targets) {
  check_shapes(predictors, targets);
  if (targets.rows() < 1) throw Error(ErrorCode::InsufficientSamples, "cannot fit on zero rows");
  FittedRegressor model;
  model.kind_ = spec.kind;
  model.input_arity_ = predictors.cols();
  model.output_arity_ = targets.cols();
  if (spec.kind == RegressorKind::LinearOls) {
    fit_linear(predictors, targets, model.intercept_, model.coefficients_);
    return model;
  }
  const Index n = predictors.rows();
  if (spec.knn_k < 1 || spec.knn_k > n) {
    throw Error(ErrorCode::ConfigInvalid,
                "knn_k must lie in [1, n] (k = " + std::to_string(spec.knn_k) + ", n = " + std::to_string(n) + ")");
  }
  model.knn_k_ = spec.knn_k;
  model.intercept_ = targets.colwise().mean();
  model.train_points_ = predictors.transpose();
  model.train_targets_ = targets;
  return model;
}

Matrix predict(const FittedRegressor& model, const Matrix& predictors) {
  if (predictors.cols() != model.input_arity_) {
    throw Error(ErrorCode::DimensionMismatch, "model expects " + std::to_string(model.input_arity_) +
                                                  " predictor columns, got " +
                                                  std::to_string(predictors.cols()));
  }
  const Index q = predictors.rows();
  if (model.input_arity_ == 0) return model.intercept_.replicate(q, 1);
  if (model.kind_ == RegressorKind::LinearOls) {
    return (predictors * model.coefficients_).rowwise() + model.intercept_;
  }

  const Index n = model.train_points_.cols();
  const Index m = model.input_arity_;
  const auto k = static_cast<std::size_t>(model.knn_k_);
  Matrix out(q, model.output_arity_);
  std::vector<std::pair<double, Index>> dist(static_cast<std::size_t>(n));
  const Matrix query = predictors.transpose();
  for (Index i = 0; i < q; ++i) {
    const double* qp = query.col(i).data();
    for (Index j = 0; j < n; ++j) {
      const double* tp = model.train_points_.col(j).data();
      double s = 0.0;
      for (Index c = 0; c < m; ++c) {
        const double diff = qp[c] - tp[c];
        s += diff * diff;
      }
      dist[static_cast<std::size_t>(j)] = {s, j};
    }
    // pair ordering compares distance then row index, so ties go to the lowest row
    std::nth_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k - 1), dist.end());
    std::sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k));
    RowVector acc = RowVector::Zero(model.output_arity_);
    for (std::size_t t = 0; t < k; ++t) acc += model.train_targets_.row(dist[t].second);
    out.row(i) = acc / static_cast<double>(k);
  }
  return out;
}

Matrix residuals(const FittedRegressor& model, const Matrix& predictors, const Matrix& targets) {
  check_shapes(predictors, targets);
  if (targets.cols() != model.output_arity()) {
    throw Error(ErrorCode::DimensionMismatch, "model predicts " + std::to_string(model.output_arity()) +
                                                  " targets, got " + std::to_string(targets.cols()));
  }
  return targets - predict(model, predictors);
}

Matrix predict_frozen(const FittedRegressor& model, const Matrix& x_part) {
  if (model.kind() != RegressorKind::LinearOls) {
    throw Error(ErrorCode::UnsupportedRegressor,
                "frozen-Z prediction needs a linear model; the X and Z effects of knn are not separable");
  }
  if (x_part.cols() > model.input_arity()) {
    throw Error(ErrorCode::DimensionMismatch, "X block has " + std::to_string(x_part.cols()) +
                                                  " columns but the model only has " +
                                                  std::to_string(model.input_arity()) + " predictors");
  }
  if (x_part.cols() == 0) return model.intercept().replicate(x_part.rows(), 1);
  return (x_part * model.coefficients().topRows(x_part.cols())).rowwise() + model.intercept();
}

}  // namespace dea::regression
