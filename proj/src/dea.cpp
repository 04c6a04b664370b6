#include "dea/dea.hpp"

#include <algorithm>
#include <cctype>
#include <string>

namespace dea {

using regression::RegressorKind;
using regression::RegressorSpec;

std::string_view to_string(StatisticKind kind) noexcept {
  switch (kind) {
    case StatisticKind::TS: return "ts";
    case StatisticKind::TF: return "tf";
    case StatisticKind::TD: return "td";
    case StatisticKind::PCCA: return "pcca";
  }
  return "ts";
}

StatisticKind statistic_kind_from_string(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "ts") return StatisticKind::TS;
  if (lower == "tf") return StatisticKind::TF;
  if (lower == "td") return StatisticKind::TD;
  if (lower == "pcca") return StatisticKind::PCCA;
  throw Error(ErrorCode::ConfigInvalid, "unknown statistic '" + std::string(name) + "' (expected ts|tf|td|pcca)");
}

SymMatrixd sample_covariance(const Matrix& residual) {
  const Index n = residual.rows();
  if (n < 2) throw Error(ErrorCode::InsufficientSamples, "covariance needs at least 2 rows");
  const Matrix centred = residual.rowwise() - residual.colwise().mean();
  return SymMatrixd(centred.transpose() * centred / static_cast<double>(n - 1));
}

namespace {

Matrix cross_covariance(const Matrix& a, const Matrix& b) {
  const Matrix ac = a.rowwise() - a.colwise().mean();
  const Matrix bc = b.rowwise() - b.colwise().mean();
  return ac.transpose() * bc / static_cast<double>(a.rows() - 1);
}

void check_components(Index q, Index d) {
  if (q < 1 || q > d) {
    throw Error(ErrorCode::ConfigInvalid,
                "number of components must lie in [1, d] (q = " + std::to_string(q) + ", d = " + std::to_string(d) + ")");
  }
}

// Gram-Schmidt against the accepted columns, then unit normalisation with the
// largest-magnitude entry made positive.
Vector orthonormalise(Vector w, const Matrix& accepted) {
  for (int pass = 0; pass < 2; ++pass) {
    for (Index j = 0; j < accepted.cols(); ++j) w -= accepted.col(j).dot(w) * accepted.col(j);
  }
  const double norm = w.norm();
  if (norm == 0.0) throw Error(ErrorCode::ZeroVector, "deflated direction collapsed to zero");
  w /= norm;
  Index idx = 0;
  w.cwiseAbs().maxCoeff(&idx);
  if (w(idx) < 0.0) w = -w;
  return w;
}

struct RoundProblem {
  Matrix m;
  Matrix n;
};

RoundProblem nested_problem(const ResidualCovariances& cov, StatisticKind kind) {
  RoundProblem out{cov.excess(), {}};
  switch (kind) {
    case StatisticKind::TS: out.n = Matrix::Identity(cov.d(), cov.d()); break;
    case StatisticKind::TF: out.n = cov.sigma_full.matrix(); break;
    case StatisticKind::TD:
      if (!cov.sigma_noise) {
        throw Error(ErrorCode::MissingNoiseCovariance, "TD needs the frozen-Z noise covariance");
      }
      out.n = cov.sigma_noise->matrix();
      break;
    case StatisticKind::PCCA: throw Error(ErrorCode::WrongStatisticKind, "PCCA is not a nested statistic");
  }
  return out;
}

struct RoundSolution {
  double eigenvalue;
  Vector direction;
};

// Leading eigenpair of the problem restricted to the complement of `accepted`.
RoundSolution solve_in_subspace(const RoundProblem& problem, const Matrix& accepted, double ridge) {
  if (accepted.cols() == 0) {
    const auto sol = gev_solve(problem.m, problem.n, ridge);
    return {sol.eigenvalues(0), sol.leading()};
  }
  const Matrix basis = orthonormal_complement(accepted);
  const Matrix m = basis.transpose() * problem.m * basis;
  const Matrix n = basis.transpose() * problem.n * basis;
  const auto sol = gev_solve(m, n, ridge);
  return {sol.eigenvalues(0), basis * sol.leading()};
}

}  // namespace

ResidualCovariances residual_covariances(const DataTriplet& data, const RegressorSpec& spec) {
  data.validate();
  const Matrix xz = data.xz();
  const auto full = regression::fit(spec, xz, data.y);
  const auto restricted = regression::fit(spec, data.z, data.y);

  ResidualCovariances cov;
  cov.sigma_full = sample_covariance(regression::residuals(full, xz, data.y));
  cov.sigma_res = sample_covariance(regression::residuals(restricted, data.z, data.y));
  if (spec.kind == RegressorKind::LinearOls) {
    cov.sigma_noise = sample_covariance(data.y - regression::predict_frozen(full, data.x));
  }
  cov.n_samples = data.n();
  cov.p = data.p();
  cov.r = data.r();
  return cov;
}

PartialCovariances partial_covariances(const DataTriplet& data, const RegressorSpec& spec) {
  data.validate();
  const auto fx = regression::fit(spec, data.z, data.x);
  const auto fy = regression::fit(spec, data.z, data.y);
  const Matrix rx = regression::residuals(fx, data.z, data.x);
  const Matrix ry = regression::residuals(fy, data.z, data.y);
  return {sample_covariance(rx).matrix(), cross_covariance(rx, ry), sample_covariance(ry).matrix()};
}

DeaModel fit_dea(const DataTriplet& data, StatisticKind kind, const RegressorSpec& spec, Index q, double ridge) {
  if (kind == StatisticKind::PCCA) return pcca_fit(data, spec, q, ridge);
  data.validate();
  check_components(q, data.d());
  if (kind == StatisticKind::TD && spec.kind != RegressorKind::LinearOls) {
    throw Error(ErrorCode::UnsupportedRegressor, "TD needs a linear regressor to freeze the Z effect");
  }
  if (!(ridge >= 0.0)) throw Error(ErrorCode::DomainError, "ridge must be >= 0");

  DeaModel model;
  model.kind = kind;
  model.ridge = ridge;
  model.regressor = spec;
  model.dfn = data.d();
  model.dfd = data.n() - data.p() - data.r() - 1;
  model.w.resize(data.d(), 0);
  model.eigenvalues.resize(q);

  DataTriplet round = data;
  for (Index k = 0; k < q; ++k) {
    if (k > 0) round.y = data.y - data.y * model.w * model.w.transpose();
    const auto cov = residual_covariances(round, spec);
    if (k == 0) model.covariances = cov;
    const auto sol = solve_in_subspace(nested_problem(cov, kind), model.w, ridge);
    const Vector w = orthonormalise(sol.direction, model.w);
    model.w.conservativeResize(Eigen::NoChange, k + 1);
    model.w.col(k) = w;
    model.eigenvalues(k) = sol.eigenvalue;
  }
  return model;
}

DeaModel fit_from_covariances(const ResidualCovariances& cov, StatisticKind kind, const RegressorSpec& spec,
                              double ridge) {
  if (kind == StatisticKind::TD && spec.kind != RegressorKind::LinearOls) {
    throw Error(ErrorCode::UnsupportedRegressor, "TD needs a linear regressor to freeze the Z effect");
  }
  if (!(ridge >= 0.0)) throw Error(ErrorCode::DomainError, "ridge must be >= 0");
  DeaModel model;
  model.kind = kind;
  model.ridge = ridge;
  model.regressor = spec;
  model.dfn = cov.d();
  model.dfd = cov.n_samples - cov.p - cov.r - 1;
  model.covariances = cov;
  const Matrix none(cov.d(), 0);
  const auto sol = solve_in_subspace(nested_problem(cov, kind), none, ridge);
  model.w = orthonormalise(sol.direction, none);
  model.eigenvalues = Vector::Constant(1, sol.eigenvalue);
  return model;
}

DeaModel pcca_fit(const DataTriplet& data, const RegressorSpec& spec, Index q, double ridge) {
  data.validate();
  check_components(q, data.d());
  if (data.p() < 1) throw Error(ErrorCode::DimensionMismatch, "partial CCA needs at least one X column");
  if (data.n() <= std::max(data.p(), data.d()) + data.r() + 1) {
    throw Error(ErrorCode::InsufficientSamples, "partial CCA needs n > max(p, d) + r + 1");
  }
  if (!(ridge >= 0.0)) throw Error(ErrorCode::DomainError, "ridge must be >= 0");

  DeaModel model;
  model.kind = StatisticKind::PCCA;
  model.ridge = ridge;
  model.regressor = spec;
  model.dfn = data.d();
  model.dfd = data.n() - data.p() - data.r() - 1;
  model.w.resize(data.d(), 0);
  model.x_directions.resize(data.p(), q);
  model.eigenvalues.resize(q);
  model.covariances = residual_covariances(data, spec);

  const auto fx = regression::fit(spec, data.z, data.x);
  const auto fy = regression::fit(spec, data.z, data.y);
  const Matrix rx = regression::residuals(fx, data.z, data.x);
  const Matrix ry_full = regression::residuals(fy, data.z, data.y);

  Matrix sx = sample_covariance(rx).matrix();
  sx.diagonal().array() += ridge;
  const Eigen::LLT<Matrix> sx_llt(sx);
  if (sx_llt.info() != Eigen::Success) {
    throw Error(ErrorCode::NotPositiveDefinite, "X-residual covariance is singular (increase the ridge)");
  }

  for (Index k = 0; k < q; ++k) {
    // Regression on Z is linear in the targets for both regressors, so the
    // residuals of the deflated Y are the deflated residuals.
    Matrix ry = ry_full;
    if (k > 0) ry = ry_full - ry_full * model.w * model.w.transpose();
    const Matrix sxy = cross_covariance(rx, ry);
    const Matrix sy = sample_covariance(ry).matrix();
    if (k == 0) model.partial = PartialCovariances{sample_covariance(rx).matrix(), sxy, sy};
    const RoundProblem problem{sxy.transpose() * sx_llt.solve(sxy), sy};
    const auto sol = solve_in_subspace(problem, model.w, ridge);
    const Vector w = orthonormalise(sol.direction, model.w);
    model.w.conservativeResize(Eigen::NoChange, k + 1);
    model.w.col(k) = w;
    model.eigenvalues(k) = sol.eigenvalue;
    Vector v = sx_llt.solve(sxy * w);
    if (v.norm() > 0.0) v.normalize();
    model.x_directions.col(k) = v;
  }
  return model;
}

double statistic_value(const ResidualCovariances& cov, const Vector& w, StatisticKind kind) {
  if (w.size() != cov.d()) throw Error(ErrorCode::DimensionMismatch, "direction length does not match d");
  const double numerator = cov.sigma_res.quad(w) - cov.sigma_full.quad(w);
  switch (kind) {
    case StatisticKind::TS: return numerator / w.squaredNorm();
    case StatisticKind::TF: return numerator / cov.sigma_full.quad(w);
    case StatisticKind::TD:
      if (!cov.sigma_noise) throw Error(ErrorCode::MissingNoiseCovariance, "TD needs the noise covariance");
      return numerator / cov.sigma_noise->quad(w);
    case StatisticKind::PCCA: break;
  }
  throw Error(ErrorCode::WrongStatisticKind, "use pcca_statistic_value for partial CCA");
}

double pcca_statistic_value(const PartialCovariances& cov, const Vector& w) {
  if (w.size() != cov.sigma_y.rows()) throw Error(ErrorCode::DimensionMismatch, "direction length does not match d");
  const Vector cross = cov.sigma_cross * w;
  const Eigen::LLT<Matrix> llt(cov.sigma_x);
  if (llt.info() != Eigen::Success) throw Error(ErrorCode::NotPositiveDefinite, "X-residual covariance is singular");
  return cross.dot(llt.solve(cross)) / w.dot(cov.sigma_y * w);
}

double statistic_value(const DeaModel& model, const Vector& w) {
  if (model.kind == StatisticKind::PCCA) {
    if (!model.partial) throw Error(ErrorCode::ConfigInvalid, "model carries no partial covariances");
    return pcca_statistic_value(*model.partial, w);
  }
  return statistic_value(model.covariances, w, model.kind);
}

Matrix project(const DeaModel& model, const Matrix& y) {
  if (y.cols() != model.d()) {
    throw Error(ErrorCode::DimensionMismatch,
                "model expects " + std::to_string(model.d()) + " outcome columns, got " + std::to_string(y.cols()));
  }
  return y * model.w;
}

EffectDecomposition decompose_effect(const DeaModel& model, const Matrix& y, const Vector& b_hat) {
  if (y.cols() != model.d() || b_hat.size() != model.d()) {
    throw Error(ErrorCode::DimensionMismatch, "outcome and effect direction must have d = " + std::to_string(model.d()));
  }
  const double norm_sq = b_hat.squaredNorm();
  if (norm_sq == 0.0) throw Error(ErrorCode::ZeroVector, "effect direction is the zero vector");
  EffectDecomposition out;
  out.internal = y - (y * b_hat) * (b_hat.transpose() / norm_sq);
  out.forced = y - out.internal;
  return out;
}

Vector effect_direction(const DataTriplet& data, const RegressorSpec& spec) {
  data.validate();
  Vector b;
  if (spec.kind == RegressorKind::LinearOls && data.p() > 0) {
    const auto full = regression::fit(spec, data.xz(), data.y);
    const Matrix block = full.coefficients().topRows(data.p());
    Eigen::JacobiSVD<Matrix> svd(block, Eigen::ComputeFullV);
    b = svd.matrixV().col(0);
  } else {
    b = fit_dea(data, StatisticKind::TS, spec, 1, 0.0).w.col(0);
  }
  const double norm = b.norm();
  if (norm == 0.0) throw Error(ErrorCode::ZeroVector, "estimated effect direction is zero");
  b /= norm;
  Index idx = 0;
  b.cwiseAbs().maxCoeff(&idx);
  if (b(idx) < 0.0) b = -b;
  return b;
}

}  // namespace dea
