#pragma once

// Direct-effect analysis: learns projections w of a multivariate outcome Y that
// maximise nested-regression conditional-independence statistics.
//
//   TS  : w^T (S_res - S_full) w                     subject to |w| = 1
//   TF  : w^T (S_res - S_full) w / w^T S_full w
//   TD  : w^T (S_res - S_full) w / w^T S_noise w
//   PCCA: squared partial canonical correlation of the X- and Y-residuals on Z
//
// Each statistic is maximised through a ridge-regularised generalised
// eigenvalue problem; further components come from deflating Y.

#include <optional>
#include <string_view>

#include "dea/regression.hpp"
#include "dea/types.hpp"

namespace dea {

enum class StatisticKind { TS, TF, TD, PCCA };

std::string_view to_string(StatisticKind kind) noexcept;
/// Accepts ts|tf|td|pcca (any case).
StatisticKind statistic_kind_from_string(std::string_view name);

/// Default ridge added to the constraint matrix of the eigenproblem.
inline constexpr double kDefaultRidge = 1e-8;

/// Sample covariances (1/(n-1)) R^T R of column-centred residuals of the full
/// model [X|Z] -> Y, the restricted model Z -> Y and, for linear regressors,
/// the full model evaluated with Z frozen at zero.
struct ResidualCovariances {
  SymMatrixd sigma_full;
  SymMatrixd sigma_res;
  std::optional<SymMatrixd> sigma_noise;
  Index n_samples = 0;
  Index p = 0;
  Index r = 0;

  Index d() const noexcept { return sigma_full.order(); }
  /// sigma_res - sigma_full.
  Matrix excess() const { return sigma_res.matrix() - sigma_full.matrix(); }
};

/// Residual covariances of X and Y after regressing both on Z.
struct PartialCovariances {
  Matrix sigma_x;      // p x p
  Matrix sigma_cross;  // p x d
  Matrix sigma_y;      // d x d
};

struct DeaModel {
  StatisticKind kind = StatisticKind::TS;
  Matrix w;            // d x q, orthonormal columns
  Vector eigenvalues;  // one leading eigenvalue per deflation round
  ResidualCovariances covariances;  // first round (undeflated Y)
  std::optional<PartialCovariances> partial;  // PCCA only, first round
  Matrix x_directions;                        // PCCA only: p x q companion directions
  Index dfn = 0;  // d
  Index dfd = 0;  // n - p - r - 1
  double ridge = kDefaultRidge;
  regression::RegressorSpec regressor;

  Index d() const noexcept { return w.rows(); }
  Index q() const noexcept { return w.cols(); }
  Index n_samples() const noexcept { return covariances.n_samples; }
  double leading_eigenvalue() const { return eigenvalues(0); }
};

/// (1/(n-1)) R^T R of the column-centred residual matrix.
SymMatrixd sample_covariance(const Matrix& residual);

ResidualCovariances residual_covariances(const DataTriplet& data, const regression::RegressorSpec& spec);

PartialCovariances partial_covariances(const DataTriplet& data, const regression::RegressorSpec& spec);

/// Fits q components. The first solves the GEV on (S_res - S_full, N) with N
/// = I, S_full or S_noise; later ones deflate Y <- Y (I - W W^T), refit the
/// regressions and re-solve inside the orthogonal complement of W.
DeaModel fit_dea(const DataTriplet& data, StatisticKind kind, const regression::RegressorSpec& spec,
                 Index q = 1, double ridge = kDefaultRidge);

/// Single-component TS/TF/TD model from precomputed covariances; identical to
/// fit_dea(..., q = 1, ridge) on the data the covariances came from.
DeaModel fit_from_covariances(const ResidualCovariances& cov, StatisticKind kind,
                              const regression::RegressorSpec& spec, double ridge = kDefaultRidge);

/// Partial CCA: Sxy^T Sx^{-1} Sxy w = lambda Sy w on the Z-residuals.
DeaModel pcca_fit(const DataTriplet& data, const regression::RegressorSpec& spec, Index q = 1,
                  double ridge = kDefaultRidge);

/// TS, TF or TD evaluated at unit vector w (no ridge).
double statistic_value(const ResidualCovariances& cov, const Vector& w, StatisticKind kind);
/// Squared partial correlation between the best X-projection and w^T R_y.
double pcca_statistic_value(const PartialCovariances& cov, const Vector& w);
/// Dispatches on model.kind, using the first-round covariances.
double statistic_value(const DeaModel& model, const Vector& w);

/// y * W.
Matrix project(const DeaModel& model, const Matrix& y);

struct EffectDecomposition {
  Matrix forced;    // component along b_hat
  Matrix internal;  // projection onto the orthogonal complement of b_hat
};

/// internal = y (I - b b^T / |b|^2), forced = y - internal.
EffectDecomposition decompose_effect(const DeaModel& model, const Matrix& y, const Vector& b_hat);

/// Estimated effect direction b_hat (unit norm). For OLS: leading right
/// singular vector of the X-coefficient block of the full model. Otherwise the
/// leading TS direction.
Vector effect_direction(const DataTriplet& data, const regression::RegressorSpec& spec);

}  // namespace dea
