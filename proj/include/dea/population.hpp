#pragma once

// Exact population quantities of the additive model
//   Y = b phi(X) + psi(Z) + N_y,   N_y ~ N(0, Sigma),   Cov(psi(Z)) = Sigma_psi
// and the closed-form maximisers of the three nested statistics.

#include "dea/types.hpp"

namespace dea {

struct PopulationModel {
  Vector b;
  SymMatrixd sigma;
  SymMatrixd sigma_psi;
  /// Var(phi(X)) in covariance formulas, phi(x)^2 in pointwise ones.
  double phi_variance = 1.0;

  Index d() const noexcept { return b.size(); }
  /// Sigma + Sigma_psi, the covariance of the noise term of Y^x.
  Matrix noise_covariance() const { return sigma.matrix() + sigma_psi.matrix(); }
};

struct PopulationDirections {
  Vector w_s;  // b / |b|
  Vector w_f;  // Sigma^{-1} b, normalised
  Vector w_d;  // (Sigma + Sigma_psi)^{-1} b, normalised
};

PopulationDirections population_directions(const PopulationModel& pm);

/// phi_variance (w^T b)^2 / w^T (Sigma + Sigma_psi) w.
double snr(const PopulationModel& pm, const Vector& w);

/// phi_variance b^T (Sigma + Sigma_psi)^{-1} b, the maximum of snr over w.
double max_snr(const PopulationModel& pm);

/// Fisher information of w^T Y^x for the linear intervention phi(x) = v^T x:
/// (|v|^2 / phi_variance) snr(pm, w).
double fisher_information(const PopulationModel& pm, const Vector& w, double v_norm_sq);

}  // namespace dea
