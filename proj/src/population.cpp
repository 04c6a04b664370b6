#include "dea/population.hpp"

#include <string>

namespace dea {

namespace {

void check(const PopulationModel& pm) {
  const Index d = pm.d();
  if (d < 1) throw Error(ErrorCode::DimensionMismatch, "population effect vector is empty");
  if (pm.sigma.order() != d || pm.sigma_psi.order() != d) {
    throw Error(ErrorCode::DimensionMismatch, "population covariances must have order " + std::to_string(d));
  }
}

Vector solve_spd(const Matrix& a, const Vector& rhs) {
  const Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success) throw Error(ErrorCode::NotPositiveDefinite, "population covariance is not SPD");
  return llt.solve(rhs);
}

}  // namespace

PopulationDirections population_directions(const PopulationModel& pm) {
  check(pm);
  const double norm = pm.b.norm();
  if (norm == 0.0) throw Error(ErrorCode::ZeroVector, "population effect vector is zero");
  PopulationDirections out;
  out.w_s = pm.b / norm;
  out.w_f = solve_spd(pm.sigma.matrix(), pm.b).normalized();
  out.w_d = solve_spd(pm.noise_covariance(), pm.b).normalized();
  return out;
}

double snr(const PopulationModel& pm, const Vector& w) {
  check(pm);
  const double signal = w.dot(pm.b);
  return pm.phi_variance * signal * signal / w.dot(pm.noise_covariance() * w);
}

double max_snr(const PopulationModel& pm) {
  check(pm);
  return pm.phi_variance * pm.b.dot(solve_spd(pm.noise_covariance(), pm.b));
}

double fisher_information(const PopulationModel& pm, const Vector& w, double v_norm_sq) {
  if (pm.phi_variance == 0.0) throw Error(ErrorCode::DivisionByZero, "phi(x)^2 is zero at the evaluation point");
  return v_norm_sq / pm.phi_variance * snr(pm, w);
}

}  // namespace dea
