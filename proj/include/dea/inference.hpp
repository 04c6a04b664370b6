#pragma once

// Null distributions and p-values for the leading generalised eigenvalue, plus
// the Fisher-Z partial-correlation baseline.

#include <optional>
#include <vector>
#include <string_view>

#include "dea/dea.hpp"

namespace dea {

/// Regularised incomplete beta I_x(a, b), continued-fraction evaluation.
double incomplete_beta(double a, double b, double x);

/// CDF of the F(dfn, dfd) law.
double f_cdf(double x, double dfn, double dfd);
/// Upper tail 1 - f_cdf, evaluated without cancellation.
double f_sf(double x, double dfn, double dfd);

/// Two-sided standard normal tail probability P(|N| >= |z|).
double normal_two_sided_p(double z);

enum class TestKind { LambdaF, LambdaDBound, FisherZ };
std::string_view to_string(TestKind kind) noexcept;

struct CitResult {
  TestKind kind = TestKind::LambdaF;
  /// F-scaled eigenvalue for the eigenvalue tests, Fisher-Z score otherwise.
  double statistic = 0.0;
  /// Leading eigenvalue (eigenvalue tests) or partial correlation (Fisher-Z).
  double raw = 0.0;
  Index dfn = 1;
  Index dfd = 1;
  double p_value = 1.0;
  std::optional<double> alpha;
  std::optional<bool> reject;

  CitResult& at_level(double level);
};

/// Reference F law for the largest root: s = min(d, p) = 1 makes it exact
/// (Hotelling T^2 for p = 1, the partial F test for d = 1); for s > 1 it is the
/// usual upper-bound approximation.
struct LargestRootLaw {
  Index dfn;  // max(d, p)
  Index dfd;  // n - p - r - 1 - max(d, p) + p
};
LargestRootLaw largest_root_law(Index d, Index p, Index residual_dof);

/// p-value of the leading eigenvalue of a TF model.
CitResult test_lambda_f(const DeaModel& model);
/// Conservative p-value (upper bound) of the leading eigenvalue of a TD model:
/// the TF null law applied to lambda_D.
CitResult test_lambda_d(const DeaModel& model);

/// Fisher-Z test of X _||_ Y | Z for scalar x and y via the partial correlation.
CitResult fisher_z_test(const Vector& x, const Vector& y, const Matrix& z);
/// Per-column Fisher-Z combined by Bonferroni: p = min(1, d min_j p_j).
CitResult fisher_z_multivariate(const Vector& x, const Matrix& y, const Matrix& z);

/// Two-sample-free Kolmogorov-Smirnov statistic sup |F_n(u) - u| of a sample
/// against Uniform(0, 1), and its asymptotic p-value.
double ks_uniform_statistic(std::vector<double> sample);
double ks_p_value(double statistic, std::size_t n);

}  // namespace dea
