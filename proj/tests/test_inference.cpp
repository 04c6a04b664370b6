#include <gtest/gtest.h>

#include "dea/inference.hpp"
#include "dea/scm.hpp"
#include "f_oracle.hpp"
#include "test_util.hpp"

namespace dea {
namespace {

using regression::RegressorSpec;

TEST(FDistribution, KnownValues) {
  EXPECT_EQ(f_cdf(0.0, 3, 7), 0.0);
  EXPECT_NEAR(f_cdf(1.0, 1, 1), 0.5, 1e-12);
  EXPECT_NEAR(f_cdf(1.0, 4, 4), 0.5, 1e-12);
  EXPECT_EQ(f_sf(0.0, 2, 2), 1.0);
  // F(2, 2) has CDF x / (1 + x).
  EXPECT_NEAR(f_cdf(3.0, 2, 2), 0.75, 1e-14);
  EXPECT_EQ(f_cdf(std::numeric_limits<double>::infinity(), 2, 5), 1.0);
}

TEST(FDistribution, MatchesQuadrature) {
  Rng rng(71);
  std::uniform_real_distribution<double> xs(0.01, 6.0);
  std::uniform_int_distribution<int> dfs(1, 60);
  for (int t = 0; t < 50; ++t) {
    const double x = xs(rng);
    const double a = dfs(rng);
    const double b = dfs(rng);
    EXPECT_NEAR(f_cdf(x, a, b), test::f_cdf_quadrature(x, a, b), 1e-10) << x << " " << a << " " << b;
  }
}

TEST(FDistribution, MonotoneAndBounded) {
  double prev = 0.0;
  for (double x = 0.0; x < 50.0; x += 0.25) {
    const double c = f_cdf(x, 5, 17);
    EXPECT_GE(c, prev);
    EXPECT_LT(c, 1.0);
    prev = c;
  }
}

TEST(FDistribution, ReciprocalDuality) {
  Rng rng(72);
  std::uniform_real_distribution<double> xs(0.05, 10.0);
  std::uniform_int_distribution<int> dfs(1, 40);
  for (int t = 0; t < 100; ++t) {
    const double x = xs(rng);
    const double a = dfs(rng);
    const double b = dfs(rng);
    EXPECT_NEAR(f_cdf(x, a, b), 1.0 - f_cdf(1.0 / x, b, a), 1e-10);
  }
}

TEST(FDistribution, TailWithoutCancellation) {
  const double sf = f_sf(200.0, 5, 500);
  EXPECT_GT(sf, 0.0);
  EXPECT_LT(sf, 1e-100);
  EXPECT_NEAR(f_sf(2.0, 3, 9) + f_cdf(2.0, 3, 9), 1.0, 1e-14);
}

TEST(FDistribution, DomainErrors) {
  EXPECT_THROW(f_cdf(-1.0, 1, 1), Error);
  EXPECT_THROW(f_cdf(1.0, 0, 1), Error);
  EXPECT_THROW(incomplete_beta(1.0, 1.0, 1.5), Error);
}

TEST(IncompleteBeta, UniformAndSymmetry) {
  EXPECT_NEAR(incomplete_beta(1.0, 1.0, 0.3), 0.3, 1e-15);
  EXPECT_NEAR(incomplete_beta(2.5, 4.0, 0.4), 1.0 - incomplete_beta(4.0, 2.5, 0.6), 1e-14);
}

DeaModel fake_model(StatisticKind kind, double lambda, Index n, Index d) {
  DeaModel m;
  m.kind = kind;
  m.w = Matrix::Identity(d, 1);
  m.eigenvalues = Vector::Constant(1, lambda);
  m.covariances.sigma_full = SymMatrixd::identity(d);
  m.covariances.sigma_res = SymMatrixd::identity(d);
  m.covariances.n_samples = n;
  m.covariances.p = 1;
  m.covariances.r = 1;
  m.dfn = d;
  m.dfd = n - 3;
  return m;
}

TEST(LambdaTests, ZeroEigenvalueGivesUnitPValue) {
  EXPECT_EQ(test_lambda_f(fake_model(StatisticKind::TF, 0.0, 100, 4)).p_value, 1.0);
  EXPECT_EQ(test_lambda_d(fake_model(StatisticKind::TD, 0.0, 100, 4)).p_value, 1.0);
}

TEST(LambdaTests, SharedLaw) {
  const auto f = test_lambda_f(fake_model(StatisticKind::TF, 0.07, 200, 5));
  const auto d = test_lambda_d(fake_model(StatisticKind::TD, 0.07, 200, 5));
  EXPECT_EQ(f.p_value, d.p_value);
  EXPECT_EQ(f.kind, TestKind::LambdaF);
  EXPECT_EQ(d.kind, TestKind::LambdaDBound);
}

TEST(LambdaTests, ScalarOutcomeIsPartialFTest) {
  // d = p = 1: (dfd) lambda ~ F(1, n - 3), the classical nested-model F.
  const auto r = test_lambda_f(fake_model(StatisticKind::TF, 0.02, 100, 1));
  EXPECT_EQ(r.dfn, 1);
  EXPECT_EQ(r.dfd, 97);
  EXPECT_NEAR(r.statistic, 97 * 0.02, 1e-14);
  EXPECT_NEAR(r.p_value, f_sf(97 * 0.02, 1, 97), 1e-15);
}

TEST(LambdaTests, HotellingScaling) {
  // p = 1, d > 1: ((m - d + 1) / d) lambda ~ F(d, m - d + 1), m = n - p - r - 1.
  const auto r = test_lambda_f(fake_model(StatisticKind::TF, 0.05, 500, 20));
  EXPECT_EQ(r.dfn, 20);
  EXPECT_EQ(r.dfd, 497 - 20 + 1);
  EXPECT_NEAR(r.statistic, 478.0 / 20.0 * 0.05, 1e-14);
}

TEST(LambdaTests, Errors) {
  EXPECT_THROW(test_lambda_f(fake_model(StatisticKind::TD, 0.1, 100, 2)), Error);
  EXPECT_THROW(test_lambda_d(fake_model(StatisticKind::TF, 0.1, 100, 2)), Error);
  try {
    test_lambda_f(fake_model(StatisticKind::TF, 0.1, 3, 2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InsufficientSamples);
  }
}

TEST(LambdaTests, Level) {
  auto r = test_lambda_f(fake_model(StatisticKind::TF, 0.5, 100, 2));
  r.at_level(0.05);
  EXPECT_TRUE(r.reject.value());
  EXPECT_THROW(r.at_level(1.5), Error);
}

TEST(LambdaTests, AffineInvarianceOfTf) {
  Rng rng(73);
  DataTriplet data{standard_normal(200, 1, rng), standard_normal(200, 4, rng), standard_normal(200, 1, rng)};
  data.y.col(0) += 0.2 * data.x.col(0);
  const auto base = test_lambda_f(fit_dea(data, StatisticKind::TF, RegressorSpec::ols(), 1, 0.0));
  DataTriplet mixed = data;
  const Matrix a = test::random_spd(4, rng);
  mixed.y = (data.y * a).array() + 3.0;
  const auto moved = test_lambda_f(fit_dea(mixed, StatisticKind::TF, RegressorSpec::ols(), 1, 0.0));
  EXPECT_NEAR(base.p_value, moved.p_value, 1e-8);
}

TEST(FisherZ, PerfectCorrelationClamped) {
  Rng rng(74);
  const Vector x = standard_normal(50, 1, rng);
  const auto r = fisher_z_test(x, x, Matrix(50, 0));
  EXPECT_NEAR(r.raw, 1.0, 1e-11);
  EXPECT_TRUE(std::isfinite(r.statistic));
  EXPECT_LT(r.p_value, 1e-100);
  EXPECT_EQ(r.dfd, 47);
}

TEST(FisherZ, IndependentSmallCorrelation) {
  Rng rng(75);
  int small = 0;
  for (int t = 0; t < 100; ++t) {
    const auto r = fisher_z_test(standard_normal(5000, 1, rng), standard_normal(5000, 1, rng), Matrix(5000, 0));
    small += std::abs(r.raw) <= 0.05 ? 1 : 0;
  }
  EXPECT_GE(small, 99);
}

TEST(FisherZ, PartialsOutZ) {
  Rng rng(76);
  const Matrix z = standard_normal(3000, 1, rng);
  const Vector x = z + standard_normal(3000, 1, rng);
  const Vector y = z + standard_normal(3000, 1, rng);
  EXPECT_GT(test::sample_corr(x, y), 0.4);
  EXPECT_LT(std::abs(fisher_z_test(x, y, z).raw), 0.08);
}

TEST(FisherZ, MultivariateBonferroni) {
  Rng rng(77);
  const Vector x = standard_normal(100, 1, rng);
  const Vector y = 0.2 * x + standard_normal(100, 1, rng);
  const Matrix z = standard_normal(100, 1, rng);
  const auto single = fisher_z_test(x, y, z);
  const auto one = fisher_z_multivariate(x, y, z);
  EXPECT_EQ(one.p_value, single.p_value);
  Matrix same(100, 3);
  same << y, y, y;
  EXPECT_NEAR(fisher_z_multivariate(x, same, z).p_value, std::min(1.0, 3.0 * single.p_value), 1e-15);
  EXPECT_THROW(fisher_z_test(standard_normal(4, 1, rng), standard_normal(4, 1, rng), Matrix(4, 1)), Error);
}

TEST(Ks, UniformGridAndShift) {
  std::vector<double> grid;
  for (int i = 0; i < 1000; ++i) grid.push_back((i + 0.5) / 1000.0);
  EXPECT_NEAR(ks_uniform_statistic(grid), 0.0005, 1e-12);
  EXPECT_GT(ks_p_value(ks_uniform_statistic(grid), grid.size()), 0.99);
  for (auto& g : grid) g = g * g;
  EXPECT_LT(ks_p_value(ks_uniform_statistic(grid), grid.size()), 1e-10);
}

TEST(Ks, CalibratedOnUniformDraws) {
  Rng rng(78);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int rejections = 0;
  for (int t = 0; t < 200; ++t) {
    std::vector<double> s(500);
    for (auto& v : s) v = u(rng);
    rejections += ks_p_value(ks_uniform_statistic(s), s.size()) < 0.05 ? 1 : 0;
  }
  EXPECT_LE(rejections, 22);
  EXPECT_GE(rejections, 2);
}

}  // namespace
}  // namespace dea
