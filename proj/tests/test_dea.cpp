#include <gtest/gtest.h>

#include "dea/dea.hpp"
#include "dea/population.hpp"
#include "dea/scm.hpp"
#include "test_util.hpp"

namespace dea {
namespace {

using regression::RegressorSpec;
using test::abs_cosine;

// Y = X b^T + Z D + N L^T with scalar X and Z, N standard normal.
DataTriplet linear_data(const Vector& b, const Matrix& sigma, const RowVector& z_effect, Index n, std::uint64_t seed) {
  Rng rng(seed);
  const Index d = b.size();
  DataTriplet data;
  data.x = standard_normal(n, 1, rng);
  data.z = standard_normal(n, 1, rng);
  const Matrix l = sigma.llt().matrixL();
  data.y = data.x * b.transpose() + data.z * z_effect + standard_normal(n, d, rng) * l.transpose();
  return data;
}

const Vector kB = Eigen::Vector2d(1.0, 1.0);
const Matrix kSigma = Eigen::Vector2d(4.0, 0.5).asDiagonal();

TEST(ResidualCovariances, NullCaseGapShrinks) {
  Rng rng(41);
  const Index n = 4000;
  DataTriplet data{standard_normal(n, 1, rng), standard_normal(n, 3, rng), standard_normal(n, 1, rng)};
  const auto cov = residual_covariances(data, RegressorSpec::ols());
  EXPECT_LE((cov.sigma_res.matrix() - cov.sigma_full.matrix()).norm() / cov.sigma_res.matrix().norm(),
            3.0 / std::sqrt(static_cast<double>(n)));
}

TEST(ResidualCovariances, PerfectRestrictedFitIsZero) {
  Rng rng(42);
  DataTriplet data;
  data.x = standard_normal(50, 1, rng);
  data.z = standard_normal(50, 2, rng);
  data.y = data.z * standard_normal(2, 3, rng);
  const auto cov = residual_covariances(data, RegressorSpec::ols());
  EXPECT_LE(cov.sigma_res.matrix().cwiseAbs().maxCoeff(), 1e-20);
  EXPECT_LE(cov.sigma_full.matrix().cwiseAbs().maxCoeff(), 1e-20);
}

TEST(ResidualCovariances, ExcessApproachesSignalOuterProduct) {
  ScmConfig cfg;
  cfg.d = 4;
  cfg.n = 20000;
  cfg.seed = 43;
  const auto s = sample(cfg);
  const auto cov = residual_covariances(s.data, RegressorSpec::ols());
  // Var(phi(X) | Z) = Gamma^T Gamma once Z is regressed out.
  ScmModel model(cfg);
  const double cond_var = model.gamma().squaredNorm();
  const Matrix truth = cond_var * s.population.b * s.population.b.transpose();
  EXPECT_LE((cov.excess() - truth).norm() / truth.norm(), 0.05);
}

TEST(ResidualCovariances, NestedExcessIsPsd) {
  Rng rng(44);
  DataTriplet data{standard_normal(200, 2, rng), standard_normal(200, 5, rng), standard_normal(200, 1, rng)};
  const auto cov = residual_covariances(data, RegressorSpec::ols());
  const auto eig = sym_eig(SymMatrixd(cov.excess()));
  EXPECT_GE(eig.eigenvalues(eig.eigenvalues.size() - 1), -1e-8 * cov.sigma_res.matrix().norm());
  ASSERT_TRUE(cov.sigma_noise.has_value());
  EXPECT_FALSE(residual_covariances(data, RegressorSpec::knn(5)).sigma_noise.has_value());
}

TEST(FitDea, IsotropicAllDirectionsAgree) {
  const Vector b = Eigen::Vector3d(1.0, 2.0, -1.0);
  const auto data = linear_data(b, Matrix::Identity(3, 3), RowVector::Zero(3), 20000, 45);
  const Vector ws = fit_dea(data, StatisticKind::TS, RegressorSpec::ols()).w.col(0);
  const Vector wf = fit_dea(data, StatisticKind::TF, RegressorSpec::ols()).w.col(0);
  const Vector wd = fit_dea(data, StatisticKind::TD, RegressorSpec::ols()).w.col(0);
  EXPECT_GE(abs_cosine(ws, wf), 0.99);
  EXPECT_GE(abs_cosine(ws, wd), 0.99);
  EXPECT_GE(abs_cosine(wf, wd), 0.99);
  EXPECT_GE(abs_cosine(ws, b), 0.99);
}

TEST(FitDea, AnisotropicNoiseTiltsTfAndTd) {
  const auto data = linear_data(kB, kSigma, RowVector::Zero(2), 20000, 46);
  const Vector target = Eigen::Vector2d(1.0, 8.0);
  EXPECT_GE(abs_cosine(fit_dea(data, StatisticKind::TF, RegressorSpec::ols()).w.col(0), target), 0.99);
  EXPECT_GE(abs_cosine(fit_dea(data, StatisticKind::TD, RegressorSpec::ols()).w.col(0), target), 0.99);
  EXPECT_GE(abs_cosine(fit_dea(data, StatisticKind::TS, RegressorSpec::ols()).w.col(0), kB), 0.99);
}

TEST(FitDea, ComponentPrefixIsBitwiseStable) {
  Rng rng(47);
  DataTriplet data{standard_normal(300, 1, rng), standard_normal(300, 5, rng), standard_normal(300, 1, rng)};
  data.y.col(0) += 2.0 * data.x.col(0);
  for (auto kind : {StatisticKind::TS, StatisticKind::TF, StatisticKind::TD, StatisticKind::PCCA}) {
    const auto one = fit_dea(data, kind, RegressorSpec::ols(), 1);
    const auto three = fit_dea(data, kind, RegressorSpec::ols(), 3);
    EXPECT_EQ(one.w.col(0), three.w.col(0)) << to_string(kind);
    EXPECT_EQ(one.eigenvalues(0), three.eigenvalues(0)) << to_string(kind);
  }
}

TEST(FitDea, DeflatedComponentsOrthonormal) {
  Rng rng(48);
  DataTriplet data{standard_normal(400, 2, rng), standard_normal(400, 6, rng), standard_normal(400, 1, rng)};
  data.y += data.x * standard_normal(2, 6, rng);
  for (auto kind : {StatisticKind::TS, StatisticKind::TF, StatisticKind::TD, StatisticKind::PCCA}) {
    const auto model = fit_dea(data, kind, RegressorSpec::ols(), 4);
    EXPECT_LE((model.w.transpose() * model.w - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff(), 1e-8);
    for (Index k = 0; k < 4; ++k) EXPECT_GE(model.eigenvalues(k), -1e-8);
    if (kind == StatisticKind::TS) {
      for (Index k = 1; k < 4; ++k) EXPECT_LE(model.eigenvalues(k), model.eigenvalues(k - 1) + 1e-8);
    }
  }
}

TEST(FitDea, RayleighConsistencyWithoutRidge) {
  Rng rng(49);
  DataTriplet data{standard_normal(500, 1, rng), standard_normal(500, 4, rng), standard_normal(500, 2, rng)};
  data.y += data.x * standard_normal(1, 4, rng) * 0.3;
  for (auto kind : {StatisticKind::TS, StatisticKind::TF, StatisticKind::TD}) {
    const auto model = fit_dea(data, kind, RegressorSpec::ols(), 1, 0.0);
    const double top = statistic_value(model, model.w.col(0));
    EXPECT_NEAR(top, model.leading_eigenvalue(), 1e-10);
    for (int t = 0; t < 1000; ++t) {
      EXPECT_LE(statistic_value(model.covariances, random_unit_vector(4, rng), kind), top + 1e-8);
    }
  }
}

TEST(FitDea, ConservativenessOrdering) {
  Rng rng(50);
  for (int t = 0; t < 10; ++t) {
    DataTriplet data{standard_normal(200, 1, rng), standard_normal(200, 4, rng), standard_normal(200, 1, rng)};
    data.y += data.z * standard_normal(1, 4, rng);
    const auto tf = fit_dea(data, StatisticKind::TF, RegressorSpec::ols(), 1, 0.0);
    const auto td = fit_dea(data, StatisticKind::TD, RegressorSpec::ols(), 1, 0.0);
    EXPECT_LE(td.leading_eigenvalue(), tf.leading_eigenvalue() + 1e-10);
  }
}

TEST(FitDea, DegreesOfFreedom) {
  Rng rng(51);
  DataTriplet data{standard_normal(100, 2, rng), standard_normal(100, 3, rng), standard_normal(100, 4, rng)};
  const auto model = fit_dea(data, StatisticKind::TF, RegressorSpec::ols());
  EXPECT_EQ(model.dfn, 3);
  EXPECT_EQ(model.dfd, 100 - 2 - 4 - 1);
}

TEST(FitDea, Errors) {
  Rng rng(52);
  DataTriplet data{standard_normal(50, 1, rng), standard_normal(50, 3, rng), standard_normal(50, 1, rng)};
  EXPECT_THROW(fit_dea(data, StatisticKind::TF, RegressorSpec::ols(), 4), Error);
  EXPECT_THROW(fit_dea(data, StatisticKind::TF, RegressorSpec::ols(), 0), Error);
  try {
    fit_dea(data, StatisticKind::TD, RegressorSpec::knn(5));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnsupportedRegressor);
  }
  DataTriplet exact = data;
  exact.y = data.x * RowVector::Ones(3);
  try {
    fit_dea(exact, StatisticKind::TF, RegressorSpec::ols(), 1, 0.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotPositiveDefinite);
  }
}

TEST(FitDea, KnnRegressorRuns) {
  Rng rng(53);
  DataTriplet data{standard_normal(300, 1, rng), standard_normal(300, 3, rng), standard_normal(300, 1, rng)};
  data.y.col(1) += 3.0 * data.x.col(0).array().sin().matrix();
  const auto model = fit_dea(data, StatisticKind::TF, RegressorSpec::knn(10));
  EXPECT_GE(std::abs(model.w(1, 0)), 0.9);
}

TEST(FitFromCovariances, MatchesFitDea) {
  Rng rng(54);
  DataTriplet data{standard_normal(300, 1, rng), standard_normal(300, 4, rng), standard_normal(300, 1, rng)};
  data.y += data.x * standard_normal(1, 4, rng);
  const auto cov = residual_covariances(data, RegressorSpec::ols());
  for (auto kind : {StatisticKind::TS, StatisticKind::TF, StatisticKind::TD}) {
    const auto a = fit_dea(data, kind, RegressorSpec::ols());
    const auto b = fit_from_covariances(cov, kind, RegressorSpec::ols());
    EXPECT_EQ(a.w, b.w);
    EXPECT_EQ(a.eigenvalues, b.eigenvalues);
    EXPECT_EQ(a.dfd, b.dfd);
  }
}

TEST(Pcca, ScalarReductionIsSquaredCorrelation) {
  Rng rng(55);
  DataTriplet data{standard_normal(80, 1, rng), standard_normal(80, 1, rng), Matrix(80, 0)};
  data.y += 0.5 * data.x;
  const double rho = test::sample_corr(data.x.col(0), data.y.col(0));
  EXPECT_NEAR(pcca_fit(data, RegressorSpec::ols(), 1, 0.0).leading_eigenvalue(), rho * rho, 1e-10);
}

TEST(Pcca, PerfectCorrelation) {
  Rng rng(56);
  DataTriplet data{standard_normal(60, 1, rng), Matrix(), Matrix(60, 0)};
  data.y = 3.0 * data.x.array() - 1.0;
  EXPECT_NEAR(pcca_fit(data, RegressorSpec::ols(), 1, 0.0).leading_eigenvalue(), 1.0, 1e-8);
}

TEST(Pcca, IndependentXzAlignsWithNoiseWhitenedB) {
  ScmConfig cfg;
  cfg.d = 4;
  cfg.n = 20000;
  cfg.independent_xz = true;
  cfg.sigma_diag_profile = Profile::LinearGrowth;
  cfg.seed = 57;
  const auto s = sample(cfg);
  const auto dirs = population_directions(s.population);
  const auto model = pcca_fit(s.data, RegressorSpec::ols());
  EXPECT_GE(abs_cosine(model.w.col(0), dirs.w_f), 0.95);
  EXPECT_LE(model.leading_eigenvalue(), 1.0 + 1e-8);
  EXPECT_EQ(model.x_directions.rows(), 1);
}

TEST(Pcca, NeedsEnoughRows) {
  Rng rng(58);
  DataTriplet data{standard_normal(5, 1, rng), standard_normal(5, 4, rng), standard_normal(5, 1, rng)};
  EXPECT_THROW(pcca_fit(data, RegressorSpec::ols()), Error);
}

TEST(StatisticValue, NullAndAnisotropicNumbers) {
  ResidualCovariances same;
  same.sigma_full = SymMatrixd(kSigma);
  same.sigma_res = SymMatrixd(kSigma);
  same.sigma_noise = SymMatrixd(kSigma);
  const Vector w = Eigen::Vector2d(0.6, 0.8);
  for (auto kind : {StatisticKind::TS, StatisticKind::TF, StatisticKind::TD}) {
    EXPECT_EQ(statistic_value(same, w, kind), 0.0);
  }
  ResidualCovariances cov = same;
  cov.sigma_res = SymMatrixd(Matrix(kSigma + kB * kB.transpose()));
  const Vector wf = Eigen::Vector2d(1.0, 8.0).normalized();
  EXPECT_NEAR(statistic_value(cov, wf, StatisticKind::TF), 2.25, 1e-12);
  cov.sigma_noise.reset();
  EXPECT_THROW(statistic_value(cov, wf, StatisticKind::TD), Error);
}

TEST(Project, BasicIdentities) {
  Rng rng(59);
  DataTriplet data{standard_normal(100, 1, rng), standard_normal(100, 4, rng), standard_normal(100, 1, rng)};
  auto model = fit_dea(data, StatisticKind::TF, RegressorSpec::ols(), 2);
  const Matrix y = standard_normal(7, 4, rng);
  const Matrix p = project(model, y);
  EXPECT_LE((project(model, Matrix(y * model.w * model.w.transpose())) - p).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(project(model, Matrix::Zero(3, 4)), Matrix::Zero(3, 2));
  model.w = Matrix::Identity(4, 1);
  EXPECT_EQ(project(model, y), y.col(0));
  EXPECT_THROW(project(model, Matrix(2, 3)), Error);
}

TEST(Decompose, ExactSplit) {
  Rng rng(60);
  DataTriplet data{standard_normal(100, 1, rng), standard_normal(100, 3, rng), standard_normal(100, 1, rng)};
  const auto model = fit_dea(data, StatisticKind::TS, RegressorSpec::ols());
  const Vector b = Eigen::Vector3d(1.0, -2.0, 0.5);
  const Matrix parallel = standard_normal(5, 1, rng) * b.transpose();
  auto split = decompose_effect(model, parallel, b);
  EXPECT_LE(split.internal.cwiseAbs().maxCoeff(), 1e-12);
  Eigen::Vector3d ortho = Eigen::Vector3d(2.0, 1.0, 0.0);
  split = decompose_effect(model, Matrix(standard_normal(5, 1, rng) * ortho.transpose()), b);
  EXPECT_LE(split.forced.cwiseAbs().maxCoeff(), 1e-12);
  const Matrix y = standard_normal(20, 3, rng);
  split = decompose_effect(model, y, b);
  EXPECT_LE((split.forced + split.internal - y).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE((split.internal * b).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_THROW(decompose_effect(model, y, Vector::Zero(3)), Error);
}

TEST(EffectDirection, RecoversB) {
  const auto data = linear_data(kB, kSigma, RowVector::Ones(2), 5000, 61);
  EXPECT_GE(abs_cosine(effect_direction(data, RegressorSpec::ols()), kB), 0.99);
  EXPECT_NEAR(effect_direction(data, RegressorSpec::ols()).norm(), 1.0, 1e-14);
}

TEST(StatisticKind, Names) {
  EXPECT_EQ(statistic_kind_from_string("TF"), StatisticKind::TF);
  EXPECT_EQ(statistic_kind_from_string("pcca"), StatisticKind::PCCA);
  EXPECT_THROW(statistic_kind_from_string("tc"), Error);
}

}  // namespace
}  // namespace dea
