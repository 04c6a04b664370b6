#include "dea/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "dea/regression.hpp"

namespace dea {

namespace {

constexpr int kMaxFractionTerms = 100000;
constexpr double kFractionEps = 1e-16;
constexpr double kTiny = 1e-300;

// Modified Lentz evaluation of the continued fraction for I_x(a, b).
double beta_fraction(double a, double b, double x) {
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxFractionTerms; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kFractionEps) return h;
  }
  throw Error(ErrorCode::NoConvergence, "incomplete beta continued fraction did not converge");
}

// x^a (1-x)^b / (a B(a, b)), with 1 - x supplied separately to avoid cancellation.
double beta_prefactor(double a, double b, double x, double one_minus_x) {
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) +
                           b * std::log(one_minus_x);
  return std::exp(log_front) / a;
}

double incomplete_beta_split(double a, double b, double x, double one_minus_x) {
  if (x <= 0.0) return 0.0;
  if (one_minus_x <= 0.0) return 1.0;
  if (x < (a + 1.0) / (a + b + 2.0)) return beta_prefactor(a, b, x, one_minus_x) * beta_fraction(a, b, x);
  return 1.0 - beta_prefactor(b, a, one_minus_x, x) * beta_fraction(b, a, one_minus_x);
}

void check_f_args(double x, double dfn, double dfd) {
  if (!(x >= 0.0)) throw Error(ErrorCode::DomainError, "F argument must be >= 0, got " + std::to_string(x));
  if (!(dfn > 0.0) || !(dfd > 0.0)) throw Error(ErrorCode::DomainError, "F degrees of freedom must be positive");
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw Error(ErrorCode::DomainError, "incomplete beta needs a, b > 0");
  if (!(x >= 0.0 && x <= 1.0)) throw Error(ErrorCode::DomainError, "incomplete beta needs x in [0, 1]");
  return incomplete_beta_split(a, b, x, 1.0 - x);
}

double f_cdf(double x, double dfn, double dfd) {
  check_f_args(x, dfn, dfd);
  if (std::isinf(x)) return 1.0;
  const double denom = dfn * x + dfd;
  return incomplete_beta_split(dfn / 2.0, dfd / 2.0, dfn * x / denom, dfd / denom);
}

double f_sf(double x, double dfn, double dfd) {
  check_f_args(x, dfn, dfd);
  if (std::isinf(x)) return 0.0;
  const double denom = dfn * x + dfd;
  return incomplete_beta_split(dfd / 2.0, dfn / 2.0, dfd / denom, dfn * x / denom);
}

double normal_two_sided_p(double z) { return std::erfc(std::abs(z) / std::sqrt(2.0)); }

std::string_view to_string(TestKind kind) noexcept {
  switch (kind) {
    case TestKind::LambdaF: return "lambda-F";
    case TestKind::LambdaDBound: return "lambda-D-bound";
    case TestKind::FisherZ: return "fisher-z";
  }
  return "lambda-F";
}

CitResult& CitResult::at_level(double level) {
  if (!(level > 0.0 && level < 1.0)) throw Error(ErrorCode::DomainError, "alpha must lie in (0, 1)");
  alpha = level;
  reject = p_value < level;
  return *this;
}

LargestRootLaw largest_root_law(Index d, Index p, Index residual_dof) {
  const Index big = std::max(d, p);
  return {big, residual_dof - big + p};
}

namespace {

CitResult eigenvalue_test(const DeaModel& model, TestKind kind) {
  const Index n = model.n_samples();
  const Index p = model.covariances.p;
  const Index r = model.covariances.r;
  if (n <= p + r + 1) {
    throw Error(ErrorCode::InsufficientSamples,
                "eigenvalue test needs n > p + r + 1 (n = " + std::to_string(n) + ")");
  }
  const auto law = largest_root_law(model.d(), p, model.dfd);
  if (law.dfd < 1) {
    throw Error(ErrorCode::InsufficientSamples,
                "eigenvalue test needs n >= p + r + max(d, p) + 1 - p + 1 (n = " + std::to_string(n) +
                    ", d = " + std::to_string(model.d()) + ")");
  }
  CitResult out;
  out.kind = kind;
  out.raw = model.leading_eigenvalue();
  out.dfn = law.dfn;
  out.dfd = law.dfd;
  out.statistic = std::max(0.0, static_cast<double>(law.dfd) / static_cast<double>(law.dfn) * out.raw);
  out.p_value = std::clamp(f_sf(out.statistic, static_cast<double>(law.dfn), static_cast<double>(law.dfd)), 0.0, 1.0);
  return out;
}

Vector residualise(const Vector& v, const Matrix& z) {
  const auto model = regression::fit(regression::RegressorSpec::ols(), z, v);
  return regression::residuals(model, z, v);
}

}  // namespace

CitResult test_lambda_f(const DeaModel& model) {
  if (model.kind != StatisticKind::TF) {
    throw Error(ErrorCode::WrongStatisticKind, "lambda-F test needs a TF model, got " + std::string(to_string(model.kind)));
  }
  return eigenvalue_test(model, TestKind::LambdaF);
}

CitResult test_lambda_d(const DeaModel& model) {
  if (model.kind != StatisticKind::TD) {
    throw Error(ErrorCode::WrongStatisticKind, "lambda-D test needs a TD model, got " + std::string(to_string(model.kind)));
  }
  return eigenvalue_test(model, TestKind::LambdaDBound);
}

CitResult fisher_z_test(const Vector& x, const Vector& y, const Matrix& z) {
  const Index n = x.size();
  if (y.size() != n || z.rows() != n) throw Error(ErrorCode::DimensionMismatch, "x, y and z must share n");
  if (n <= z.cols() + 3) throw Error(ErrorCode::InsufficientSamples, "Fisher-Z needs n > r + 3");
  const Vector rx = residualise(x, z);
  const Vector ry = residualise(y, z);
  const Vector cx = rx.array() - rx.mean();
  const Vector cy = ry.array() - ry.mean();
  const double denom = std::sqrt(cx.squaredNorm() * cy.squaredNorm());
  double rho = denom > 0.0 ? cx.dot(cy) / denom : 0.0;
  constexpr double kClamp = 1.0 - 1e-12;
  rho = std::clamp(rho, -kClamp, kClamp);

  CitResult out;
  out.kind = TestKind::FisherZ;
  out.raw = rho;
  out.dfn = 1;
  out.dfd = n - z.cols() - 3;
  out.statistic = std::sqrt(static_cast<double>(out.dfd)) * std::atanh(rho);
  out.p_value = std::clamp(normal_two_sided_p(out.statistic), 0.0, 1.0);
  return out;
}

CitResult fisher_z_multivariate(const Vector& x, const Matrix& y, const Matrix& z) {
  if (y.cols() < 1) throw Error(ErrorCode::DimensionMismatch, "outcome has no columns");
  CitResult best;
  for (Index j = 0; j < y.cols(); ++j) {
    const CitResult col = fisher_z_test(x, y.col(j), z);
    if (j == 0 || col.p_value < best.p_value) best = col;
  }
  best.dfn = y.cols();
  best.p_value = std::min(1.0, static_cast<double>(y.cols()) * best.p_value);
  return best;
}

double ks_uniform_statistic(std::vector<double> sample) {
  if (sample.empty()) throw Error(ErrorCode::InsufficientSamples, "KS statistic of an empty sample");
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double sup = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double u = std::clamp(sample[i], 0.0, 1.0);
    sup = std::max({sup, (static_cast<double>(i) + 1.0) / n - u, u - static_cast<double>(i) / n});
  }
  return sup;
}

double ks_p_value(double statistic, std::size_t n) {
  const double root = std::sqrt(static_cast<double>(n));
  const double lambda = (root + 0.12 + 0.11 / root) * statistic;
  if (lambda < 1e-3) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 200; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? 2.0 : -2.0) * term;
    if (term < 1e-18) break;
  }
  return std::clamp(sum, 0.0, 1.0);
}

}  // namespace dea
