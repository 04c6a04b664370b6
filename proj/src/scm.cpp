#include "dea/scm.hpp"

#include <cmath>
#include <set>
#include <string>

#include "dea/dea.hpp"

namespace dea {

std::string_view to_string(NoiseStructure s) noexcept {
  switch (s) {
    case NoiseStructure::Diagonal: return "diagonal";
    case NoiseStructure::FullRank: return "full-rank";
    case NoiseStructure::LowRank: return "low-rank";
  }
  return "diagonal";
}

std::string_view to_string(Profile p) noexcept {
  switch (p) {
    case Profile::LinearGrowth: return "linear-growth";
    case Profile::Constant: return "constant";
    case Profile::Inverse: return "inverse";
    case Profile::InverseSquare: return "inverse-square";
    case Profile::UniformRandom: return "uniform-random";
  }
  return "constant";
}

NoiseStructure noise_structure_from_string(std::string_view name) {
  if (name == "diagonal") return NoiseStructure::Diagonal;
  if (name == "full-rank") return NoiseStructure::FullRank;
  if (name == "low-rank") return NoiseStructure::LowRank;
  throw Error(ErrorCode::ConfigInvalid,
              "unknown noise_structure '" + std::string(name) + "' (expected diagonal|full-rank|low-rank)");
}

Profile profile_from_string(std::string_view name) {
  if (name == "linear-growth") return Profile::LinearGrowth;
  if (name == "constant") return Profile::Constant;
  if (name == "inverse") return Profile::Inverse;
  if (name == "inverse-square") return Profile::InverseSquare;
  if (name == "uniform-random") return Profile::UniformRandom;
  throw Error(ErrorCode::ConfigInvalid,
              "unknown profile '" + std::string(name) +
                  "' (expected linear-growth|constant|inverse|inverse-square|uniform-random)");
}

void ScmConfig::validate() const {
  if (p < 1 || d < 1 || r < 1) throw Error(ErrorCode::ConfigInvalid, "p, d and r must be positive");
  if (n < 2) throw Error(ErrorCode::ConfigInvalid, "n must be at least 2");
  if (!(u >= 0.0) || !(v >= 0.0) || !(w >= 0.0)) throw Error(ErrorCode::ConfigInvalid, "weights must be non-negative");
  if (!(u + v + w > 0.0)) throw Error(ErrorCode::ConfigInvalid, "weights u + v + w must be positive");
  if (!std::isfinite(a)) throw Error(ErrorCode::ConfigInvalid, "nonlinearity a must be finite");
  if (noise_structure == NoiseStructure::LowRank && (rank < 1 || rank > d)) {
    throw Error(ErrorCode::ConfigInvalid, "low-rank rank must lie in [1, d]");
  }
  if (sigma_diag_profile == Profile::UniformRandom) {
    throw Error(ErrorCode::ConfigInvalid, "sigma_diag_profile cannot be uniform-random");
  }
}

ScmConfig with_weights(ScmConfig cfg, std::string_view preset) {
  if (preset == "equal") {
    cfg.u = cfg.v = cfg.w = 1.0 / 3.0;
  } else if (preset == "strong_N_Y") {
    cfg.u = 0.1, cfg.v = 0.1, cfg.w = 0.8;
  } else if (preset == "strong_Z") {
    cfg.u = 0.1, cfg.v = 0.8, cfg.w = 0.1;
  } else {
    throw Error(ErrorCode::ConfigInvalid, "unknown weight preset '" + std::string(preset) + "'");
  }
  return cfg;
}

void to_json(nlohmann::json& j, const ScmConfig& cfg) {
  j = nlohmann::json{{"p", cfg.p},
                     {"d", cfg.d},
                     {"r", cfg.r},
                     {"n", cfg.n},
                     {"u", cfg.u},
                     {"v", cfg.v},
                     {"w", cfg.w},
                     {"a", cfg.a},
                     {"noise_structure", std::string(to_string(cfg.noise_structure))},
                     {"rank", cfg.rank},
                     {"sigma_diag_profile", std::string(to_string(cfg.sigma_diag_profile))},
                     {"b_profile", std::string(to_string(cfg.b_profile))},
                     {"independent_xz", cfg.independent_xz},
                     {"seed", cfg.seed}};
}

void from_json(const nlohmann::json& j, ScmConfig& cfg) {
  static const std::set<std::string> known{"p", "d", "r", "n", "u", "v", "w", "a", "noise_structure", "rank",
                                           "sigma_diag_profile", "b_profile", "independent_xz", "seed"};
  if (!j.is_object()) throw Error(ErrorCode::ConfigInvalid, "SCM config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw Error(ErrorCode::ConfigInvalid, "unknown SCM config key '" + key + "'");
  }
  try {
    if (j.contains("p")) cfg.p = j.at("p").get<Index>();
    if (j.contains("d")) cfg.d = j.at("d").get<Index>();
    if (j.contains("r")) cfg.r = j.at("r").get<Index>();
    if (j.contains("n")) cfg.n = j.at("n").get<Index>();
    if (j.contains("u")) cfg.u = j.at("u").get<double>();
    if (j.contains("v")) cfg.v = j.at("v").get<double>();
    if (j.contains("w")) cfg.w = j.at("w").get<double>();
    if (j.contains("a")) cfg.a = j.at("a").get<double>();
    if (j.contains("noise_structure")) cfg.noise_structure = noise_structure_from_string(j.at("noise_structure").get<std::string>());
    if (j.contains("rank")) cfg.rank = j.at("rank").get<Index>();
    if (j.contains("sigma_diag_profile")) cfg.sigma_diag_profile = profile_from_string(j.at("sigma_diag_profile").get<std::string>());
    if (j.contains("b_profile")) cfg.b_profile = profile_from_string(j.at("b_profile").get<std::string>());
    if (j.contains("independent_xz")) cfg.independent_xz = j.at("independent_xz").get<bool>();
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigInvalid, std::string("malformed SCM config: ") + e.what());
  }
}

Vector profile_vector(Profile profile, Index d, Rng* rng) {
  Vector out(d);
  for (Index k = 0; k < d; ++k) {
    const double i = static_cast<double>(k + 1);
    switch (profile) {
      case Profile::LinearGrowth: out(k) = i; break;
      case Profile::Constant: out(k) = 1.0; break;
      case Profile::Inverse: out(k) = 1.0 / i; break;
      case Profile::InverseSquare: out(k) = 1.0 / (i * i); break;
      case Profile::UniformRandom:
        if (rng == nullptr) throw Error(ErrorCode::ConfigInvalid, "uniform-random profile needs a random stream");
        out(k) = std::uniform_real_distribution<double>(0.0, 1.0)(*rng);
        break;
    }
  }
  return out;
}

SymMatrixd build_sigma(NoiseStructure structure, Index d, Profile profile, std::uint64_t seed, Index rank) {
  if (d < 1) throw Error(ErrorCode::ConfigInvalid, "d must be positive");
  if (structure == NoiseStructure::Diagonal) {
    if (profile == Profile::UniformRandom) throw Error(ErrorCode::ConfigInvalid, "diagonal Sigma needs a deterministic profile");
    return SymMatrixd(Matrix(profile_vector(profile, d).asDiagonal()));
  }
  Rng rng(seed);
  Index cols = d;
  double floor = 0.1;
  if (structure == NoiseStructure::LowRank) {
    if (rank < 1 || rank > d) throw Error(ErrorCode::ConfigInvalid, "low-rank rank must lie in [1, d]");
    cols = rank;
    floor = 1e-3;
  }
  const Matrix factor = standard_normal(d, cols, rng);
  Matrix sigma = factor * factor.transpose();
  sigma.diagonal().array() += floor;
  sigma *= static_cast<double>(d) / sigma.trace();
  return SymMatrixd(sigma);
}

double f_a(double a, double z) noexcept {
  if (a == 0.0) return z;
  return std::exp(-z * z / 2.0) * std::sin(a * z);
}

namespace {

Matrix apply_f(double a, Matrix m) {
  if (a != 0.0) m = m.unaryExpr([a](double z) { return f_a(a, z); });
  return m;
}

constexpr std::uint64_t kCoefficientStream = 0;
constexpr std::uint64_t kSigmaStream = 5;
constexpr std::uint64_t kPsiStream = 3;
constexpr std::uint64_t kPhiStream = 4;

}  // namespace

SymMatrixd sigma_psi_estimate(const ScmConfig& cfg, Index mc_samples) {
  cfg.validate();
  if (mc_samples < 1000) throw Error(ErrorCode::ConfigInvalid, "sigma_psi_estimate needs at least 1000 draws");
  const ScmModel model(cfg);
  Rng rng(derive_seed(cfg.seed, kPsiStream));
  const Matrix z = standard_normal(mc_samples, cfg.r, rng);
  const Matrix psi = cfg.v * apply_f(cfg.a, z * model.d_matrix());
  return sample_covariance(psi);
}

ScmModel::ScmModel(const ScmConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  Rng rng(derive_seed(cfg_.seed, kCoefficientStream));
  gamma_ = uniform01(cfg_.p, 1, rng);
  c_ = uniform01(cfg_.r, cfg_.p, rng);
  d_ = uniform01(cfg_.r, cfg_.d, rng);
  b_ = profile_vector(cfg_.b_profile, cfg_.d, &rng);
  sigma_ = build_sigma(cfg_.noise_structure, cfg_.d, cfg_.sigma_diag_profile, derive_seed(cfg_.seed, kSigmaStream),
                       cfg_.rank);
  sigma_factor_ = cholesky(sigma_);
}

ScmSample ScmModel::draw(Index n, std::uint64_t stream_seed) const {
  if (n < 2) throw Error(ErrorCode::ConfigInvalid, "n must be at least 2");
  Rng rng(stream_seed);
  const Matrix nz = standard_normal(n, cfg_.r, rng);
  const Matrix nx = standard_normal(n, cfg_.p, rng);
  const Matrix ny = standard_normal(n, cfg_.d, rng);

  ScmSample out;
  out.data.z = nz;
  out.data.x = cfg_.independent_xz ? nx : Matrix(apply_f(cfg_.a, nz * c_) + nx);
  out.phi_x = apply_f(cfg_.a, out.data.x * gamma_);
  out.data.y = cfg_.u * out.phi_x * b_.transpose() + cfg_.v * apply_f(cfg_.a, nz * d_) +
               cfg_.w * ny * sigma_factor_.transpose();
  return out;
}

PopulationModel ScmModel::population(Index mc_samples) const {
  PopulationModel pm;
  pm.b = cfg_.u * b_;
  pm.sigma = SymMatrixd(cfg_.w * cfg_.w * sigma_.matrix());
  if (cfg_.a == 0.0) {
    pm.sigma_psi = SymMatrixd(cfg_.v * cfg_.v * d_.transpose() * d_);
    const Matrix x_cov = cfg_.independent_xz ? Matrix::Identity(cfg_.p, cfg_.p)
                                             : Matrix(c_.transpose() * c_ + Matrix::Identity(cfg_.p, cfg_.p));
    pm.phi_variance = gamma_.dot(x_cov * gamma_);
  } else {
    pm.sigma_psi = sigma_psi_estimate(cfg_, mc_samples);
    Rng rng(derive_seed(cfg_.seed, kPhiStream));
    const Matrix nz = standard_normal(mc_samples, cfg_.r, rng);
    const Matrix nx = standard_normal(mc_samples, cfg_.p, rng);
    const Matrix x = cfg_.independent_xz ? nx : Matrix(apply_f(cfg_.a, nz * c_) + nx);
    const Vector phi = apply_f(cfg_.a, x * gamma_);
    pm.phi_variance = (phi.array() - phi.mean()).square().sum() / static_cast<double>(mc_samples - 1);
  }
  return pm;
}

ScmSample sample(const ScmConfig& cfg) {
  const ScmModel model(cfg);
  ScmSample out = model.draw(cfg.n, model.training_stream());
  out.population = model.population();
  return out;
}

}  // namespace dea
