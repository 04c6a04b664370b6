#pragma once

// Seedable simulator for the structural causal model
//   Z := N_z,  X := f_a(C^T Z) + N_x,  Y := u b f_a(Gamma^T X) + v f_a(D^T Z) + w N_y
// with N_x, N_z standard normal, N_y ~ N(0, Sigma), Gamma, C, D ~ U[0, 1] and
// f_a(z) = exp(-z^2 / 2) sin(a z) (identity when a = 0).

#include <cstdint>
#include <string_view>

#include "dea/population.hpp"
#include "dea/random.hpp"
#include "dea/types.hpp"
#include "json.hpp"

namespace dea {

enum class NoiseStructure { Diagonal, FullRank, LowRank };
enum class Profile { LinearGrowth, Constant, Inverse, InverseSquare, UniformRandom };

std::string_view to_string(NoiseStructure s) noexcept;
std::string_view to_string(Profile p) noexcept;
NoiseStructure noise_structure_from_string(std::string_view name);
Profile profile_from_string(std::string_view name);

struct ScmConfig {
  Index p = 1;
  Index d = 5;
  Index r = 1;
  Index n = 500;
  double u = 1.0 / 3.0;
  double v = 1.0 / 3.0;
  double w = 1.0 / 3.0;
  double a = 0.0;
  NoiseStructure noise_structure = NoiseStructure::Diagonal;
  Index rank = 10;  // low-rank only
  Profile sigma_diag_profile = Profile::Constant;
  Profile b_profile = Profile::Constant;
  bool independent_xz = false;
  std::uint64_t seed = 0;

  /// Throws ConfigInvalid on non-positive dimensions, negative weights, an
  /// all-zero weight vector or rank outside [1, d].
  void validate() const;
};

/// Weight presets (u, v, w): equal, strong_N_Y and strong_Z.
ScmConfig with_weights(ScmConfig cfg, std::string_view preset);

void to_json(nlohmann::json& j, const ScmConfig& cfg);
/// Missing keys keep their defaults; unknown keys are rejected.
void from_json(const nlohmann::json& j, ScmConfig& cfg);

/// Entries (1..d) of the named profile: i, 1, 1/i or 1/i^2; uniform-random
/// draws U[0, 1) from `rng`.
Vector profile_vector(Profile profile, Index d, Rng* rng = nullptr);

/// Noise covariance: diag(profile) for the diagonal structure; A A^T + 0.1 I
/// (A d x d) or A A^T + 1e-3 I (A d x rank) with standard normal A drawn from
/// `seed`, trace-normalised to d.
SymMatrixd build_sigma(NoiseStructure structure, Index d, Profile profile, std::uint64_t seed, Index rank = 10);

double f_a(double a, double z) noexcept;

/// Monte-Carlo covariance of v f_a(D^T Z) over `mc_samples` fresh Z draws.
SymMatrixd sigma_psi_estimate(const ScmConfig& cfg, Index mc_samples);

struct ScmSample {
  DataTriplet data;
  Vector phi_x;  // f_a(Gamma^T X)
  PopulationModel population;
};

/// Coefficient draws for one configuration; samples of any size can be drawn
/// from independent noise streams, e.g. a held-out set with the same model.
class ScmModel {
 public:
  explicit ScmModel(const ScmConfig& cfg);

  const ScmConfig& config() const noexcept { return cfg_; }
  const Vector& gamma() const noexcept { return gamma_; }   // p
  const Matrix& c() const noexcept { return c_; }           // r x p
  const Matrix& d_matrix() const noexcept { return d_; }    // r x d
  const Vector& b() const noexcept { return b_; }           // d
  const SymMatrixd& sigma() const noexcept { return sigma_; }

  /// n observations from the noise stream seeded with `stream_seed`.
  ScmSample draw(Index n, std::uint64_t stream_seed) const;

  /// Population model: b = u b, Sigma = w^2 Sigma, Sigma_psi = v^2 D^T D and
  /// phi_variance = Var(Gamma^T X) in the linear case, Monte-Carlo otherwise.
  PopulationModel population(Index mc_samples = 100000) const;

  /// Stream seeds used by sample(): training noise and Monte-Carlo oracles.
  std::uint64_t training_stream() const noexcept { return derive_seed(cfg_.seed, 1); }
  std::uint64_t heldout_stream(std::uint64_t k = 0) const noexcept { return derive_seed(cfg_.seed, 2, k); }

 private:
  ScmConfig cfg_;
  Vector gamma_;
  Matrix c_;
  Matrix d_;
  Vector b_;
  SymMatrixd sigma_;
  Matrix sigma_factor_;  // lower Cholesky factor of Sigma
};

/// cfg.n observations from the training stream of cfg.seed.
ScmSample sample(const ScmConfig& cfg);

}  // namespace dea
