#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "symlab/group_rep.hpp"
#include "symlab/linalg.hpp"
#include "symlab/shallow_model.hpp"

namespace symlab {

enum class Scheme { kVanilla, kDA, kFA, kEA };
enum class NoiseMode { kFull, kProjected, kNone };
enum class InitMode { kWIGaussian, kSIProjectedGaussian, kZero };
/// How EA draws its Langevin noise: k Gaussians in the reduced basis, or D
/// ambient Gaussians projected onto E^G (shares the stream with other schemes).
enum class EaNoise { kReduced, kAmbientProjected };

std::string to_string(Scheme s);
std::string to_string(NoiseMode m);
std::string to_string(InitMode m);
std::string to_string(EaNoise m);
Scheme parse_scheme(const std::string& s);
NoiseMode parse_noise_mode(const std::string& s);
InitMode parse_init_mode(const std::string& s);
EaNoise parse_ea_noise(const std::string& s);

struct Seeds {
  std::uint64_t init = 0;
  std::uint64_t data = 1;
  std::uint64_t noise = 2;
  std::uint64_t da = 3;

  /// Every stream shifted by `k` (repetition index, heuristic step, ...).
  Seeds offset(std::uint64_t k) const { return {init + k, data + k, noise + k, da + k}; }
  bool operator==(const Seeds&) const = default;
};

struct TrainConfig {
  Scheme scheme = Scheme::kVanilla;
  double alpha = 50.0;  // varsigma == alpha
  int n_particles = 100;
  double horizon_T = 20.0;
  int batch = 20;
  double tau = 1e-4;
  double beta = 1e-6;
  NoiseMode noise_mode = NoiseMode::kFull;
  int granularity = 5;
  Seeds seeds;
  LossScale loss_scale = LossScale::kOne;
  EaNoise ea_noise = EaNoise::kReduced;

  /// s_k^N = eps_N * varsigma = alpha / N.
  double step_size() const { return alpha / n_particles; }
  /// N_e = ceil(N * T).
  long long epochs() const;
  /// Snapshot epochs: 0, stride, 2 stride, ... (gr of them) and N_e, with
  /// stride = floor(N_e / gr).
  std::vector<long long> snapshot_epochs() const;
  void validate() const;
};

/// Source of training minibatches: X is B x d, Y is B x c.
class DataStream {
 public:
  virtual ~DataStream() = default;
  virtual void next_batch(int batch, Matrix& x, Matrix& y) = 0;
};

/// A finite dataset consumed in order, wrapping around at the end.
class CyclingDataset : public DataStream {
 public:
  CyclingDataset(Matrix x, Matrix y);
  void next_batch(int batch, Matrix& x, Matrix& y) override;

 private:
  Matrix x_, y_;
  Eigen::Index cursor_ = 0;
};

ParticleEnsemble init_ensemble(const UnitSpec& unit, int n, InitMode mode,
                               const ActionBundle* bundle, std::uint64_t seed);

struct RngStreams {
  std::mt19937_64 noise;
  std::mt19937_64 da;
  explicit RngStreams(const Seeds& seeds) : noise(seeds.noise), da(seeds.da) {}
};

/// One SGD/SGLD trajectory: the ensemble plus, for EA, its coordinates in
/// the E^G basis.
class TrainingState {
 public:
  /// `noise_projector` overrides the bundle projector for projected noise.
  TrainingState(ParticleEnsemble init, const TrainConfig& cfg, const ActionBundle* bundle,
                std::optional<Matrix> noise_projector = std::nullopt);

  const ParticleEnsemble& ensemble() const { return ens_; }
  /// EA only: N x k coordinates with ensemble().params == coords * basis^T.
  const Matrix& reduced_coords() const { return coords_; }
  long long epoch() const { return epoch_; }

  /// Applies one update on the minibatch and returns the minibatch loss at
  /// the pre-update parameters (augmented samples for DA).
  double sgd_step(const Matrix& x, const Matrix& y, RngStreams& rng);

  /// Loss of the scheme's model on a batch without touching any stream.
  double evaluate_loss(const Matrix& x, const Matrix& y) const;

  double last_step_size() const { return last_step_; }

 private:
  void accumulate_gradient(const Vector& x, const Vector& y, double weight, double& loss_sum);
  Vector scheme_output(const Vector& x) const;

  ParticleEnsemble ens_;
  TrainConfig cfg_;
  const ActionBundle* bundle_;
  Matrix noise_projector_;
  Matrix coords_;  // EA only
  Matrix grad_;
  Matrix noise_;
  std::vector<double> act_;
  long long epoch_ = 0;
  double last_step_ = 0.0;
};

struct Snapshot {
  long long epoch = 0;
  Matrix params;
  double loss = 0.0;  // scheme loss on a fresh minibatch at these parameters
};

struct RunRecord {
  TrainConfig config;
  UnitSpec unit;
  std::vector<Snapshot> snapshots;
  ParticleEnsemble final_ensemble;
  double min_step = 0.0;
  double max_step = 0.0;
  double wall_seconds = 0.0;
};

struct TrainOptions {
  std::optional<Matrix> noise_projector;
};

/// Runs N_e epochs of sgd_step over fresh minibatches; deterministic given seeds.
RunRecord train(const ParticleEnsemble& init, DataStream& data, const TrainConfig& cfg,
                const ActionBundle* bundle, const TrainOptions& options = {});

}  // namespace symlab
