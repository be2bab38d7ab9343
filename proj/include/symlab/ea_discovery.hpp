#pragma once

#include <optional>
#include <string>
#include <vector>

#include "symlab/group_rep.hpp"
#include "symlab/shallow_model.hpp"
#include "symlab/training.hpp"

namespace symlab {

enum class StepDecision { kStayed, kEscaped, kSaturated };

std::string to_string(StepDecision d);

struct HeuristicConfig {
  /// Vanilla training per step; scheme and noise_mode are overridden.
  TrainConfig train = [] {
    TrainConfig c;
    c.alpha = 20.0;
    c.n_particles = 1000;
    return c;
  }();
  double sigma_pi = 4.0;
  /// delta_j; the last entry repeats for later steps.
  std::vector<double> delta_schedule{1e-2};
  /// 0: the parameter dimension D.
  int max_dim = 0;
  /// 0: D + 1, enough to saturate.
  int max_steps = 0;
  /// Independent discovery runs; run r uses the seeds shifted by r.
  int repetitions = 1;
  /// Standard deviation of the i.i.d. Gaussian init in E_j coordinates (j > 0).
  double init_sd = 0.25;
  /// Step noise when beta > 0: projected onto E_j by default; `full` or `none` also accepted.
  NoiseMode step_noise = NoiseMode::kProjected;

  double delta(int j) const;
  void validate() const;
};

/// Step seeds are the run seeds shifted by kStepSeedStride * j.
inline constexpr std::uint64_t kStepSeedStride = 1000;

struct StepRecord {
  int j = 0;
  int k = 0;                     // dim E_j the step trained in
  double rmd2_to_ej_init = 0.0;  // before training
  double rmd2_to_ej = 0.0;       // after training
  std::optional<double> rmd2_to_true_eg_init;
  std::optional<double> rmd2_to_true_eg;
  /// After an escape: the same final measure against the grown E_{j+1}.
  std::optional<double> rmd2_to_next;
  double delta = 0.0;
  StepDecision decision = StepDecision::kStayed;
  Vector v;  // mean residual in ambient coordinates (empty if stayed)
  Matrix final_params;
};

struct HeuristicState {
  int j = 0;
  Matrix basis;  // D x k_j, column-orthonormal
  std::vector<StepRecord> history;
  bool finished = false;

  int k() const { return static_cast<int>(basis.cols()); }
};

HeuristicState initial_heuristic_state(int dim);

/// One round: initialize in E_j, train, test rmd2(mu, P_{E_j}# mu) <= delta_j,
/// grow E_j by the normalized mean residual on escape. `reference` (true
/// E^G) only feeds the diagnostics in the step record.
StepDecision heuristic_step(HeuristicState& state, const ParticleEnsemble& teacher,
                            const HeuristicConfig& cfg, const ActionBundle* reference = nullptr);

/// Steps until stayed, saturated, or max_steps rounds.
HeuristicState discover(const ParticleEnsemble& teacher, const HeuristicConfig& cfg,
                        const ActionBundle* reference = nullptr);

/// Principal angles (radians, ascending) between the spans of two
/// column-orthonormal bases; min(k_a, k_b) of them.
Vector principal_angles(const Matrix& a, const Matrix& b);
/// Largest principal angle, pi/2 if the dimensions differ.
double subspace_distance(const Matrix& a, const Matrix& b);

/// Appends the normalized component of v orthogonal to span(basis).
Matrix gram_schmidt_append(const Matrix& basis, const Vector& v);

}  // namespace symlab
