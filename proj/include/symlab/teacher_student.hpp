#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "symlab/group_rep.hpp"
#include "symlab/shallow_model.hpp"
#include "symlab/training.hpp"

namespace symlab {

enum class TeacherKind { kArbitrary, kWI, kSI };

std::string to_string(TeacherKind kind);
TeacherKind parse_teacher_kind(const std::string& s);

/// Teacher particles. Without explicit `particles` the built-in set for the
/// 2x2 matrix-sigmoid setting is used: five ambient particles for
/// arbitrary/WI, five E^G coordinate pairs for SI, all scaled by `scale`.
struct TeacherSpec {
  TeacherKind kind = TeacherKind::kWI;
  double scale = 0.5;
  /// Ambient rows (arbitrary, WI) or rows of E^G coordinates (SI), unscaled.
  std::optional<Matrix> particles = std::nullopt;
};

/// Built-in unscaled particles: 5 x 4 ambient, and 5 x 2 coordinates.
Matrix default_teacher_particles();
Matrix default_si_teacher_coords();

/// WI teachers are the orbit closure (N*|G| particles, particle-major); SI
/// teachers are coords * eg_basis^T.
ParticleEnsemble make_teacher(const TeacherSpec& spec, const UnitSpec& unit,
                              const ActionBundle& bundle);

struct Batch {
  Matrix x;  // B x d
  Matrix y;  // B x c
};

/// x ~ N(0, sigma_pi^2 I) i.i.d., y = model_eval(teacher, x).
Batch gen_batch(const ParticleEnsemble& teacher, double sigma_pi, int batch, std::uint64_t seed);

/// Infinite i.i.d. teacher-labelled stream.
class TeacherStream : public DataStream {
 public:
  TeacherStream(ParticleEnsemble teacher, double sigma_pi, std::uint64_t seed);
  void next_batch(int batch, Matrix& x, Matrix& y) override;

 private:
  ParticleEnsemble teacher_;
  double sigma_pi_;
  std::mt19937_64 rng_;
};

using ModelFn = std::function<Vector(const Vector&)>;

/// sqrt of the mean squared output difference over n_points Gaussian inputs.
double l2_distance_mc(const ModelFn& a, const ModelFn& b, int d, double sigma_pi, int n_points,
                      std::uint64_t seed);

struct RiskEstimate {
  double value = 0.0;
  double std_error = 0.0;
};

/// Monte-Carlo estimates of the unpenalized population risks on a fixed sample.
RiskEstimate risk_of(const ModelFn& model, const Batch& sample, LossScale scale);
RiskEstimate risk(const ParticleEnsemble& ens, const Batch& sample, LossScale scale);
/// Average over every g of the loss on (rho_g x, rho_hat_g y).
RiskEstimate risk_da(const ParticleEnsemble& ens, const ActionBundle& bundle, const Batch& sample,
                     LossScale scale);
RiskEstimate risk_fa(const ParticleEnsemble& ens, const ActionBundle& bundle, const Batch& sample,
                     LossScale scale);
/// Risk of the equivariant architecture whose parameters are the E^G
/// coordinates of the particles, rebuilt through the basis.
RiskEstimate risk_ea(const ParticleEnsemble& ens, const ActionBundle& bundle, const Batch& sample,
                     LossScale scale);

struct ExperimentGrid {
  std::vector<int> n_values{5, 10, 50, 100, 500, 1000, 5000};
  std::vector<Scheme> schemes{Scheme::kVanilla, Scheme::kDA, Scheme::kFA, Scheme::kEA};
  TeacherSpec teacher;
  InitMode init_mode = InitMode::kSIProjectedGaussian;
  int repetitions = 10;
  double sigma_pi = 4.0;
  int mc_points = 100;
  std::uint64_t mc_seed = 7;
  /// Unset: projected noise for SI init, full noise otherwise (none if beta = 0).
  std::optional<NoiseMode> noise_mode;
  /// Also compute the distance metrics at every snapshot, not only the last.
  bool trajectory_metrics = false;
  /// 0: SYMLAB_THREADS, else hardware concurrency.
  int threads = 0;

  void validate() const;
};

struct MetricRow {
  std::string teacher_kind;
  std::string init_mode;
  std::string scheme;
  int n = 0;
  int repetition = 0;
  std::string metric_name;
  double value = 0.0;
  long long epoch = 0;
};

struct CellRun {
  int n = 0;
  int repetition = 0;
  Scheme scheme = Scheme::kVanilla;
  RunRecord record;
};

struct GridResult {
  std::vector<MetricRow> rows;
  std::vector<CellRun> runs;
};

/// Noise mode a grid cell trains with.
NoiseMode effective_noise_mode(const ExperimentGrid& grid, const TrainConfig& cfg);

/// Trains every (N, repetition, scheme) cell of the grid. Repetition r uses
/// cfg_template.seeds.offset(r) for all schemes, so schemes share data, noise
/// and initialization. Rows are sorted by (N, repetition, scheme order).
GridResult run_grid(const ExperimentGrid& grid, const TrainConfig& cfg_template,
                    const UnitSpec& unit, const ActionBundle& bundle);

void write_metrics_csv(const std::string& path, const std::vector<MetricRow>& rows);
std::vector<MetricRow> read_metrics_csv(const std::string& path);

struct MetricSummary {
  std::string teacher_kind, init_mode, scheme, metric_name;
  int n = 0;
  long long epoch = 0;
  int count = 0;
  double median = 0.0, q1 = 0.0, q3 = 0.0;
};

/// Median and quartiles (linear interpolation) over repetitions per cell.
std::vector<MetricSummary> summarize(const std::vector<MetricRow>& rows);
void write_summary_json(const std::string& path, const std::vector<MetricSummary>& summary);

double median(std::vector<double> values);
double quantile(std::vector<double> values, double q);

}  // namespace symlab
