#include "symlab/ea_discovery.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "symlab/errors.hpp"
#include "symlab/measures.hpp"
#include "symlab/teacher_student.hpp"

namespace symlab {

std::string to_string(StepDecision d) {
  switch (d) {
    case StepDecision::kStayed: return "stayed";
    case StepDecision::kEscaped: return "escaped";
    case StepDecision::kSaturated: return "saturated";
  }
  return "?";
}

double HeuristicConfig::delta(int j) const {
  if (delta_schedule.empty()) throw ConfigError("heuristic: empty delta schedule");
  return delta_schedule[std::min<std::size_t>(j, delta_schedule.size() - 1)];
}

void HeuristicConfig::validate() const {
  if (delta_schedule.empty()) throw ConfigError("heuristic: empty delta schedule");
  for (double d : delta_schedule) {
    if (!(d >= 0.0)) throw ConfigError("heuristic: thresholds must be >= 0");
  }
  if (max_dim < 0) throw ConfigError("heuristic: max_dim must be >= 0");
  if (max_steps < 0) throw ConfigError("heuristic: max_steps must be >= 0");
  if (repetitions < 1) throw ConfigError("heuristic: repetitions must be >= 1");
  if (!(sigma_pi >= 0.0)) throw ConfigError("heuristic: sigma_pi must be >= 0");
  if (!(init_sd >= 0.0)) throw ConfigError("heuristic: init_sd must be >= 0");
  train.validate();
}

HeuristicState initial_heuristic_state(int dim) {
  HeuristicState s;
  s.basis = Matrix::Zero(dim, 0);
  return s;
}

Matrix gram_schmidt_append(const Matrix& basis, const Vector& v) {
  Vector u = v;
  // Two passes keep the basis orthonormal to rounding level.
  for (int pass = 0; pass < 2; ++pass) {
    if (basis.cols() > 0) u -= basis * (basis.transpose() * u);
  }
  const double norm = u.norm();
  if (norm < 1e-10) throw DegenerateEscapeError("escape direction lies in the current subspace");
  Matrix out(basis.rows(), basis.cols() + 1);
  out.leftCols(basis.cols()) = basis;
  out.col(basis.cols()) = u / norm;
  return out;
}

namespace {

double rmd2_to_subspace(const Matrix& params, const Matrix& projector) {
  const auto mu = EmpiricalMeasure::uniform(params);
  return rmd2(mu, pushforward(mu, projector));
}

Matrix projector_of(const Matrix& basis) { return basis * basis.transpose(); }

}  // namespace

StepDecision heuristic_step(HeuristicState& state, const ParticleEnsemble& teacher,
                            const HeuristicConfig& cfg, const ActionBundle* reference) {
  cfg.validate();
  if (state.finished) throw ConfigError("heuristic: state already finished");
  const UnitSpec& unit = teacher.unit;
  const int dim = unit.param_dim();
  const int max_dim = cfg.max_dim > 0 ? std::min(cfg.max_dim, dim) : dim;
  if (state.basis.rows() != dim) throw StructuralError("heuristic: basis does not match the unit");
  if (state.k() >= max_dim) throw ConfigError("heuristic: subspace already at max_dim");

  const int j = state.j;
  const int k = state.k();
  TrainConfig tc = cfg.train;
  tc.scheme = Scheme::kVanilla;
  tc.noise_mode = tc.beta == 0.0 ? NoiseMode::kNone : cfg.step_noise;
  tc.seeds = cfg.train.seeds.offset(kStepSeedStride * static_cast<std::uint64_t>(j));

  const Matrix proj = projector_of(state.basis);
  ParticleEnsemble init{unit, Matrix::Zero(tc.n_particles, dim)};
  if (k > 0) {
    std::mt19937_64 rng(tc.seeds.init);
    std::normal_distribution<double> normal(0.0, cfg.init_sd);
    Matrix coords(tc.n_particles, k);
    for (Eigen::Index i = 0; i < coords.size(); ++i) coords.data()[i] = normal(rng);
    init.params = coords * state.basis.transpose();
  }

  StepRecord rec;
  rec.j = j;
  rec.k = k;
  rec.delta = cfg.delta(j);
  rec.rmd2_to_ej_init = rmd2_to_subspace(init.params, proj);
  if (reference) rec.rmd2_to_true_eg_init = rmd2_to_subspace(init.params, reference->eg_projector);

  TeacherStream stream(teacher, cfg.sigma_pi, tc.seeds.data);
  TrainOptions options;
  options.noise_projector = proj;
  const RunRecord run = train(init, stream, tc, nullptr, options);
  rec.final_params = run.final_ensemble.params;
  rec.rmd2_to_ej = rmd2_to_subspace(rec.final_params, proj);
  if (reference) rec.rmd2_to_true_eg = rmd2_to_subspace(rec.final_params, reference->eg_projector);

  if (rec.rmd2_to_ej <= rec.delta) {
    rec.decision = StepDecision::kStayed;
    state.finished = true;
  } else {
    const Matrix residual = rec.final_params - rec.final_params * proj.transpose();
    rec.v = residual.colwise().mean().transpose();
    if (rec.v.norm() < 1e-10) {
      throw DegenerateEscapeError("step " + std::to_string(j) + " escaped E_j (rmd2 = " +
                                  std::to_string(rec.rmd2_to_ej) +
                                  ") but the mean residual vanishes");
    }
    state.basis = gram_schmidt_append(state.basis, rec.v);
    rec.rmd2_to_next = rmd2_to_subspace(rec.final_params, projector_of(state.basis));
    rec.decision = state.k() >= max_dim ? StepDecision::kSaturated : StepDecision::kEscaped;
    if (rec.decision == StepDecision::kSaturated) state.finished = true;
  }
  state.history.push_back(std::move(rec));
  ++state.j;
  return state.history.back().decision;
}

HeuristicState discover(const ParticleEnsemble& teacher, const HeuristicConfig& cfg,
                        const ActionBundle* reference) {
  cfg.validate();
  const int dim = teacher.unit.param_dim();
  const int max_steps = cfg.max_steps > 0 ? cfg.max_steps : dim + 1;
  HeuristicState state = initial_heuristic_state(dim);
  for (int step = 0; step < max_steps && !state.finished; ++step) {
    heuristic_step(state, teacher, cfg, reference);
  }
  return state;
}

Vector principal_angles(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) throw StructuralError("principal angles: ambient dimensions differ");
  if (a.cols() == 0 || b.cols() == 0) return Vector(0);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(Eigen::MatrixXd(a.transpose() * b));
  const Vector s = svd.singularValues();
  Vector angles(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) angles(i) = std::acos(std::clamp(s(i), -1.0, 1.0));
  std::sort(angles.data(), angles.data() + angles.size());
  return angles;
}

double subspace_distance(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) return std::numbers::pi / 2;
  if (a.cols() == 0) return 0.0;
  return principal_angles(a, b).maxCoeff();
}

}  // namespace symlab
