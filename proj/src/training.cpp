#include "symlab/training.hpp"

#include <chrono>
#include <cmath>

#include "symlab/errors.hpp"

namespace symlab {

namespace {

constexpr double kDivergenceBound = 1e6;

}  // namespace

std::string to_string(Scheme s) {
  switch (s) {
    case Scheme::kVanilla: return "vanilla";
    case Scheme::kDA: return "DA";
    case Scheme::kFA: return "FA";
    case Scheme::kEA: return "EA";
  }
  return "?";
}

std::string to_string(NoiseMode m) {
  switch (m) {
    case NoiseMode::kFull: return "full";
    case NoiseMode::kProjected: return "projected";
    case NoiseMode::kNone: return "none";
  }
  return "?";
}

std::string to_string(InitMode m) {
  switch (m) {
    case InitMode::kWIGaussian: return "WI-gaussian";
    case InitMode::kSIProjectedGaussian: return "SI-projected-gaussian";
    case InitMode::kZero: return "zero";
  }
  return "?";
}

std::string to_string(EaNoise m) {
  return m == EaNoise::kReduced ? "reduced" : "ambient-projected";
}

Scheme parse_scheme(const std::string& s) {
  if (s == "vanilla") return Scheme::kVanilla;
  if (s == "DA") return Scheme::kDA;
  if (s == "FA") return Scheme::kFA;
  if (s == "EA") return Scheme::kEA;
  throw ConfigError("unknown scheme '" + s + "' (expected vanilla, DA, FA, EA)");
}

NoiseMode parse_noise_mode(const std::string& s) {
  if (s == "full") return NoiseMode::kFull;
  if (s == "projected") return NoiseMode::kProjected;
  if (s == "none") return NoiseMode::kNone;
  throw ConfigError("unknown noise mode '" + s + "' (expected full, projected, none)");
}

InitMode parse_init_mode(const std::string& s) {
  if (s == "WI-gaussian" || s == "WI") return InitMode::kWIGaussian;
  if (s == "SI-projected-gaussian" || s == "SI") return InitMode::kSIProjectedGaussian;
  if (s == "zero") return InitMode::kZero;
  throw ConfigError("unknown init mode '" + s + "' (expected WI-gaussian, SI-projected-gaussian, zero)");
}

EaNoise parse_ea_noise(const std::string& s) {
  if (s == "reduced") return EaNoise::kReduced;
  if (s == "ambient-projected") return EaNoise::kAmbientProjected;
  throw ConfigError("unknown EA noise mode '" + s + "'");
}

long long TrainConfig::epochs() const {
  return static_cast<long long>(std::ceil(static_cast<double>(n_particles) * horizon_T - 1e-9));
}

std::vector<long long> TrainConfig::snapshot_epochs() const {
  const long long total = epochs();
  const long long stride = std::max<long long>(1, total / std::max(1, granularity));
  std::vector<long long> out;
  for (int k = 0; k < granularity && k * stride < total; ++k) out.push_back(k * stride);
  out.push_back(total);
  return out;
}

void TrainConfig::validate() const {
  if (n_particles < 1) throw ConfigError("n_particles must be >= 1");
  if (!(alpha > 0.0)) throw ConfigError("alpha must be > 0");
  if (!(horizon_T > 0.0)) throw ConfigError("horizon_T must be > 0");
  if (batch < 1) throw ConfigError("batch must be >= 1");
  if (!(tau >= 0.0)) throw ConfigError("tau must be >= 0");
  if (!(beta >= 0.0)) throw ConfigError("beta must be >= 0");
  if (granularity < 1) throw ConfigError("granularity must be >= 1");
  if ((noise_mode == NoiseMode::kNone) != (beta == 0.0)) {
    throw ConfigError("noise_mode must be 'none' exactly when beta == 0");
  }
}

CyclingDataset::CyclingDataset(Matrix x, Matrix y) : x_(std::move(x)), y_(std::move(y)) {
  if (x_.rows() == 0 || x_.rows() != y_.rows()) {
    throw StructuralError("dataset needs matching, nonempty feature and label rows");
  }
}

void CyclingDataset::next_batch(int batch, Matrix& x, Matrix& y) {
  x.resize(batch, x_.cols());
  y.resize(batch, y_.cols());
  for (int b = 0; b < batch; ++b) {
    x.row(b) = x_.row(cursor_);
    y.row(b) = y_.row(cursor_);
    cursor_ = (cursor_ + 1) % x_.rows();
  }
}

ParticleEnsemble init_ensemble(const UnitSpec& unit, int n, InitMode mode,
                               const ActionBundle* bundle, std::uint64_t seed) {
  unit.validate();
  if (n < 1) throw ConfigError("ensemble needs at least one particle");
  const int dim = unit.param_dim();
  Matrix params = Matrix::Zero(n, dim);
  if (mode == InitMode::kZero) return {unit, std::move(params)};
  if (mode == InitMode::kSIProjectedGaussian && bundle == nullptr) {
    throw ConfigError("SI initialization requires an action bundle");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 0.25);  // variance 1/16
  for (Eigen::Index k = 0; k < params.size(); ++k) params.data()[k] = normal(rng);
  if (mode == InitMode::kSIProjectedGaussian) {
    if (bundle->m_action.dim() != dim) throw StructuralError("bundle does not match the unit");
    params = params * bundle->eg_projector.transpose();
  }
  return {unit, std::move(params)};
}

TrainingState::TrainingState(ParticleEnsemble init, const TrainConfig& cfg,
                             const ActionBundle* bundle, std::optional<Matrix> noise_projector)
    : ens_(std::move(init)), cfg_(cfg), bundle_(bundle) {
  cfg_.validate();
  ens_.validate();
  const int dim = ens_.unit.param_dim();
  const bool needs_bundle = cfg_.scheme != Scheme::kVanilla ||
                            (cfg_.noise_mode == NoiseMode::kProjected && !noise_projector);
  if (needs_bundle && bundle_ == nullptr) {
    throw ConfigError("scheme " + to_string(cfg_.scheme) + " / noise " + to_string(cfg_.noise_mode) +
                      " requires an action bundle");
  }
  if (bundle_ && (bundle_->m_action.dim() != dim || bundle_->rho.dim() != ens_.unit.d ||
                  bundle_->rho_hat.dim() != ens_.unit.c)) {
    throw StructuralError("action bundle does not match the unit");
  }
  if (noise_projector) {
    if (noise_projector->rows() != dim || noise_projector->cols() != dim) {
      throw StructuralError("noise projector has the wrong shape");
    }
    noise_projector_ = std::move(*noise_projector);
  } else if (bundle_) {
    noise_projector_ = bundle_->eg_projector;
  }
  if (cfg_.scheme == Scheme::kEA) {
    coords_ = ens_.params * bundle_->eg_basis;
    ens_.params = coords_ * bundle_->eg_basis.transpose();
  }
  grad_.resize(ens_.n(), dim);
  const int order = cfg_.scheme == Scheme::kFA ? bundle_->group_order() : 1;
  act_.resize(static_cast<std::size_t>(ens_.n()) * ens_.unit.hidden_dim() * order);
}

Vector TrainingState::scheme_output(const Vector& x) const {
  if (cfg_.scheme == Scheme::kFA) return fa_eval(ens_, *bundle_, x);
  return model_eval(ens_, x);
}

double TrainingState::evaluate_loss(const Matrix& x, const Matrix& y) const {
  double total = 0.0;
  for (Eigen::Index b = 0; b < x.rows(); ++b) {
    total += loss(scheme_output(x.row(b).transpose()), y.row(b).transpose(), cfg_.loss_scale);
  }
  return total / static_cast<double>(x.rows());
}

void TrainingState::accumulate_gradient(const Vector& x, const Vector& y, double weight,
                                        double& loss_sum) {
  const UnitSpec& unit = ens_.unit;
  const int n = ens_.n();
  const double* params = ens_.params.data();
  if (cfg_.scheme != Scheme::kFA) {
    Vector y_hat = Vector::Zero(unit.c);
    kernels::forward_sum(unit, params, n, x.data(), y_hat.data(), act_.data());
    y_hat /= static_cast<double>(n);
    loss_sum += loss(y_hat, y, cfg_.loss_scale);
    const Vector lg = loss_grad(y_hat, y, cfg_.loss_scale);
    kernels::backward_accumulate(unit, params, n, x.data(), act_.data(), lg.data(), weight,
                                 grad_.data());
    return;
  }
  const int order = bundle_->group_order();
  const std::size_t act_len = static_cast<std::size_t>(n) * unit.hidden_dim();
  std::vector<Vector> gx(order);
  Vector y_hat = Vector::Zero(unit.c);
  for (int g = 0; g < order; ++g) {
    gx[g] = bundle_->rho[g] * x;
    Vector out = Vector::Zero(unit.c);
    kernels::forward_sum(unit, params, n, gx[g].data(), out.data(), act_.data() + g * act_len);
    y_hat.noalias() += bundle_->rho_hat[g].transpose() * out;
  }
  y_hat /= static_cast<double>(n) * order;
  loss_sum += loss(y_hat, y, cfg_.loss_scale);
  const Vector lg = loss_grad(y_hat, y, cfg_.loss_scale);
  for (int g = 0; g < order; ++g) {
    const Vector v = bundle_->rho_hat[g] * lg;
    kernels::backward_accumulate(unit, params, n, gx[g].data(), act_.data() + g * act_len,
                                 v.data(), weight / order, grad_.data());
  }
}

double TrainingState::sgd_step(const Matrix& x, const Matrix& y, RngStreams& rng) {
  if (x.rows() == 0 || x.rows() != y.rows()) throw StructuralError("sgd_step: empty or ragged batch");
  if (x.cols() != ens_.unit.d || y.cols() != ens_.unit.c) {
    throw StructuralError("sgd_step: batch dimensions do not match the unit");
  }
  const double step = cfg_.step_size();
  const int n = ens_.n();
  const int dim = ens_.unit.param_dim();
  const Eigen::Index batch = x.rows();
  const double weight = 1.0 / static_cast<double>(batch);

  grad_ = (2.0 * cfg_.tau) * ens_.params;
  double loss_sum = 0.0;
  for (Eigen::Index b = 0; b < batch; ++b) {
    if (cfg_.scheme == Scheme::kDA) {
      std::uniform_int_distribution<int> pick(0, bundle_->group_order() - 1);
      const int g = pick(rng.da);
      const Vector gx = bundle_->rho[g] * x.row(b).transpose();
      const Vector gy = bundle_->rho_hat[g] * y.row(b).transpose();
      accumulate_gradient(gx, gy, weight, loss_sum);
    } else {
      accumulate_gradient(x.row(b).transpose(), y.row(b).transpose(), weight, loss_sum);
    }
  }

  const double noise_scale = std::sqrt(2.0 * cfg_.beta * step);
  const bool noisy = cfg_.noise_mode != NoiseMode::kNone;
  std::normal_distribution<double> normal(0.0, 1.0);

  if (cfg_.scheme == Scheme::kEA) {
    const Matrix& basis = bundle_->eg_basis;
    coords_.noalias() -= step * (grad_ * basis);
    if (noisy) {
      if (cfg_.ea_noise == EaNoise::kReduced) {
        noise_.resize(n, basis.cols());
        for (Eigen::Index k = 0; k < noise_.size(); ++k) noise_.data()[k] = normal(rng.noise);
        coords_ += noise_scale * noise_;
      } else {
        noise_.resize(n, dim);
        for (Eigen::Index k = 0; k < noise_.size(); ++k) noise_.data()[k] = normal(rng.noise);
        coords_.noalias() += noise_scale * (noise_ * basis);
      }
    }
    ens_.params.noalias() = coords_ * basis.transpose();
  } else {
    ens_.params -= step * grad_;
    if (noisy) {
      noise_.resize(n, dim);
      for (Eigen::Index k = 0; k < noise_.size(); ++k) noise_.data()[k] = normal(rng.noise);
      if (cfg_.noise_mode == NoiseMode::kProjected) {
        ens_.params.noalias() += noise_scale * (noise_ * noise_projector_.transpose());
      } else {
        ens_.params += noise_scale * noise_;
      }
    }
  }

  ++epoch_;
  last_step_ = step;
  const double bound = ens_.params.size() ? ens_.params.cwiseAbs().maxCoeff() : 0.0;
  if (!std::isfinite(bound) || bound > kDivergenceBound) {
    throw DivergedRunError(epoch_, "training diverged at epoch " + std::to_string(epoch_) +
                                       " (max |theta| = " + std::to_string(bound) + ")");
  }
  return loss_sum * weight;
}

RunRecord train(const ParticleEnsemble& init, DataStream& data, const TrainConfig& cfg,
                const ActionBundle* bundle, const TrainOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  if (init.n() != cfg.n_particles) {
    throw ConfigError("initial ensemble has " + std::to_string(init.n()) +
                      " particles, config expects " + std::to_string(cfg.n_particles));
  }
  TrainingState state(init, cfg, bundle, options.noise_projector);
  RngStreams rng(cfg.seeds);
  RunRecord record;
  record.config = cfg;
  record.unit = init.unit;
  record.min_step = std::numeric_limits<double>::infinity();
  record.max_step = 0.0;

  const long long total = cfg.epochs();
  const auto schedule = cfg.snapshot_epochs();
  std::size_t next_snapshot = 0;
  Matrix x, y;
  for (long long k = 0; k < total; ++k) {
    data.next_batch(cfg.batch, x, y);
    if (next_snapshot < schedule.size() && schedule[next_snapshot] == k) {
      record.snapshots.push_back({k, state.ensemble().params, state.evaluate_loss(x, y)});
      ++next_snapshot;
    }
    state.sgd_step(x, y, rng);
    record.min_step = std::min(record.min_step, state.last_step_size());
    record.max_step = std::max(record.max_step, state.last_step_size());
  }
  data.next_batch(cfg.batch, x, y);
  record.snapshots.push_back({total, state.ensemble().params, state.evaluate_loss(x, y)});
  record.final_ensemble = state.ensemble();
  record.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return record;
}

}  // namespace symlab
