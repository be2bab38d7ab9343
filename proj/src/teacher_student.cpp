#include "symlab/teacher_student.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "symlab/errors.hpp"
#include "symlab/measures.hpp"
#include "symlab/parallel.hpp"

namespace symlab {

std::string to_string(TeacherKind kind) {
  switch (kind) {
    case TeacherKind::kArbitrary: return "arbitrary";
    case TeacherKind::kWI: return "WI";
    case TeacherKind::kSI: return "SI";
  }
  return "?";
}

TeacherKind parse_teacher_kind(const std::string& s) {
  if (s == "arbitrary") return TeacherKind::kArbitrary;
  if (s == "WI") return TeacherKind::kWI;
  if (s == "SI") return TeacherKind::kSI;
  throw ConfigError("unknown teacher kind '" + s + "' (expected arbitrary, WI, SI)");
}

Matrix default_teacher_particles() {
  Matrix t(5, 4);
  t << -1.0, 0.0, 0.0, 0.5,
       0.5, 1.0, 0.0, 1.0,
       -0.5, 0.3, 1.0, 0.0,
       0.0, -1.0, -0.5, 1.0,
       0.7, -0.7, 0.5, 0.7;
  return t;
}

Matrix default_si_teacher_coords() {
  Matrix a(5, 2);
  a << 1.0, 0.0,
       0.5, 1.0,
       -0.5, 0.3,
       0.0, -1.0,
       0.7, 0.7;
  return a;
}

ParticleEnsemble make_teacher(const TeacherSpec& spec, const UnitSpec& unit,
                              const ActionBundle& bundle) {
  unit.validate();
  const int dim = unit.param_dim();
  if (bundle.m_action.dim() != dim) throw StructuralError("teacher: bundle does not match the unit");
  if (spec.kind == TeacherKind::kSI) {
    const Matrix coords = spec.particles ? *spec.particles : default_si_teacher_coords();
    if (coords.cols() != bundle.eg_dim()) {
      throw ConfigError("SI teacher has " + std::to_string(coords.cols()) +
                        " coordinates per particle but dim(E^G) = " +
                        std::to_string(bundle.eg_dim()));
    }
    return {unit, spec.scale * coords * bundle.eg_basis.transpose()};
  }
  const Matrix base = spec.particles ? *spec.particles : default_teacher_particles();
  if (base.cols() != dim) {
    throw ConfigError("teacher particles have dimension " + std::to_string(base.cols()) +
                      ", the unit has D = " + std::to_string(dim));
  }
  ParticleEnsemble ens{unit, spec.scale * base};
  if (spec.kind == TeacherKind::kWI) return symmetrized_ensemble(ens, bundle.m_action);
  return ens;
}

namespace {

void fill_gaussian(Matrix& m, double sd, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = sd * normal(rng);
}

void label(const ParticleEnsemble& teacher, const Matrix& x, Matrix& y) {
  y.resize(x.rows(), teacher.unit.c);
  for (Eigen::Index b = 0; b < x.rows(); ++b) {
    y.row(b) = model_eval(teacher, x.row(b).transpose()).transpose();
  }
}

}  // namespace

Batch gen_batch(const ParticleEnsemble& teacher, double sigma_pi, int batch, std::uint64_t seed) {
  if (batch < 1) throw ConfigError("batch size must be >= 1");
  TeacherStream stream(teacher, sigma_pi, seed);
  Batch out;
  stream.next_batch(batch, out.x, out.y);
  return out;
}

TeacherStream::TeacherStream(ParticleEnsemble teacher, double sigma_pi, std::uint64_t seed)
    : teacher_(std::move(teacher)), sigma_pi_(sigma_pi), rng_(seed) {
  teacher_.validate();
  if (!(sigma_pi_ >= 0.0)) throw ConfigError("sigma_pi must be >= 0");
}

void TeacherStream::next_batch(int batch, Matrix& x, Matrix& y) {
  x.resize(batch, teacher_.unit.d);
  fill_gaussian(x, sigma_pi_, rng_);
  label(teacher_, x, y);
}

double l2_distance_mc(const ModelFn& a, const ModelFn& b, int d, double sigma_pi, int n_points,
                      std::uint64_t seed) {
  if (n_points < 1) throw ConfigError("n_points must be >= 1");
  std::mt19937_64 rng(seed);
  Matrix x(n_points, d);
  fill_gaussian(x, sigma_pi, rng);
  double total = 0.0;
  for (int i = 0; i < n_points; ++i) {
    const Vector xi = x.row(i).transpose();
    total += (a(xi) - b(xi)).squaredNorm();
  }
  return std::sqrt(total / n_points);
}

namespace {

RiskEstimate mean_and_error(const std::vector<double>& values) {
  const double n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var = values.size() > 1 ? var / (n - 1.0) : 0.0;
  return {mean, std::sqrt(var / n)};
}

}  // namespace

RiskEstimate risk_of(const ModelFn& model, const Batch& sample, LossScale scale) {
  if (sample.x.rows() == 0) throw ConfigError("risk: empty sample");
  std::vector<double> losses(sample.x.rows());
  for (Eigen::Index i = 0; i < sample.x.rows(); ++i) {
    losses[i] = loss(model(sample.x.row(i).transpose()), sample.y.row(i).transpose(), scale);
  }
  return mean_and_error(losses);
}

RiskEstimate risk(const ParticleEnsemble& ens, const Batch& sample, LossScale scale) {
  return risk_of([&](const Vector& x) { return model_eval(ens, x); }, sample, scale);
}

RiskEstimate risk_da(const ParticleEnsemble& ens, const ActionBundle& bundle, const Batch& sample,
                     LossScale scale) {
  if (sample.x.rows() == 0) throw ConfigError("risk: empty sample");
  const int order = bundle.group_order();
  std::vector<double> losses(sample.x.rows());
  for (Eigen::Index i = 0; i < sample.x.rows(); ++i) {
    const Vector x = sample.x.row(i).transpose();
    const Vector y = sample.y.row(i).transpose();
    double acc = 0.0;
    for (int g = 0; g < order; ++g) {
      acc += loss(model_eval(ens, bundle.rho[g] * x), bundle.rho_hat[g] * y, scale);
    }
    losses[i] = acc / order;
  }
  return mean_and_error(losses);
}

RiskEstimate risk_fa(const ParticleEnsemble& ens, const ActionBundle& bundle, const Batch& sample,
                     LossScale scale) {
  return risk_of([&](const Vector& x) { return fa_eval(ens, bundle, x); }, sample, scale);
}

RiskEstimate risk_ea(const ParticleEnsemble& ens, const ActionBundle& bundle, const Batch& sample,
                     LossScale scale) {
  const Matrix coords = ens.params * bundle.eg_basis;
  const ParticleEnsemble ea{ens.unit, coords * bundle.eg_basis.transpose()};
  return risk(ea, sample, scale);
}

void ExperimentGrid::validate() const {
  if (n_values.empty()) throw ConfigError("grid: n_values is empty");
  for (std::size_t i = 0; i < n_values.size(); ++i) {
    if (n_values[i] < 1) throw ConfigError("grid: n_values must be positive");
    if (i > 0 && n_values[i] <= n_values[i - 1]) {
      throw ConfigError("grid: n_values must be strictly increasing");
    }
  }
  if (schemes.empty()) throw ConfigError("grid: no schemes");
  if (std::set<Scheme>(schemes.begin(), schemes.end()).size() != schemes.size()) {
    throw ConfigError("grid: duplicate scheme");
  }
  if (repetitions < 1) throw ConfigError("grid: repetitions must be >= 1");
  if (!(sigma_pi >= 0.0)) throw ConfigError("grid: sigma_pi must be >= 0");
  if (mc_points < 1) throw ConfigError("grid: mc_points must be >= 1");
}

NoiseMode effective_noise_mode(const ExperimentGrid& grid, const TrainConfig& cfg) {
  if (cfg.beta == 0.0) return NoiseMode::kNone;
  if (grid.noise_mode) return *grid.noise_mode;
  return grid.init_mode == InitMode::kWIGaussian ? NoiseMode::kFull : NoiseMode::kProjected;
}

namespace {

ModelFn scheme_model(const ParticleEnsemble& ens, Scheme scheme, const ActionBundle& bundle) {
  if (scheme == Scheme::kFA) {
    return [ens, &bundle](const Vector& x) { return fa_eval(ens, bundle, x); };
  }
  return [ens](const Vector& x) { return model_eval(ens, x); };
}

struct CellMetrics {
  std::vector<std::pair<std::string, double>> values;
  long long epoch = 0;
};

void distance_metrics(const Matrix& params, const ActionBundle& bundle, long long epoch,
                      CellMetrics& out) {
  const auto mu = EmpiricalMeasure::uniform(params);
  out.epoch = epoch;
  out.values.emplace_back("rmd2_to_EG", rmd2(mu, pushforward(mu, bundle.eg_projector)));
  out.values.emplace_back("rmd2_to_G", rmd2(mu, symmetrize(mu, bundle.m_action)));
}

}  // namespace

GridResult run_grid(const ExperimentGrid& grid, const TrainConfig& cfg_template,
                    const UnitSpec& unit, const ActionBundle& bundle) {
  grid.validate();
  const ParticleEnsemble teacher = make_teacher(grid.teacher, unit, bundle);
  const std::string teacher_name = to_string(grid.teacher.kind);
  const std::string init_name = to_string(grid.init_mode);
  const NoiseMode noise = effective_noise_mode(grid, cfg_template);

  const int n_schemes = static_cast<int>(grid.schemes.size());
  const int n_cells = static_cast<int>(grid.n_values.size()) * grid.repetitions;
  std::vector<CellRun> runs(static_cast<std::size_t>(n_cells) * n_schemes);
  std::vector<std::vector<MetricRow>> cell_rows(runs.size());

  auto job = [&](int idx) {
    const int s = idx % n_schemes;
    const int cell = idx / n_schemes;
    const int rep = cell % grid.repetitions;
    const int n = grid.n_values[cell / grid.repetitions];
    const Scheme scheme = grid.schemes[s];

    TrainConfig cfg = cfg_template;
    cfg.scheme = scheme;
    cfg.n_particles = n;
    cfg.noise_mode = noise;
    cfg.seeds = cfg_template.seeds.offset(rep);
    const auto init = init_ensemble(unit, n, grid.init_mode, &bundle, cfg.seeds.init);
    TeacherStream stream(teacher, grid.sigma_pi, cfg.seeds.data);
    CellRun& run = runs[idx];
    run.n = n;
    run.repetition = rep;
    run.scheme = scheme;
    try {
      run.record = train(init, stream, cfg, &bundle);
    } catch (const DivergedRunError& e) {
      throw DivergedRunError(e.epoch(), std::string(e.what()) + " [cell N=" + std::to_string(n) +
                                            " repetition=" + std::to_string(rep) +
                                            " scheme=" + to_string(scheme) + "]");
    }

    auto& rows = cell_rows[idx];
    auto emit = [&](const std::string& name, double value, long long epoch) {
      rows.push_back({teacher_name, init_name, to_string(scheme), n, rep, name, value, epoch});
    };
    const auto& snaps = run.record.snapshots;
    for (std::size_t k = 0; k < snaps.size(); ++k) {
      if (grid.trajectory_metrics || k + 1 == snaps.size()) {
        CellMetrics m;
        distance_metrics(snaps[k].params, bundle, snaps[k].epoch, m);
        for (const auto& [name, value] : m.values) emit(name, value, m.epoch);
      }
    }
    const long long last = snaps.back().epoch;
    const ModelFn student = scheme_model(run.record.final_ensemble, scheme, bundle);
    const ModelFn teacher_fn = [&teacher](const Vector& x) { return model_eval(teacher, x); };
    const ModelFn sym_teacher = [&teacher, &bundle](const Vector& x) {
      return fa_eval(teacher, bundle, x);
    };
    const ModelFn own_sym = [&run, &bundle](const Vector& x) {
      return fa_eval(run.record.final_ensemble, bundle, x);
    };
    const std::uint64_t mc_seed = grid.mc_seed + static_cast<std::uint64_t>(rep);
    emit("l2_to_teacher",
         l2_distance_mc(student, teacher_fn, unit.d, grid.sigma_pi, grid.mc_points, mc_seed), last);
    emit("l2_to_sym_teacher",
         l2_distance_mc(student, sym_teacher, unit.d, grid.sigma_pi, grid.mc_points, mc_seed), last);
    emit("l2_to_own_sym",
         l2_distance_mc(student, own_sym, unit.d, grid.sigma_pi, grid.mc_points, mc_seed), last);
    for (const auto& snap : snaps) emit("train_loss", snap.loss, snap.epoch);
  };
  parallel_for(static_cast<int>(runs.size()), worker_count(grid.threads), job);

  // Pairwise distances between the schemes of one (N, repetition) cell.
  std::vector<std::vector<MetricRow>> pair_rows(n_cells);
  auto pair_job = [&](int cell) {
    for (int a = 0; a < n_schemes; ++a) {
      const CellRun& ra = runs[cell * n_schemes + a];
      const auto mu = EmpiricalMeasure::of(ra.record.final_ensemble);
      for (int b = a + 1; b < n_schemes; ++b) {
        const CellRun& rb = runs[cell * n_schemes + b];
        const auto nu = EmpiricalMeasure::of(rb.record.final_ensemble);
        pair_rows[cell].push_back({teacher_name, init_name, to_string(ra.scheme), ra.n,
                                   ra.repetition, "rmd2_to_" + to_string(rb.scheme),
                                   rmd2(mu, nu), ra.record.snapshots.back().epoch});
      }
    }
  };
  parallel_for(n_cells, worker_count(grid.threads), pair_job);

  GridResult result;
  for (int cell = 0; cell < n_cells; ++cell) {
    for (int s = 0; s < n_schemes; ++s) {
      auto& rows = cell_rows[cell * n_schemes + s];
      result.rows.insert(result.rows.end(), rows.begin(), rows.end());
    }
    result.rows.insert(result.rows.end(), pair_rows[cell].begin(), pair_rows[cell].end());
  }
  result.runs = std::move(runs);
  return result;
}

void write_metrics_csv(const std::string& path, const std::vector<MetricRow>& rows) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << "teacher_kind,init_mode,scheme,N,repetition,metric_name,value,epoch\n";
  char buf[64];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.17g", r.value);
    out << r.teacher_kind << ',' << r.init_mode << ',' << r.scheme << ',' << r.n << ','
        << r.repetition << ',' << r.metric_name << ',' << buf << ',' << r.epoch << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

std::vector<MetricRow> read_metrics_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path);
  std::string line;
  if (!std::getline(in, line) ||
      line != "teacher_kind,init_mode,scheme,N,repetition,metric_name,value,epoch") {
    throw IoError(path + ": unexpected metrics header");
  }
  std::vector<MetricRow> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 8) throw IoError(path + ":" + std::to_string(lineno) + ": expected 8 fields");
    try {
      rows.push_back({f[0], f[1], f[2], std::stoi(f[3]), std::stoi(f[4]), f[5], std::stod(f[6]),
                      std::stoll(f[7])});
    } catch (const std::exception&) {
      throw IoError(path + ":" + std::to_string(lineno) + ": malformed number");
    }
  }
  return rows;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("quantile of an empty set");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

double median(std::vector<double> values) { return quantile(std::move(values), 0.5); }

std::vector<MetricSummary> summarize(const std::vector<MetricRow>& rows) {
  using Key = std::tuple<std::string, std::string, std::string, int, std::string, long long>;
  std::map<Key, std::vector<double>> groups;
  std::vector<Key> order;
  for (const auto& r : rows) {
    Key key{r.teacher_kind, r.init_mode, r.scheme, r.n, r.metric_name, r.epoch};
    auto [it, inserted] = groups.try_emplace(key);
    if (inserted) order.push_back(key);
    it->second.push_back(r.value);
  }
  std::vector<MetricSummary> out;
  for (const auto& key : order) {
    const auto& v = groups[key];
    MetricSummary s;
    std::tie(s.teacher_kind, s.init_mode, s.scheme, s.n, s.metric_name, s.epoch) = key;
    s.count = static_cast<int>(v.size());
    s.median = median(v);
    s.q1 = quantile(v, 0.25);
    s.q3 = quantile(v, 0.75);
    out.push_back(std::move(s));
  }
  return out;
}

void write_summary_json(const std::string& path, const std::vector<MetricSummary>& summary) {
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& s : summary) {
    cells.push_back({{"teacher_kind", s.teacher_kind}, {"init_mode", s.init_mode},
                     {"scheme", s.scheme}, {"N", s.n}, {"metric_name", s.metric_name},
                     {"epoch", s.epoch}, {"count", s.count}, {"median", s.median},
                     {"q1", s.q1}, {"q3", s.q3}});
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << nlohmann::json{{"cells", cells}}.dump(2) << '\n';
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace symlab
