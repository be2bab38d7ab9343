#include "symlab/config.hpp"

#include <filesystem>
#include <set>
#include <sstream>

#include <toml.hpp>

#include "symlab/errors.hpp"
#include "symlab/snapshot_io.hpp"

namespace symlab {

Json load_config_file(const std::string& path) {
  const std::string text = read_text(path);
  if (std::filesystem::path(path).extension() == ".toml") {
    try {
      const toml::table table = toml::parse(text, path);
      std::ostringstream ss;
      ss << toml::json_formatter{table};
      return Json::parse(ss.str());
    } catch (const toml::parse_error& e) {
      throw ConfigError(path + ": " + std::string(e.description()));
    }
  }
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

void apply_override(Json& root, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override '" + assignment + "' is not of the form key=value");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  Json value;
  try {
    value = Json::parse(raw);
  } catch (const Json::parse_error&) {
    value = raw;
  }
  Json* node = &root;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ConfigError("override key '" + key + "' has an empty component");
    if (!node->is_object()) {
      if (!node->is_null()) throw ConfigError("override '" + key + "' descends into a non-object");
      *node = Json::object();
    }
    node = &(*node)[part];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  *node = std::move(value);
}

namespace {

/// Typed field access over one config section, rejecting unknown keys.
class Section {
 public:
  Section(const Json& j, std::string name) : j_(j), name_(std::move(name)) {
    if (!j_.is_null() && !j_.is_object()) throw ConfigError(name_ + " must be an object");
  }

  template <class T>
  void get(const std::string& key, T& out) {
    seen_.insert(key);
    if (j_.is_null() || !j_.contains(key) || j_.at(key).is_null()) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const Json::exception&) {
      throw ConfigError(name_ + "." + key + ": wrong type (" + j_.at(key).dump() + ")");
    }
  }

  template <class Parse, class T>
  void parse(const std::string& key, Parse parse_fn, T& out) {
    std::string s;
    get(key, s);
    if (!s.empty()) out = parse_fn(s);
  }

  const Json* child(const std::string& key) {
    seen_.insert(key);
    if (j_.is_null() || !j_.contains(key) || j_.at(key).is_null()) return nullptr;
    return &j_.at(key);
  }

  void finish() const {
    if (j_.is_null()) return;
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) throw ConfigError("unknown key " + name_ + "." + key);
    }
  }

 private:
  const Json& j_;
  std::string name_;
  std::set<std::string> seen_;
};

Matrix matrix_from_json(const Json& j, const std::string& what) {
  if (!j.is_array() || j.empty()) throw ConfigError(what + ": expected a nonempty array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  if (!j[0].is_array()) throw ConfigError(what + ": expected rows");
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    if (!j[r].is_array() || static_cast<Eigen::Index>(j[r].size()) != cols) {
      throw ConfigError(what + ": ragged rows");
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
      if (!j[r][c].is_number()) throw ConfigError(what + ": non-numeric entry");
      m(r, c) = j[r][c].get<double>();
    }
  }
  return m;
}

Json matrix_to_json(const Matrix& m) {
  Json out = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace

UnitSpec unit_from_json(const Json& j) {
  UnitSpec u;
  Section s(j, "unit");
  s.parse("kind", parse_unit_kind, u.kind);
  s.get("d", u.d);
  s.get("b", u.b);
  s.get("c", u.c);
  s.parse("sigma", parse_activation, u.sigma);
  s.finish();
  u.validate();
  return u;
}

GroupSpec group_from_json(const Json& j) {
  GroupSpec g;
  Section s(j, "group");
  s.get("name", g.name);
  s.get("n", g.n);
  s.get("file", g.file);
  s.finish();
  return g;
}

TrainConfig train_from_json(const Json& j, TrainConfig c) {
  Section s(j, "train");
  s.parse("scheme", parse_scheme, c.scheme);
  s.get("alpha", c.alpha);
  s.get("n_particles", c.n_particles);
  s.get("horizon_T", c.horizon_T);
  s.get("batch", c.batch);
  s.get("tau", c.tau);
  s.get("beta", c.beta);
  s.parse("noise_mode", parse_noise_mode, c.noise_mode);
  s.get("granularity", c.granularity);
  s.parse("loss_scale", parse_loss_scale, c.loss_scale);
  s.parse("ea_noise", parse_ea_noise, c.ea_noise);
  if (const Json* seeds = s.child("seeds")) {
    Section ss(*seeds, "train.seeds");
    ss.get("init", c.seeds.init);
    ss.get("data", c.seeds.data);
    ss.get("noise", c.seeds.noise);
    ss.get("da", c.seeds.da);
    ss.finish();
  }
  s.finish();
  return c;
}

TeacherSpec teacher_from_json(const Json& j) {
  TeacherSpec t;
  Section s(j, "teacher");
  s.parse("kind", parse_teacher_kind, t.kind);
  s.get("scale", t.scale);
  if (const Json* p = s.child("particles")) t.particles = matrix_from_json(*p, "teacher.particles");
  s.finish();
  return t;
}

ExperimentGrid grid_from_json(const Json& j) {
  ExperimentGrid g;
  Section s(j, "grid");
  s.get("n_values", g.n_values);
  if (const Json* schemes = s.child("schemes")) {
    if (!schemes->is_array()) throw ConfigError("grid.schemes must be an array");
    g.schemes.clear();
    for (const auto& name : *schemes) {
      if (!name.is_string()) throw ConfigError("grid.schemes entries must be strings");
      g.schemes.push_back(parse_scheme(name.get<std::string>()));
    }
  }
  s.parse("init_mode", parse_init_mode, g.init_mode);
  s.get("repetitions", g.repetitions);
  s.get("sigma_pi", g.sigma_pi);
  s.get("mc_points", g.mc_points);
  s.get("mc_seed", g.mc_seed);
  std::string noise;
  s.get("noise_mode", noise);
  if (!noise.empty() && noise != "auto") g.noise_mode = parse_noise_mode(noise);
  s.get("trajectory_metrics", g.trajectory_metrics);
  s.get("threads", g.threads);
  s.finish();
  g.validate();
  return g;
}

HeuristicConfig heuristic_from_json(const Json& j) {
  HeuristicConfig h;
  Section s(j, "heuristic");
  s.get("sigma_pi", h.sigma_pi);
  if (const Json* delta = s.child("delta")) {
    if (delta->is_number()) {
      h.delta_schedule = {delta->get<double>()};
    } else {
      s.get("delta", h.delta_schedule);
    }
  }
  s.get("max_dim", h.max_dim);
  s.get("max_steps", h.max_steps);
  s.get("repetitions", h.repetitions);
  s.get("init_sd", h.init_sd);
  s.parse("step_noise", parse_noise_mode, h.step_noise);
  s.finish();
  return h;
}

RunSpec run_from_json(const Json& j) {
  RunSpec r;
  Section s(j, "run");
  s.parse("init_mode", parse_init_mode, r.init_mode);
  s.get("sigma_pi", r.sigma_pi);
  s.finish();
  return r;
}

Json to_json(const UnitSpec& u) {
  Json j{{"kind", to_string(u.kind)}, {"d", u.d}, {"c", u.c}, {"sigma", to_string(u.sigma)}};
  if (u.kind == UnitKind::kAffineLayer) j["b"] = u.b;
  return j;
}

Json to_json(const GroupSpec& g) {
  Json j{{"name", g.name}, {"n", g.n}};
  if (!g.file.empty()) j["file"] = g.file;
  return j;
}

Json to_json(const TrainConfig& c) {
  return {{"scheme", to_string(c.scheme)},
          {"alpha", c.alpha},
          {"n_particles", c.n_particles},
          {"horizon_T", c.horizon_T},
          {"batch", c.batch},
          {"tau", c.tau},
          {"beta", c.beta},
          {"noise_mode", to_string(c.noise_mode)},
          {"granularity", c.granularity},
          {"loss_scale", to_string(c.loss_scale)},
          {"ea_noise", to_string(c.ea_noise)},
          {"seeds",
           {{"init", c.seeds.init}, {"data", c.seeds.data}, {"noise", c.seeds.noise},
            {"da", c.seeds.da}}}};
}

Json to_json(const TeacherSpec& t) {
  Json j{{"kind", to_string(t.kind)}, {"scale", t.scale}};
  if (t.particles) j["particles"] = matrix_to_json(*t.particles);
  return j;
}

Json to_json(const ExperimentGrid& g) {
  Json schemes = Json::array();
  for (Scheme s : g.schemes) schemes.push_back(to_string(s));
  return {{"n_values", g.n_values},
          {"schemes", schemes},
          {"init_mode", to_string(g.init_mode)},
          {"repetitions", g.repetitions},
          {"sigma_pi", g.sigma_pi},
          {"mc_points", g.mc_points},
          {"mc_seed", g.mc_seed},
          {"noise_mode", g.noise_mode ? to_string(*g.noise_mode) : "auto"},
          {"trajectory_metrics", g.trajectory_metrics},
          {"threads", g.threads}};
}

Json to_json(const HeuristicConfig& h) {
  return {{"sigma_pi", h.sigma_pi},
          {"delta", h.delta_schedule},
          {"max_dim", h.max_dim},
          {"max_steps", h.max_steps},
          {"repetitions", h.repetitions},
          {"init_sd", h.init_sd},
          {"step_noise", to_string(h.step_noise)}};
}

Json to_json(const RunSpec& r) {
  return {{"init_mode", to_string(r.init_mode)}, {"sigma_pi", r.sigma_pi}};
}

Json to_json(const GroupRepresentation& rep) {
  Json mats = Json::array();
  for (const auto& m : rep.matrices()) mats.push_back(matrix_to_json(m));
  return {{"order", rep.order()}, {"dim", rep.dim()}, {"matrices", mats}, {"cayley", rep.cayley()}};
}

GroupRepresentation rep_from_json(const Json& j) {
  if (!j.is_object()) throw StructuralError("representation must be a JSON object");
  for (const char* key : {"order", "dim", "matrices", "cayley"}) {
    if (!j.contains(key)) throw StructuralError(std::string("representation lacks '") + key + "'");
  }
  int order = 0, dim = 0;
  std::vector<std::vector<int>> cayley;
  try {
    order = j.at("order").get<int>();
    dim = j.at("dim").get<int>();
    cayley = j.at("cayley").get<std::vector<std::vector<int>>>();
  } catch (const Json::exception& e) {
    throw StructuralError(std::string("representation: ") + e.what());
  }
  const Json& mats = j.at("matrices");
  if (!mats.is_array() || static_cast<int>(mats.size()) != order) {
    throw StructuralError("representation: expected " + std::to_string(order) + " matrices");
  }
  std::vector<Matrix> matrices;
  for (const auto& m : mats) {
    Matrix mat;
    try {
      mat = matrix_from_json(m, "representation matrix");
    } catch (const ConfigError& e) {
      throw StructuralError(e.what());
    }
    if (mat.rows() != dim || mat.cols() != dim) {
      throw StructuralError("representation: matrix is not " + std::to_string(dim) + "x" +
                            std::to_string(dim));
    }
    matrices.push_back(std::move(mat));
  }
  return GroupRepresentation(std::move(matrices), std::move(cayley));
}

ActionBundle build_bundle(const GroupSpec& group, const UnitSpec& unit) {
  if (group.file.empty()) return make_named_bundle(group.name, unit, group.n);
  Json j;
  try {
    j = Json::parse(read_text(group.file));
  } catch (const Json::parse_error& e) {
    throw ConfigError(group.file + ": " + e.what());
  }
  if (j.contains("rho")) {
    auto rho = rep_from_json(j.at("rho"));
    auto rho_hat = j.contains("rho_hat") ? rep_from_json(j.at("rho_hat")) : trivial_like(rho, unit.c);
    std::optional<GroupRepresentation> eta;
    if (unit.kind == UnitKind::kAffineLayer) {
      eta = j.contains("eta") ? rep_from_json(j.at("eta")) : trivial_like(rho, unit.b);
    }
    return make_unit_bundle(unit, std::move(rho), std::move(rho_hat), std::move(eta));
  }
  auto m_action = rep_from_json(j);
  if (m_action.dim() != unit.param_dim()) {
    throw StructuralError("representation acts on R^" + std::to_string(m_action.dim()) +
                          " but the unit has D = " + std::to_string(unit.param_dim()));
  }
  auto rho = trivial_like(m_action, unit.d);
  auto rho_hat = trivial_like(m_action, unit.c);
  std::optional<GroupRepresentation> eta;
  if (unit.kind == UnitKind::kAffineLayer) eta = trivial_like(m_action, unit.b);
  return make_bundle(std::move(rho), std::move(rho_hat), std::move(eta), std::move(m_action));
}

}  // namespace symlab
