#include "symlab/cli.hpp"

#include <filesystem>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "symlab/config.hpp"
#include "symlab/ea_discovery.hpp"
#include "symlab/errors.hpp"
#include "symlab/measures.hpp"
#include "symlab/parallel.hpp"
#include "symlab/snapshot_io.hpp"
#include "symlab/teacher_student.hpp"
#include "symlab/validate.hpp"

namespace symlab {

namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config_path;
  std::string out_dir;
  std::vector<std::string> overrides;
  int threads = 0;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("-c,--config", c.config_path, "JSON or TOML config file");
  cmd->add_option("-o,--out", c.out_dir, "output directory")->required();
  cmd->add_option("-s,--set", c.overrides, "dotted key=value override (repeatable)");
  cmd->add_option("-j,--threads", c.threads, "worker count (default $SYMLAB_THREADS)");
}

Json load_with_overrides(const Common& c) {
  Json root = c.config_path.empty() ? Json::object() : load_config_file(c.config_path);
  if (!root.is_object()) throw ConfigError("config root must be an object");
  for (const auto& o : c.overrides) apply_override(root, o);
  return root;
}

const Json& section(const Json& root, const std::string& key) {
  static const Json kNull;
  return root.contains(key) ? root.at(key) : kNull;
}

void reject_unknown_sections(const Json& root, std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : root.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError("unknown config section '" + key + "'");
  }
}

TeacherSpec require_teacher(const Json& root) {
  if (!root.contains("teacher") || root.at("teacher").is_null()) {
    throw ConfigError("missing teacher spec (config section 'teacher')");
  }
  return teacher_from_json(root.at("teacher"));
}

void make_out_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir + ": " + ec.message());
}

std::string path_in(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

int cmd_subspace(const std::string& group, const std::string& rep_file, int n, const UnitSpec& unit,
                 const std::string& out_dir, std::ostream& out) {
  GroupSpec spec{group, n, rep_file};
  const ActionBundle bundle = build_bundle(spec, unit);
  out << "D=" << unit.param_dim() << "\n";
  out << "dim(E^G)=" << bundle.eg_dim() << "\n";
  if (rep_file.empty()) {
    if (const auto expected = closed_form_eg_dim(group, unit, n)) {
      out << "closed-form dim(E^G)=" << *expected
          << (*expected == bundle.eg_dim() ? " (match)" : " (MISMATCH)") << "\n";
    }
  }
  if (!out_dir.empty()) {
    make_out_dir(out_dir);
    write_matrix_csv(path_in(out_dir, "basis.csv"), bundle.eg_basis);
    write_matrix_csv(path_in(out_dir, "projector.csv"), bundle.eg_projector);
  }
  return kExitOk;
}

int cmd_run(const Common& c, std::ostream& out) {
  const Json root = load_with_overrides(c);
  reject_unknown_sections(root, {"unit", "group", "train", "teacher", "run"});
  const UnitSpec unit = unit_from_json(section(root, "unit"));
  const GroupSpec group = group_from_json(section(root, "group"));
  const TrainConfig cfg = train_from_json(section(root, "train"));
  const TeacherSpec teacher_spec = require_teacher(root);
  const RunSpec run = run_from_json(section(root, "run"));
  cfg.validate();

  Json resolved{{"unit", to_json(unit)}, {"group", to_json(group)}, {"train", to_json(cfg)},
                {"teacher", to_json(teacher_spec)}, {"run", to_json(run)}};
  make_out_dir(c.out_dir);
  write_text(path_in(c.out_dir, "config.resolved.json"), resolved.dump(2) + "\n");

  const ActionBundle bundle = build_bundle(group, unit);
  const ParticleEnsemble teacher = make_teacher(teacher_spec, unit, bundle);
  const auto init = init_ensemble(unit, cfg.n_particles, run.init_mode, &bundle, cfg.seeds.init);
  TeacherStream stream(teacher, run.sigma_pi, cfg.seeds.data);
  const RunRecord record = train(init, stream, cfg, &bundle);
  write_run_dir(c.out_dir, record, resolved.dump(2) + "\n");

  const auto mu = EmpiricalMeasure::of(record.final_ensemble);
  out << "epochs=" << cfg.epochs() << " final_loss=" << record.snapshots.back().loss
      << " rmd2_to_EG=" << rmd2(mu, pushforward(mu, bundle.eg_projector)) << "\n";
  return kExitOk;
}

int cmd_sweep(const Common& c, bool run_dirs, std::ostream& out) {
  const Json root = load_with_overrides(c);
  reject_unknown_sections(root, {"unit", "group", "train", "teacher", "grid"});
  const UnitSpec unit = unit_from_json(section(root, "unit"));
  const GroupSpec group = group_from_json(section(root, "group"));
  const TrainConfig cfg = train_from_json(section(root, "train"));
  const TeacherSpec teacher_spec = require_teacher(root);
  ExperimentGrid grid = grid_from_json(section(root, "grid"));
  if (c.threads > 0) grid.threads = c.threads;
  cfg.validate();

  Json resolved{{"unit", to_json(unit)}, {"group", to_json(group)}, {"train", to_json(cfg)},
                {"teacher", to_json(teacher_spec)}, {"grid", to_json(grid)}};
  resolved["grid"]["threads"] = 0;  // parallelism does not change results
  make_out_dir(c.out_dir);
  write_text(path_in(c.out_dir, "config.resolved.json"), resolved.dump(2) + "\n");

  grid.teacher = teacher_spec;
  const ActionBundle bundle = build_bundle(group, unit);
  const GridResult result = run_grid(grid, cfg, unit, bundle);
  write_metrics_csv(path_in(c.out_dir, "metrics.csv"), result.rows);
  write_summary_json(path_in(c.out_dir, "summary.json"), summarize(result.rows));
  if (run_dirs) {
    for (const auto& run : result.runs) {
      Json cell = resolved;
      cell["train"] = to_json(run.record.config);
      const std::string name = "N" + std::to_string(run.n) + "_rep" +
                               std::to_string(run.repetition) + "_" + to_string(run.scheme);
      write_run_dir(path_in(path_in(c.out_dir, "runs"), name), run.record, cell.dump(2) + "\n");
    }
  }
  out << "cells=" << result.runs.size() << " rows=" << result.rows.size() << "\n";
  return kExitOk;
}

Json optional_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

Json vector_json(const Vector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

int cmd_discover(const Common& c, std::ostream& out) {
  const Json root = load_with_overrides(c);
  reject_unknown_sections(root, {"unit", "group", "train", "teacher", "heuristic"});
  const UnitSpec unit = unit_from_json(section(root, "unit"));
  const GroupSpec group = group_from_json(section(root, "group"));
  const TeacherSpec teacher_spec = require_teacher(root);
  HeuristicConfig cfg = heuristic_from_json(section(root, "heuristic"));
  cfg.train = train_from_json(section(root, "train"), cfg.train);
  cfg.validate();

  Json resolved{{"unit", to_json(unit)}, {"group", to_json(group)}, {"train", to_json(cfg.train)},
                {"teacher", to_json(teacher_spec)}, {"heuristic", to_json(cfg)}};
  make_out_dir(c.out_dir);
  write_text(path_in(c.out_dir, "config.resolved.json"), resolved.dump(2) + "\n");

  const ActionBundle bundle = build_bundle(group, unit);
  const ParticleEnsemble teacher = make_teacher(teacher_spec, unit, bundle);
  std::vector<HeuristicState> states(cfg.repetitions);
  parallel_for(cfg.repetitions, worker_count(c.threads), [&](int r) {
    HeuristicConfig rc = cfg;
    rc.train.seeds = cfg.train.seeds.offset(r);
    states[r] = discover(teacher, rc, &bundle);
  });

  Json runs = Json::array();
  for (int r = 0; r < cfg.repetitions; ++r) {
    const HeuristicState& st = states[r];
    Json steps = Json::array();
    for (const auto& rec : st.history) {
      steps.push_back({{"j", rec.j},
                       {"k_j", rec.k},
                       {"delta", rec.delta},
                       {"rmd2_to_Ej_init", rec.rmd2_to_ej_init},
                       {"rmd2_to_Ej", rec.rmd2_to_ej},
                       {"rmd2_to_true_EG_init", optional_json(rec.rmd2_to_true_eg_init)},
                       {"rmd2_to_true_EG", optional_json(rec.rmd2_to_true_eg)},
                       {"rmd2_to_next", optional_json(rec.rmd2_to_next)},
                       {"decision", to_string(rec.decision)},
                       {"escaped", rec.decision != StepDecision::kStayed},
                       {"v", vector_json(rec.v)}});
      write_matrix_csv(path_in(c.out_dir, "steps/rep" + std::to_string(r) + "_step" +
                                              std::to_string(rec.j) + "_final.csv"),
                       rec.final_params);
    }
    const std::string basis_name = "basis_rep" + std::to_string(r) + ".csv";
    write_matrix_csv(path_in(c.out_dir, basis_name), st.basis);
    if (r == 0) write_matrix_csv(path_in(c.out_dir, "basis.csv"), st.basis);
    const Json decision = st.history.empty() ? Json(nullptr) : Json(to_string(st.history.back().decision));
    runs.push_back({{"repetition", r},
                    {"steps", steps},
                    {"final_k", st.k()},
                    {"final_decision", decision},
                    {"basis_file", basis_name},
                    {"true_eg_dim", bundle.eg_dim()},
                    {"principal_angles", vector_json(principal_angles(st.basis, bundle.eg_basis))},
                    {"subspace_distance", subspace_distance(st.basis, bundle.eg_basis)}});
    out << "repetition " << r << ": k=" << st.k() << " steps=" << st.history.size()
        << " largest angle to E^G=" << subspace_distance(st.basis, bundle.eg_basis) << "\n";
  }
  write_text(path_in(c.out_dir, "discovery.json"), Json{{"runs", runs}}.dump(2) + "\n");
  return kExitOk;
}

int cmd_validate(const std::vector<std::string>& rep_files,
                 const std::vector<std::string>& snapshots, std::ostream& out) {
  auto rows = run_property_suite();
  for (const auto& f : rep_files) {
    Json j;
    try {
      j = Json::parse(read_text(f));
    } catch (const Json::parse_error& e) {
      throw IoError(f + ": " + e.what());
    }
    rows.push_back(check_representation(f, rep_from_json(j)));
  }
  for (const auto& f : snapshots) {
    const Matrix m = read_matrix_csv(f);
    const bool finite = m.allFinite();
    rows.push_back({"snapshot " + f, finite,
                    std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                        (finite ? "" : ", non-finite entries")});
  }
  out << format_table(rows);
  const auto failed = std::count_if(rows.begin(), rows.end(), [](const auto& r) { return !r.passed; });
  out << (rows.size() - failed) << "/" << rows.size() << " checks passed\n";
  return failed ? kExitConfig : kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Symmetry-leveraging training laboratory for shallow mean-field models", "symlab"};
  app.require_subcommand(1);

  std::string group = "C2-swap", rep_file, sub_out, unit_kind = "matrix-sigmoid", sigma = "logistic";
  int n = 0;
  UnitSpec unit;
  auto* sub = app.add_subcommand("subspace", "compute dim(E^G) and its basis");
  sub->add_option("--group", group, "named group action");
  sub->add_option("--rep-file", rep_file, "representation JSON file");
  sub->add_option("--n", n, "set/sequence length for Sn-deepsets and Cn-circulant");
  sub->add_option("--unit", unit_kind, "matrix-sigmoid or affine-layer");
  sub->add_option("--d", unit.d, "input dimension");
  sub->add_option("--c", unit.c, "output dimension");
  sub->add_option("--b", unit.b, "hidden width (affine-layer)");
  sub->add_option("--sigma", sigma, "logistic or tanh");
  sub->add_option("-o,--out", sub_out, "directory for basis.csv and projector.csv");

  Common run_opts, sweep_opts, discover_opts;
  bool no_run_dirs = false;
  auto* run = app.add_subcommand("run", "train one model");
  add_common(run, run_opts);
  auto* sweep = app.add_subcommand("sweep", "teacher-student grid over N, schemes, repetitions");
  add_common(sweep, sweep_opts);
  sweep->add_flag("--no-run-dirs", no_run_dirs, "skip per-cell run directories");
  auto* disc = app.add_subcommand("discover", "grow a candidate invariant subspace");
  add_common(disc, discover_opts);

  std::vector<std::string> val_reps, val_snaps;
  auto* val = app.add_subcommand("validate", "run the property suite");
  val->add_option("--rep-file", val_reps, "extra representation file to check (repeatable)");
  val->add_option("--snapshot", val_snaps, "snapshot file to load (repeatable)");

  std::vector<std::string> argv_store{"symlab"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_store) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*sub) {
      unit.kind = parse_unit_kind(unit_kind);
      unit.sigma = parse_activation(sigma);
      unit.validate();
      return cmd_subspace(group, rep_file, n, unit, sub_out, out);
    }
    if (*run) return cmd_run(run_opts, out);
    if (*sweep) return cmd_sweep(sweep_opts, !no_run_dirs, out);
    if (*disc) return cmd_discover(discover_opts, out);
    if (*val) return cmd_validate(val_reps, val_snaps, out);
  } catch (const DivergedRunError& e) {
    err << "error: " << e.what() << "\n";
    return kExitDiverged;
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::invalid_argument& e) {
    // ConfigError, StructuralError, InvalidProjectorError, InvalidMeasureError
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitFailure;
}

}  // namespace symlab
