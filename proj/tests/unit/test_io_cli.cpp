#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "oracles/reference.hpp"
#include "symlab/cli.hpp"
#include "symlab/config.hpp"
#include "symlab/errors.hpp"
#include "symlab/snapshot_io.hpp"

namespace symlab {
namespace {

namespace fs = std::filesystem;

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("symlab_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  void write(const std::string& name, const std::string& text) const {
    std::ofstream(path(name)) << text;
  }
  int cli(const std::vector<std::string>& args) {
    out_.str("");
    err_.str("");
    return run_cli(args, out_, err_);
  }

  fs::path dir_;
  std::ostringstream out_, err_;
};

using SnapshotIo = TempDir;
using ConfigFiles = TempDir;
using Cli = TempDir;

TEST_F(SnapshotIo, MatrixRoundTripIsExact) {
  std::mt19937_64 rng(1);
  const Matrix m = oracle::gaussian(7, 4, 1e-3, rng);
  write_matrix_csv(path("m.csv"), m);
  EXPECT_EQ(max_abs(read_matrix_csv(path("m.csv")) - m), 0.0);
}

TEST_F(SnapshotIo, MeasureRoundTrip) {
  Matrix p(2, 2);
  p << 1, 2, 3, 4;
  Vector w(2);
  w << 0.25, 0.75;
  write_measure_csv(path("mu.csv"), EmpiricalMeasure(p, w));
  const auto back = read_measure_csv(path("mu.csv"));
  EXPECT_EQ(max_abs(back.points - p), 0.0);
  EXPECT_EQ(back.weights(1), 0.75);
}

TEST_F(SnapshotIo, CorruptFilesRaiseIoError) {
  EXPECT_THROW(read_matrix_csv(path("missing.csv")), IoError);
  write("bad_header.csv", "two,2\n1,2\n");
  EXPECT_THROW(read_matrix_csv(path("bad_header.csv")), IoError);
  write("short.csv", "2,2\n1,2\n");
  EXPECT_THROW(read_matrix_csv(path("short.csv")), IoError);
  write("ragged.csv", "2,2\n1,2\n3\n");
  EXPECT_THROW(read_matrix_csv(path("ragged.csv")), IoError);
  write("nan.csv", "1,2\n1,abc\n");
  EXPECT_THROW(read_matrix_csv(path("nan.csv")), IoError);
  write("trailing.csv", "1,2\n1,2\n3,4\n");
  EXPECT_THROW(read_matrix_csv(path("trailing.csv")), IoError);
  write("crlf.csv", "1,2\r\n1,2\r\n");
  EXPECT_EQ(read_matrix_csv(path("crlf.csv"))(0, 1), 2.0);
}

TEST_F(ConfigFiles, TomlAndJsonAgree) {
  write("c.toml", "[train]\nalpha = 20.0\nn_particles = 30\n[teacher]\nkind = \"SI\"\n");
  write("c.json", R"({"train": {"alpha": 20.0, "n_particles": 30}, "teacher": {"kind": "SI"}})");
  const Json a = load_config_file(path("c.toml"));
  const Json b = load_config_file(path("c.json"));
  EXPECT_EQ(train_from_json(a["train"]).n_particles, 30);
  EXPECT_EQ(to_json(train_from_json(a["train"])), to_json(train_from_json(b["train"])));
  EXPECT_EQ(teacher_from_json(a["teacher"]).kind, TeacherKind::kSI);
}

TEST_F(ConfigFiles, ParseErrors) {
  EXPECT_THROW(load_config_file(path("nope.json")), IoError);
  write("broken.json", "{\"train\": ");
  EXPECT_THROW(load_config_file(path("broken.json")), ConfigError);
  write("broken.toml", "[train\nalpha=");
  EXPECT_THROW(load_config_file(path("broken.toml")), ConfigError);
}

TEST(Config, UnknownKeysAndTypeMismatches) {
  EXPECT_THROW(train_from_json(Json{{"alpah", 1.0}}), ConfigError);
  EXPECT_THROW(train_from_json(Json{{"alpha", "fast"}}), ConfigError);
  EXPECT_THROW(grid_from_json(Json{{"n_values", {5, 2}}}), ConfigError);
  EXPECT_THROW(unit_from_json(Json{{"kind", "relu"}}), ConfigError);
  EXPECT_EQ(train_from_json(Json::object()).alpha, 50.0);
}

TEST(Config, DottedOverrides) {
  Json root = Json::object();
  apply_override(root, "train.alpha=12.5");
  apply_override(root, "grid.n_values=[5,10]");
  apply_override(root, "teacher.kind=arbitrary");
  EXPECT_EQ(root["train"]["alpha"], 12.5);
  EXPECT_EQ(root["grid"]["n_values"][1], 10);
  EXPECT_EQ(root["teacher"]["kind"], "arbitrary");
  EXPECT_THROW(apply_override(root, "novalue"), ConfigError);
}

TEST(Config, HeuristicDeltaAcceptsNumberOrList) {
  EXPECT_EQ(heuristic_from_json(Json{{"delta", 0.05}}).delta_schedule, std::vector<double>{0.05});
  EXPECT_EQ(heuristic_from_json(Json{{"delta", {0.1, 0.01}}}).delta(3), 0.01);
  const auto h = heuristic_from_json(Json{{"init_sd", 1.0}, {"step_noise", "none"}});
  EXPECT_EQ(h.init_sd, 1.0);
  EXPECT_EQ(h.step_noise, NoiseMode::kNone);
  EXPECT_EQ(to_json(heuristic_from_json(to_json(h))), to_json(h));
  EXPECT_THROW(heuristic_from_json(Json{{"init_sd", -1.0}}).validate(), ConfigError);
}

TEST(Config, RoundTripsThroughJson) {
  TrainConfig c;
  c.scheme = Scheme::kEA;
  c.seeds = Seeds{5, 6, 7, 8};
  c.ea_noise = EaNoise::kAmbientProjected;
  EXPECT_EQ(to_json(train_from_json(to_json(c))), to_json(c));
  ExperimentGrid g;
  g.noise_mode = NoiseMode::kFull;
  EXPECT_EQ(to_json(grid_from_json(to_json(g))), to_json(g));
  const auto rep = c4_rotations();
  const auto back = rep_from_json(to_json(rep));
  EXPECT_EQ(back.cayley(), rep.cayley());
  EXPECT_THROW(rep_from_json(Json{{"order", 2}}), StructuralError);
}

TEST_F(ConfigFiles, BareRepresentationFileIsTheParameterAction) {
  UnitSpec unit;
  const auto m = build_conjugation_action(c2_swap(), c2_swap());
  write("m.json", to_json(m).dump());
  const auto bundle = build_bundle({"", 0, path("m.json")}, unit);
  EXPECT_EQ(bundle.eg_dim(), 2);
  Json lifted{{"rho", to_json(c2_swap())}, {"rho_hat", to_json(c2_swap())}};
  write("lifted.json", lifted.dump());
  EXPECT_EQ(build_bundle({"", 0, path("lifted.json")}, unit).eg_dim(), 2);
}

TEST_F(Cli, SubspaceReportsDimension) {
  EXPECT_EQ(cli({"subspace", "--group", "C2-swap", "--unit", "matrix-sigmoid", "--d", "2", "--c",
                 "2", "-o", path("sub")}),
            kExitOk);
  EXPECT_NE(out_.str().find("dim(E^G)=2"), std::string::npos);
  EXPECT_EQ(read_matrix_csv(path("sub/basis.csv")).cols(), 2);
  EXPECT_EQ(read_matrix_csv(path("sub/projector.csv")).rows(), 4);
  EXPECT_EQ(cli({"subspace", "--group", "Sn-deepsets", "--n", "3", "--unit", "affine-layer", "--d",
                 "3", "--b", "3", "--c", "3"}),
            kExitOk);
  EXPECT_NE(out_.str().find("dim(E^G)=5"), std::string::npos);
}

TEST_F(Cli, ExitCodes) {
  EXPECT_EQ(cli({"subspace", "--group", "D9"}), kExitConfig);
  EXPECT_EQ(cli({"run", "-c", path("missing.json"), "-o", path("o")}), kExitIo);
  write("bad.json", R"({"train": {"alpah": 3}, "teacher": {"kind": "WI"}})");
  EXPECT_EQ(cli({"run", "-c", path("bad.json"), "-o", path("o")}), kExitConfig);
  write("noteacher.json", R"({"train": {"n_particles": 5}})");
  EXPECT_EQ(cli({"sweep", "-c", path("noteacher.json"), "-o", path("o")}), kExitConfig);
  EXPECT_EQ(cli({"frobnicate"}), kExitConfig);
  write("diverge.json",
        R"({"train": {"n_particles": 4, "alpha": 1e12, "horizon_T": 2}, "teacher": {"kind": "arbitrary"}})");
  EXPECT_EQ(cli({"run", "-c", path("diverge.json"), "-o", path("d")}), kExitDiverged);
}

TEST_F(Cli, RunWritesRunDirectory) {
  write("run.toml",
        "[train]\nn_particles = 6\nhorizon_T = 2.0\n[teacher]\nkind = \"WI\"\n[run]\ninit_mode = \"SI\"\n");
  ASSERT_EQ(cli({"run", "-c", path("run.toml"), "-o", path("r"), "--set", "train.granularity=2"}),
            kExitOk)
      << err_.str();
  EXPECT_TRUE(fs::exists(path("r/config.resolved.json")));
  EXPECT_TRUE(fs::exists(path("r/snapshots/epoch_0.csv")));
  EXPECT_TRUE(fs::exists(path("r/snapshots/epoch_12.csv")));
  EXPECT_EQ(read_matrix_csv(path("r/final.csv")).rows(), 6);
  const Json resolved = load_config_file(path("r/config.resolved.json"));
  EXPECT_EQ(resolved["train"]["granularity"], 2);
}

TEST_F(Cli, SweepAndDiscoverWriteOutputs) {
  write("sweep.json", R"({
    "train": {"horizon_T": 1.0, "granularity": 2},
    "teacher": {"kind": "WI"},
    "grid": {"n_values": [4, 8], "repetitions": 2, "schemes": ["vanilla", "FA"], "mc_points": 10}
  })");
  ASSERT_EQ(cli({"sweep", "-c", path("sweep.json"), "-o", path("s"), "-j", "2"}), kExitOk)
      << err_.str();
  const auto rows = read_metrics_csv(path("s/metrics.csv"));
  EXPECT_FALSE(rows.empty());
  const Json summary = load_config_file(path("s/summary.json"));
  EXPECT_TRUE(summary["cells"].is_array());
  EXPECT_TRUE(fs::exists(path("s/runs/N8_rep1_FA/final.csv")));

  write("disc.json", R"({
    "train": {"n_particles": 10, "horizon_T": 1.0},
    "teacher": {"kind": "WI"},
    "heuristic": {"delta": 1.0, "repetitions": 2}
  })");
  ASSERT_EQ(cli({"discover", "-c", path("disc.json"), "-o", path("d")}), kExitOk) << err_.str();
  const Json disc = load_config_file(path("d/discovery.json"));
  ASSERT_EQ(disc["runs"].size(), 2u);
  EXPECT_EQ(disc["runs"][0]["final_k"], 0);
  EXPECT_EQ(disc["runs"][0]["final_decision"], "stayed");
  EXPECT_EQ(disc["runs"][0]["true_eg_dim"], 2);
}

TEST_F(Cli, ValidateCommand) {
  EXPECT_EQ(cli({"validate"}), kExitOk);
  EXPECT_NE(out_.str().find("checks passed"), std::string::npos);
  Json bad = to_json(c2_swap());
  bad["matrices"][1] = {{2, 0}, {0, 1}};
  write("bad_rep.json", bad.dump());
  EXPECT_EQ(cli({"validate", "--rep-file", path("bad_rep.json")}), kExitConfig);
}

}  // namespace
}  // namespace symlab
