#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "sgpo/errors.hpp"
#include "sgpo/harness.hpp"

using namespace sgpo;
namespace fs = std::filesystem;

namespace {

// Scratch directory removed on scope exit.
struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag)
      : path(fs::temp_directory_path() / ("sgpo_test_" + tag)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

TEST_CASE("defaults fill a minimal config") {
  const ExperimentConfig cfg = config_from_json(R"({"kind": "dynamics"})");
  CHECK(cfg.kind == ExperimentKind::kDynamics);
  CHECK(cfg.trainer.group_size == 8);
  CHECK(cfg.trainer.step_size == 1.0);
  CHECK(cfg.trainer.shaping.beta == 10.0);
  CHECK(cfg.trainer.shaping.gamma == 0.5);
  CHECK(cfg.trainer.gating == Gating::kAllNegativeOnly);
  CHECK(cfg.seeds == std::vector<std::uint64_t>{0});
  REQUIRE(cfg.tasks.size() == 1);
  CHECK(cfg.tasks[0].restricted_space);
  CHECK(cfg.tasks[0].horizon == 2);
  CHECK(cfg.dynamics.iterations == 200);
  CHECK_FALSE(cfg.canonical_json.empty());
}

TEST_CASE("config parsing rejects mistakes by name") {
  CHECK_THROWS_WITH_AS(config_from_json(R"({"kind": "dynamics", "trainer": {"group_sizee": 4}})"),
                       doctest::Contains("trainer.group_sizee"), ConfigError);
  CHECK_THROWS_WITH_AS(config_from_json(R"({"output_dir": "x"})"),
                       doctest::Contains("kind"), ConfigError);
  CHECK_THROWS_WITH_AS(config_from_json(R"({"kind": "made-up"})"),
                       doctest::Contains("kind"), ConfigError);
  CHECK_THROWS_AS(config_from_json("{not json"), ConfigError);
  CHECK_THROWS_WITH_AS(config_from_json(R"({"kind": "train", "seeds": []})"),
                       doctest::Contains("seeds"), ConfigError);
  CHECK_THROWS_WITH_AS(
      config_from_json(R"({"kind": "train", "trainer": {"clip_epsilon": 0.2}})"),
      doctest::Contains("importance_sampling"), ConfigError);
  // sweep blocks belong to sweep runs only
  CHECK_THROWS_WITH_AS(
      config_from_json(
          R"({"kind": "train", "sweep": {"base": "train", "axes": {"trainer.step_size": [1]}}})"),
      doctest::Contains("sweep"), ConfigError);
  CHECK_THROWS_WITH_AS(config_from_json(R"({"kind": "sweep"})"),
                       doctest::Contains("sweep"), ConfigError);
  // sweeping the seed list would fork the rng contract
  CHECK_THROWS_WITH_AS(
      config_from_json(
          R"({"kind": "sweep", "sweep": {"base": "train", "axes": {"seeds": [[1]]}}})"),
      doctest::Contains("seeds"), ConfigError);
}

TEST_CASE("config hash is canonical") {
  const auto a = config_from_json(R"({"kind": "dynamics", "dynamics": {"iterations": 5}})");
  const auto b = config_from_json(R"({"dynamics": {"iterations": 5}, "kind": "dynamics"})");
  const auto c = config_from_json(R"({"kind": "dynamics", "dynamics": {"iterations": 6}})");
  CHECK(config_hash(a) == config_hash(b));       // key order is irrelevant
  CHECK(config_hash(a) != config_hash(c));       // values are not
  CHECK(config_hash(a).size() == 16);            // 64-bit hex
  const auto d = config_from_json(R"({"kind": "dynamics"})");
  CHECK(config_hash(a) != config_hash(d));
}

TEST_CASE("dynamics run writes traces and a manifest") {
  TempDir tmp("dynamics");
  ExperimentConfig cfg = config_from_json(
      R"({"kind": "dynamics", "dynamics": {"iterations": 3}, "output_dir": ")" +
      (tmp.path / "dyn").string() + R"("})");
  const RunManifest m = run_experiment(cfg, 0);
  CHECK(m.ok);
  CHECK(m.seed == 0);
  CHECK(m.config_hash == config_hash(cfg));
  REQUIRE(m.outputs.size() == 2);
  const fs::path dir = tmp.path / "dyn";
  CHECK(fs::exists(dir / "dynamics.csv"));
  CHECK(fs::exists(dir / "dynamics_plot.csv"));
  CHECK(fs::exists(dir / "manifest_seed0.json"));

  const std::string csv = slurp(dir / "dynamics.csv");
  CHECK(csv.substr(0, 2) == "k,");
  // 1 header + 4 points (k = 0..3)
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);

  const std::string manifest = slurp(dir / "manifest_seed0.json");
  CHECK(manifest.find("\"config_hash\"") != std::string::npos);
  CHECK(manifest.find("\"dynamics.csv\"") != std::string::npos);
}

TEST_CASE("output root env var prefixes the output dir") {
  TempDir tmp("envroot");
  const ExperimentConfig cfg = config_from_json(R"({"kind": "dynamics", "output_dir": "sub"})");
  REQUIRE(setenv(kOutputRootEnv, tmp.path.c_str(), 1) == 0);
  const fs::path resolved = resolve_output_dir(cfg);
  unsetenv(kOutputRootEnv);
  CHECK(resolved == tmp.path / "sub");
  CHECK(resolve_output_dir(cfg) == fs::path("sub"));
}

TEST_CASE("train runs are byte-identical across reruns") {
  TempDir tmp("train");
  const std::string json = R"({
    "kind": "train",
    "seeds": [7],
    "trainer": {"group_size": 4, "iterations": 5, "reward_mode": "SGPO",
                 "shaping": {"mode": "LINEAR_RTS"}, "gating": "ALWAYS"},
    "output_dir": ")" + (tmp.path / "a").string() + R"("})";
  const ExperimentConfig cfg = config_from_json(json);
  const RunManifest first = run_experiment(cfg, 7);
  REQUIRE(first.outputs.size() == 3);

  const std::string train_a = slurp(tmp.path / "a" / "train_seed7.csv");
  const std::string policy_a = slurp(tmp.path / "a" / "final_policy_seed7.json");
  CHECK(train_a.substr(0, 5) == "iter,");

  ExperimentConfig again = cfg;
  again.output_dir = (tmp.path / "b").string();
  run_experiment(again, 7);
  CHECK(slurp(tmp.path / "b" / "train_seed7.csv") == train_a);
  CHECK(slurp(tmp.path / "b" / "final_policy_seed7.json") == policy_a);

  // a different seed changes the draw
  run_experiment(cfg, 8);
  CHECK(slurp(tmp.path / "a" / "train_seed8.csv") != train_a);
}

TEST_CASE("judged sgpo train runs leave an audit trail") {
  TempDir tmp("audit");
  const std::string json = R"({
    "kind": "train",
    "trainer": {"group_size": 4, "iterations": 2, "reward_mode": "SGPO",
                 "gating": "ALWAYS",
                 "judge": {"vote_count": 3, "noise": {"flip_prob": 0.3}}},
    "output_dir": ")" + (tmp.path / "run").string() + R"("})";
  const RunManifest m = run_experiment(config_from_json(json), 0);
  const fs::path audit = tmp.path / "run" / "judge_audit_seed0.jsonl";
  REQUIRE(fs::exists(audit));
  const std::string log = slurp(audit);
  CHECK(log.find("\"votes\"") != std::string::npos);
  CHECK(m.outputs.front() == "judge_audit_seed0.jsonl");
}

TEST_CASE("verify run reports lemma outcomes") {
  TempDir tmp("verify");
  const std::string json = R"({
    "kind": "verify",
    "verify": {"resolution_1d": 200, "resolution_2d": 30},
    "output_dir": ")" + (tmp.path / "v").string() + R"("})";
  const RunManifest m = run_experiment(config_from_json(json), 0);
  CHECK(m.ok);
  const std::string report = slurp(tmp.path / "v" / "verify_report.json");
  for (const std::string& id : lemma_ids())
    CHECK(report.find('"' + id + '"') != std::string::npos);

  const std::string single = R"({
    "kind": "verify",
    "verify": {"resolution_1d": 200, "resolution_2d": 30, "lemma": "base-case-step"},
    "output_dir": ")" + (tmp.path / "one").string() + R"("})";
  CHECK(run_experiment(config_from_json(single), 0).ok);
  const std::string one = slurp(tmp.path / "one" / "verify_report.json");
  CHECK(one.find("base-case-step") != std::string::npos);
  CHECK(one.find("curvature-concave") == std::string::npos);

  CHECK_THROWS_WITH_AS(
      config_from_json(R"({"kind": "verify", "verify": {"lemma": "no-such-lemma"}})"),
      doctest::Contains("verify.lemma"), ConfigError);
}

TEST_CASE("estimator check obeys its tolerance") {
  TempDir tmp("estcheck");
  const std::string ok_json = R"({
    "kind": "estimator_check",
    "estimator": {"samples": 4000, "tolerance": 0.05},
    "output_dir": ")" + (tmp.path / "ok").string() + R"("})";
  const RunManifest good = run_experiment(config_from_json(ok_json), 1);
  CHECK(good.ok);
  const std::string report = slurp(tmp.path / "ok" / "estimator_check_seed1.json");
  CHECK(report.find("\"max_abs_diff\"") != std::string::npos);
  CHECK(report.find("\"ok\": true") != std::string::npos);

  // an absurdly tight tolerance with few samples must fail honestly
  const std::string bad_json = R"({
    "kind": "estimator_check",
    "estimator": {"samples": 50, "tolerance": 1e-9},
    "output_dir": ")" + (tmp.path / "bad").string() + R"("})";
  const RunManifest bad = run_experiment(config_from_json(bad_json), 1);
  CHECK_FALSE(bad.ok);

  // non-stylized tasks cannot use the closed-form reference
  CHECK_THROWS_AS(config_from_json(R"({
    "kind": "estimator_check",
    "tasks": [{"horizon": 3, "actions_per_step": 2, "correct_actions": [1, 1, 1]}]})"),
                  ConfigError);
}

TEST_CASE("sweep expands the axis grid into child runs") {
  TempDir tmp("sweep");
  const std::string json = R"({
    "kind": "sweep",
    "output_dir": ")" + (tmp.path / "s").string() + R"(",
    "trainer": {"group_size": 4, "iterations": 2},
    "sweep": {"base": "train",
               "axes": {"trainer.step_size": [0.5, 1.0],
                         "trainer.group_size": [2, 4]}}})";
  const RunManifest m = run_experiment(config_from_json(json), 3);
  CHECK(m.ok);
  const fs::path root = tmp.path / "s";
  for (int i = 0; i < 4; ++i) {
    CAPTURE(i);
    CHECK(fs::exists(root / ("point_" + std::to_string(i)) / "train_seed3.csv"));
    CHECK(fs::exists(root / ("point_" + std::to_string(i)) / "manifest_seed3.json"));
  }
  const std::string index = slurp(root / "sweep_index.json");
  CHECK(index.find("\"trainer.group_size\": 2") != std::string::npos);
  CHECK(index.find("\"trainer.step_size\": 0.5") != std::string::npos);
  CHECK(index.find("point_3") != std::string::npos);

  // unknown axis paths surface when the grid is expanded
  const ExperimentConfig bad = config_from_json(R"({
    "kind": "sweep",
    "output_dir": ")" + (tmp.path / "bad").string() + R"(",
    "sweep": {"base": "train", "axes": {"trainer.no_such_knob": [1]}}})");
  CHECK_THROWS_WITH_AS(run_experiment(bad, 0), doctest::Contains("no_such_knob"),
                       ConfigError);
}

TEST_CASE("plot data is long-format") {
  const DynamicsTrace sgpo = run_dynamics({Method::kSgpo, 0.5, 0.5}, 2);
  const DynamicsTrace grpo = run_dynamics({Method::kGrpo, 0.5, 0.5}, 2);
  std::ostringstream out;
  emit_plot_data(out, sgpo, grpo);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "series,k,value");
  int rows = 0;
  bool saw_sgpo_series = false;
  while (std::getline(in, line)) {
    ++rows;
    saw_sgpo_series = saw_sgpo_series || line.rfind("p_sgpo,", 0) == 0;
  }
  CHECK(rows == 6 * 3);  // 6 series x (k = 0..2)
  CHECK(saw_sgpo_series);

  std::ostringstream empty_out;
  emit_plot_data(empty_out, TrainingTrace{});
  CHECK(empty_out.str() == "series,k,value\n");
}

TEST_CASE("every shipped config parses") {
  const fs::path dir(SGPO_CONFIG_DIR);
  REQUIRE(fs::is_directory(dir));
  int parsed = 0;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() != ".json") continue;
    CAPTURE(entry.path().filename().string());
    const ExperimentConfig cfg = load_config(entry.path());
    CHECK_FALSE(cfg.canonical_json.empty());
    CHECK(config_hash(cfg).size() == 16);
    ++parsed;
  }
  CHECK(parsed >= 8);
}

TEST_CASE("load_config surfaces io failures") {
  CHECK_THROWS_AS(load_config("/no/such/file.json"), IoError);
  TempDir tmp("loadcfg");
  const fs::path p = tmp.path / "cfg.json";
  std::ofstream(p) << R"({"kind": "dynamics"})";
  CHECK(load_config(p).kind == ExperimentKind::kDynamics);
}
