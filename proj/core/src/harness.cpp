#include "sgpo/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string_view>

#include "json.hpp"

#include "sgpo/csv.hpp"
#include "sgpo/errors.hpp"
#include "sgpo/version.hpp"

namespace sgpo {

namespace {

using Json = nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ConfigError("config field '" + path + "': " + what);
}

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

void check_fields(const Json& obj, const std::string& path,
                  std::initializer_list<std::string_view> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    const bool known =
        std::any_of(allowed.begin(), allowed.end(),
                    [&](std::string_view k) { return k == it.key(); });
    if (!known) throw ConfigError("unknown config field '" + join(path, it.key()) + "'");
  }
}

const Json& expect_object(const Json& j, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
  return j;
}

double get_double(const Json& obj, const std::string& path, const char* key, double def) {
  if (!obj.contains(key)) return def;
  const Json& v = obj.at(key);
  if (!v.is_number()) fail(join(path, key), "expected a number");
  return v.get<double>();
}

long long get_int(const Json& obj, const std::string& path, const char* key, long long def) {
  if (!obj.contains(key)) return def;
  const Json& v = obj.at(key);
  if (!v.is_number_integer()) fail(join(path, key), "expected an integer");
  return v.get<long long>();
}

bool get_bool(const Json& obj, const std::string& path, const char* key, bool def) {
  if (!obj.contains(key)) return def;
  const Json& v = obj.at(key);
  if (!v.is_boolean()) fail(join(path, key), "expected a boolean");
  return v.get<bool>();
}

std::string get_string(const Json& obj, const std::string& path, const char* key,
                       const std::string& def) {
  if (!obj.contains(key)) return def;
  const Json& v = obj.at(key);
  if (!v.is_string()) fail(join(path, key), "expected a string");
  return v.get<std::string>();
}

// Enum spellings used in config files and the canonical dump.

const char* kind_name(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::kDynamics: return "dynamics";
    case ExperimentKind::kTrain: return "train";
    case ExperimentKind::kVerify: return "verify";
    case ExperimentKind::kEstimatorCheck: return "estimator_check";
    case ExperimentKind::kSweep: return "sweep";
  }
  return "dynamics";
}

ExperimentKind kind_from(const std::string& s, const std::string& path) {
  if (s == "dynamics") return ExperimentKind::kDynamics;
  if (s == "train") return ExperimentKind::kTrain;
  if (s == "verify") return ExperimentKind::kVerify;
  if (s == "estimator_check") return ExperimentKind::kEstimatorCheck;
  if (s == "sweep") return ExperimentKind::kSweep;
  fail(path, "expected one of dynamics, train, verify, estimator_check, sweep");
}

const char* reward_name(RewardKind k) {
  return k == RewardKind::kGrpo ? "GRPO" : "SGPO";
}

RewardKind reward_from(const std::string& s, const std::string& path) {
  if (s == "GRPO") return RewardKind::kGrpo;
  if (s == "SGPO") return RewardKind::kSgpo;
  fail(path, "expected GRPO or SGPO");
}

const char* mode_name(ShapingMode m) {
  switch (m) {
    case ShapingMode::kAllIncorrect: return "ALL_INCORRECT";
    case ShapingMode::kAllNegativeGroupsOnly: return "ALL_NEGATIVE_GROUPS_ONLY";
    case ShapingMode::kLinearRts: return "LINEAR_RTS";
  }
  return "ALL_INCORRECT";
}

ShapingMode mode_from(const std::string& s, const std::string& path) {
  if (s == "ALL_INCORRECT") return ShapingMode::kAllIncorrect;
  if (s == "ALL_NEGATIVE_GROUPS_ONLY") return ShapingMode::kAllNegativeGroupsOnly;
  if (s == "LINEAR_RTS") return ShapingMode::kLinearRts;
  fail(path, "expected ALL_INCORRECT, ALL_NEGATIVE_GROUPS_ONLY or LINEAR_RTS");
}

const char* gating_name(Gating g) {
  switch (g) {
    case Gating::kAlways: return "ALWAYS";
    case Gating::kAllNegativeOnly: return "ALL_NEGATIVE_ONLY";
    case Gating::kFirstEpochs: return "FIRST_EPOCHS";
  }
  return "ALL_NEGATIVE_ONLY";
}

Gating gating_from(const std::string& s, const std::string& path) {
  if (s == "ALWAYS") return Gating::kAlways;
  if (s == "ALL_NEGATIVE_ONLY") return Gating::kAllNegativeOnly;
  if (s == "FIRST_EPOCHS") return Gating::kFirstEpochs;
  fail(path, "expected ALWAYS, ALL_NEGATIVE_ONLY or FIRST_EPOCHS");
}

const char* displacement_name(DisplacementKind d) {
  return d == DisplacementKind::kUniformWrong ? "UNIFORM_WRONG" : "OFFSETS";
}

DisplacementKind displacement_from(const std::string& s, const std::string& path) {
  if (s == "UNIFORM_WRONG") return DisplacementKind::kUniformWrong;
  if (s == "OFFSETS") return DisplacementKind::kOffsets;
  fail(path, "expected UNIFORM_WRONG or OFFSETS");
}

// Block parsers. Each rejects unknown keys and leaves absent fields at their
// struct defaults.

ShapingConfig parse_shaping(const Json& j, const std::string& path) {
  expect_object(j, path);
  check_fields(j, path, {"beta", "gamma", "mode"});
  ShapingConfig s;
  s.beta = get_double(j, path, "beta", s.beta);
  s.gamma = get_double(j, path, "gamma", s.gamma);
  if (j.contains("mode")) s.mode = mode_from(get_string(j, path, "mode", ""), join(path, "mode"));
  return s;
}

NoiseModel parse_noise(const Json& j, const std::string& path) {
  expect_object(j, path);
  check_fields(j, path, {"flip_prob", "displacement", "offsets"});
  NoiseModel n;
  n.flip_prob = get_double(j, path, "flip_prob", n.flip_prob);
  if (j.contains("displacement"))
    n.displacement =
        displacement_from(get_string(j, path, "displacement", ""), join(path, "displacement"));
  if (j.contains("offsets")) {
    const Json& arr = j.at("offsets");
    if (!arr.is_array() || arr.empty()) fail(join(path, "offsets"), "expected a non-empty array");
    n.offsets.clear();
    for (const Json& v : arr) {
      if (!v.is_number_integer()) fail(join(path, "offsets"), "expected integers");
      n.offsets.push_back(v.get<int>());
    }
  }
  return n;
}

JudgeConfig parse_judge(const Json& j, const std::string& path) {
  expect_object(j, path);
  check_fields(j, path, {"noise", "vote_count"});
  JudgeConfig cfg;
  if (j.contains("noise")) cfg.noise = parse_noise(j.at("noise"), join(path, "noise"));
  cfg.vote_count = static_cast<int>(get_int(j, path, "vote_count", cfg.vote_count));
  return cfg;
}

TrainerConfig parse_trainer(const Json& j, const std::string& path) {
  expect_object(j, path);
  check_fields(j, path,
               {"group_size", "prompts_per_batch", "step_size", "iterations", "reward_mode",
                "shaping", "gating", "gating_epochs", "clip_epsilon", "importance_sampling",
                "judge"});
  TrainerConfig t;
  t.group_size = static_cast<int>(get_int(j, path, "group_size", t.group_size));
  t.prompts_per_batch =
      static_cast<int>(get_int(j, path, "prompts_per_batch", t.prompts_per_batch));
  t.step_size = get_double(j, path, "step_size", t.step_size);
  t.iterations = static_cast<int>(get_int(j, path, "iterations", t.iterations));
  if (j.contains("reward_mode"))
    t.reward_mode =
        reward_from(get_string(j, path, "reward_mode", ""), join(path, "reward_mode"));
  if (j.contains("shaping")) t.shaping = parse_shaping(j.at("shaping"), join(path, "shaping"));
  if (j.contains("gating"))
    t.gating = gating_from(get_string(j, path, "gating", ""), join(path, "gating"));
  t.gating_epochs = static_cast<int>(get_int(j, path, "gating_epochs", t.gating_epochs));
  if (j.contains("clip_epsilon"))
    t.clip_epsilon = get_double(j, path, "clip_epsilon", 0.0);
  t.importance_sampling = get_bool(j, path, "importance_sampling", t.importance_sampling);
  if (j.contains("judge")) t.judge = parse_judge(j.at("judge"), join(path, "judge"));
  return t;
}

std::vector<ChainTask> parse_tasks(const Json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) fail(path, "expected a non-empty array of tasks");
  std::vector<ChainTask> tasks;
  tasks.reserve(j.size());
  int index = 0;
  for (const Json& item : j) {
    const std::string tpath = path + "[" + std::to_string(index++) + "]";
    expect_object(item, tpath);
    check_fields(item, tpath,
                 {"horizon", "actions_per_step", "correct_actions", "restricted_space"});
    ChainTask t;
    if (!item.contains("horizon")) fail(join(tpath, "horizon"), "missing required field");
    if (!item.contains("actions_per_step"))
      fail(join(tpath, "actions_per_step"), "missing required field");
    if (!item.contains("correct_actions"))
      fail(join(tpath, "correct_actions"), "missing required field");
    t.horizon = static_cast<int>(get_int(item, tpath, "horizon", 0));
    t.actions_per_step = static_cast<int>(get_int(item, tpath, "actions_per_step", 0));
    const Json& arr = item.at("correct_actions");
    if (!arr.is_array()) fail(join(tpath, "correct_actions"), "expected an array");
    for (const Json& v : arr) {
      if (!v.is_number_integer()) fail(join(tpath, "correct_actions"), "expected integers");
      t.correct_actions.push_back(v.get<int>());
    }
    t.restricted_space = get_bool(item, tpath, "restricted_space", false);
    tasks.push_back(std::move(t));
  }
  return tasks;
}

DynamicsSpec parse_dynamics(const Json& j, const std::string& path) {
  expect_object(j, path);
  check_fields(j, path, {"iterations", "p0", "q0", "eta"});
  DynamicsSpec d;
  d.iterations = static_cast<int>(get_int(j, path, "iterations", d.iterations));
  d.p0 = get_double(j, path, "p0", d.p0);
  d.q0 = get_double(j, path, "q0", d.q0);
  d.eta = get_double(j, path, "eta", d.eta);
  if (d.iterations < 0) fail(join(path, "iterations"), "must be >= 0");
  if (!(d.p0 > 0.0 && d.p0 < 1.0)) fail(join(path, "p0"), "must lie in (0, 1)");
  if (!(d.q0 > 0.0 && d.q0 < 1.0)) fail(join(path, "q0"), "must lie in (0, 1)");
  if (!(d.eta > 0.0)) fail(join(path, "eta"), "must be positive");
  return d;
}

EstimatorCheckSpec parse_estimator(const Json& j, const std::string& path) {
  expect_object(j, path);
  check_fields(j, path, {"samples", "group_size", "p", "q", "reward", "tolerance"});
  EstimatorCheckSpec e;
  e.samples = get_int(j, path, "samples", e.samples);
  e.group_size = static_cast<int>(get_int(j, path, "group_size", e.group_size));
  e.p = get_double(j, path, "p", e.p);
  e.q = get_double(j, path, "q", e.q);
  if (j.contains("reward")) {
    const Json& r = j.at("reward");
    const std::string rpath = join(path, "reward");
    expect_object(r, rpath);
    check_fields(r, rpath, {"kind", "shaping"});
    if (r.contains("kind"))
      e.reward.kind = reward_from(get_string(r, rpath, "kind", ""), join(rpath, "kind"));
    if (r.contains("shaping"))
      e.reward.shaping = parse_shaping(r.at("shaping"), join(rpath, "shaping"));
  }
  e.tolerance = get_double(j, path, "tolerance", e.tolerance);
  if (e.samples < 1) fail(join(path, "samples"), "must be >= 1");
  if (e.group_size < 2) fail(join(path, "group_size"), "must be >= 2");
  if (!(e.p > 0.0 && e.p < 1.0)) fail(join(path, "p"), "must lie in (0, 1)");
  if (!(e.q > 0.0 && e.q < 1.0)) fail(join(path, "q"), "must lie in (0, 1)");
  if (!(e.tolerance > 0.0)) fail(join(path, "tolerance"), "must be positive");
  e.reward.shaping.validate();
  return e;
}

VerifySpec parse_verify(const Json& j, const std::string& path) {
  expect_object(j, path);
  check_fields(j, path, {"resolution_1d", "resolution_2d", "margin", "lemma"});
  VerifySpec v;
  v.resolution_1d = static_cast<int>(get_int(j, path, "resolution_1d", v.resolution_1d));
  v.resolution_2d = static_cast<int>(get_int(j, path, "resolution_2d", v.resolution_2d));
  v.margin = get_double(j, path, "margin", v.margin);
  if (j.contains("lemma")) {
    const std::string id = get_string(j, path, "lemma", "");
    const std::vector<std::string> ids = lemma_ids();
    if (std::find(ids.begin(), ids.end(), id) == ids.end()) {
      std::string options;
      for (const std::string& x : ids) options += (options.empty() ? "" : ", ") + x;
      fail(join(path, "lemma"), "unknown lemma id; known ids: " + options);
    }
    v.lemma = id;
  }
  if (v.resolution_1d < 2) fail(join(path, "resolution_1d"), "must be >= 2");
  if (v.resolution_2d < 2) fail(join(path, "resolution_2d"), "must be >= 2");
  if (!(v.margin >= 0.0)) fail(join(path, "margin"), "must be >= 0");
  return v;
}

std::string parse_sweep_block(const Json& j, const std::string& path) {
  expect_object(j, path);
  check_fields(j, path, {"base", "axes"});
  const std::string base = get_string(j, path, "base", "");
  if (base != "train" && base != "dynamics")
    fail(join(path, "base"), "expected train or dynamics");
  if (!j.contains("axes")) fail(join(path, "axes"), "missing required field");
  const Json& axes = j.at("axes");
  expect_object(axes, join(path, "axes"));
  if (axes.empty()) fail(join(path, "axes"), "expected at least one axis");
  for (auto it = axes.begin(); it != axes.end(); ++it) {
    if (!it.value().is_array() || it.value().empty())
      fail(join(path, "axes") + "." + it.key(), "expected a non-empty array of values");
    const std::string& axis = it.key();
    for (const char* banned : {"kind", "output_dir", "seeds", "sweep"}) {
      if (axis == banned || axis.rfind(std::string(banned) + ".", 0) == 0)
        fail(join(path, "axes") + "." + axis, "this field cannot be swept");
    }
  }
  return j.dump();
}

// Canonical full-form JSON: every default materialized, keys sorted by the
// JSON object ordering, numbers in shortest round-trip form.

Json task_to_json_obj(const ChainTask& t) { return Json::parse(chain_task_to_json(t)); }

Json shaping_to_json(const ShapingConfig& s) {
  return Json{{"beta", s.beta}, {"gamma", s.gamma}, {"mode", mode_name(s.mode)}};
}

Json judge_to_json(const JudgeConfig& j) {
  return Json{{"noise",
               Json{{"flip_prob", j.noise.flip_prob},
                    {"displacement", displacement_name(j.noise.displacement)},
                    {"offsets", j.noise.offsets}}},
              {"vote_count", j.vote_count}};
}

Json trainer_to_json(const TrainerConfig& t) {
  Json j{{"group_size", t.group_size},
         {"prompts_per_batch", t.prompts_per_batch},
         {"step_size", t.step_size},
         {"iterations", t.iterations},
         {"reward_mode", reward_name(t.reward_mode)},
         {"shaping", shaping_to_json(t.shaping)},
         {"gating", gating_name(t.gating)},
         {"gating_epochs", t.gating_epochs},
         {"importance_sampling", t.importance_sampling},
         {"judge", judge_to_json(t.judge)}};
  if (t.clip_epsilon.has_value()) j["clip_epsilon"] = *t.clip_epsilon;
  return j;
}

Json config_to_json(const ExperimentConfig& c) {
  Json tasks = Json::array();
  for (const ChainTask& t : c.tasks) tasks.push_back(task_to_json_obj(t));
  Json verify{{"resolution_1d", c.verify.resolution_1d},
              {"resolution_2d", c.verify.resolution_2d},
              {"margin", c.verify.margin}};
  if (c.verify.lemma.has_value()) verify["lemma"] = *c.verify.lemma;
  Json j{{"kind", kind_name(c.kind)},
         {"output_dir", c.output_dir},
         {"seeds", c.seeds},
         {"tasks", tasks},
         {"trainer", trainer_to_json(c.trainer)},
         {"dynamics",
          Json{{"iterations", c.dynamics.iterations},
               {"p0", c.dynamics.p0},
               {"q0", c.dynamics.q0},
               {"eta", c.dynamics.eta}}},
         {"estimator",
          Json{{"samples", c.estimator.samples},
               {"group_size", c.estimator.group_size},
               {"p", c.estimator.p},
               {"q", c.estimator.q},
               {"reward",
                Json{{"kind", reward_name(c.estimator.reward.kind)},
                     {"shaping", shaping_to_json(c.estimator.reward.shaping)}}},
               {"tolerance", c.estimator.tolerance}}},
         {"verify", verify}};
  if (!c.sweep_json.empty()) j["sweep"] = Json::parse(c.sweep_json);
  return j;
}

void require_stylized_shape(const std::vector<ChainTask>& tasks) {
  if (tasks.size() != 1 || !tasks[0].restricted_space || tasks[0].horizon != 2 ||
      tasks[0].actions_per_step != 2)
    throw ConfigError(
        "estimator_check requires a single restricted two-step two-action task");
}

std::string iso_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_file(const std::filesystem::path& p, std::string_view text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + p.string() + " for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.flush();
  if (!out) throw IoError("failed writing " + p.string());
}

Json report_to_json(const LemmaReport& r) {
  Json violations = Json::array();
  for (const Violation& v : r.violations)
    violations.push_back(Json{{"point", {v.point[0], v.point[1]}}, {"slack", v.slack}});
  return Json{{"id", r.id},           {"points", r.points},
              {"min_slack", r.min_slack}, {"argmin", {r.argmin[0], r.argmin[1]}},
              {"margin", r.margin},   {"pass", r.pass},
              {"violations", violations}};
}

LemmaReport run_one_lemma(const std::string& id, const VerifySpec& v,
                          std::optional<DynamicsTrace>& sgpo_trace,
                          std::optional<DynamicsTrace>& grpo_trace) {
  const double m = v.margin;
  if (id == "sgpo-p-map-increasing")
    return verify_sgpo_p_map_increasing({1e-3, 1.0 - 1e-3, v.resolution_1d, m});
  if (id == "gain-increasing")
    return verify_gain_increasing({1e-3, 1.0 - 1e-3, v.resolution_2d, m},
                                  {-5.0, 5.0, v.resolution_2d, m});
  if (id == "grpo-p-map-increasing")
    return verify_grpo_p_map_increasing({1e-3, 1.0 - 1e-3, v.resolution_2d, m});
  if (id == "curvature-concave")
    return verify_curvature_concave({-10.0, -0.01, v.resolution_1d, m});
  if (id == "pair-product-bound")
    return verify_pair_product_bound({0.5, 1.0, v.resolution_2d, m});
  if (id == "trace-monotone-sgpo") {
    if (!sgpo_trace) sgpo_trace = run_dynamics({Method::kSgpo, 0.5, 0.5}, 200, 1.0);
    return verify_trace_monotone(*sgpo_trace, m);
  }
  if (id == "trace-monotone-grpo") {
    if (!grpo_trace) grpo_trace = run_dynamics({Method::kGrpo, 0.5, 0.5}, 200, 1.0);
    return verify_trace_monotone(*grpo_trace, m);
  }
  if (id == "base-case-step") return verify_base_case(m);
  throw ConfigError("unknown lemma id '" + id + "'");
}

void set_by_dotted_path(Json& root, const std::string& axis, const Json& value) {
  Json* node = &root;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = axis.find('.', start);
    const std::string key = axis.substr(start, dot == std::string::npos ? dot : dot - start);
    if (!node->is_object())
      throw ConfigError("sweep axis '" + axis + "': '" + key + "' is not inside an object");
    if (!node->contains(key))
      throw ConfigError("sweep axis '" + axis + "' does not name a config field");
    if (dot == std::string::npos) {
      (*node)[key] = value;
      return;
    }
    node = &(*node)[key];
    start = dot + 1;
  }
}

}  // namespace

ExperimentConfig config_from_json(std::string_view text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError(std::string("malformed config JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  check_fields(j, "",
               {"kind", "output_dir", "seeds", "tasks", "trainer", "dynamics", "estimator",
                "verify", "sweep"});
  if (!j.contains("kind")) throw ConfigError("config field 'kind': missing required field");

  ExperimentConfig cfg;
  cfg.kind = kind_from(get_string(j, "", "kind", ""), "kind");
  cfg.output_dir = get_string(j, "", "output_dir", cfg.output_dir);
  if (cfg.output_dir.empty()) fail("output_dir", "must be non-empty");

  if (j.contains("seeds")) {
    const Json& arr = j.at("seeds");
    if (!arr.is_array() || arr.empty()) fail("seeds", "expected a non-empty array");
    cfg.seeds.clear();
    for (const Json& v : arr) {
      if (!v.is_number_integer() || v.get<long long>() < 0)
        fail("seeds", "expected non-negative integers");
      cfg.seeds.push_back(v.get<std::uint64_t>());
    }
  }

  if (j.contains("tasks"))
    cfg.tasks = parse_tasks(j.at("tasks"), "tasks");
  else
    cfg.tasks = {stylized_task()};
  for (const ChainTask& t : cfg.tasks) t.validate();

  if (j.contains("trainer")) cfg.trainer = parse_trainer(j.at("trainer"), "trainer");
  cfg.trainer.validate();
  if (j.contains("dynamics")) cfg.dynamics = parse_dynamics(j.at("dynamics"), "dynamics");
  if (j.contains("estimator")) cfg.estimator = parse_estimator(j.at("estimator"), "estimator");
  if (j.contains("verify")) cfg.verify = parse_verify(j.at("verify"), "verify");

  if (cfg.kind == ExperimentKind::kSweep) {
    if (!j.contains("sweep"))
      throw ConfigError("config field 'sweep': missing required field for kind \"sweep\"");
    cfg.sweep_json = parse_sweep_block(j.at("sweep"), "sweep");
  } else if (j.contains("sweep")) {
    throw ConfigError("config field 'sweep': only valid with kind \"sweep\"");
  }
  if (cfg.kind == ExperimentKind::kEstimatorCheck) require_stylized_shape(cfg.tasks);

  cfg.canonical_json = config_to_json(cfg).dump();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("failed reading config file " + path.string());
  return config_from_json(buf.str());
}

std::string config_hash(const ExperimentConfig& cfg) {
  const std::string canon =
      cfg.canonical_json.empty() ? config_to_json(cfg).dump() : cfg.canonical_json;
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : canon) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string RunManifest::to_json() const {
  Json j{{"config_hash", config_hash}, {"code_version", code_version},
         {"seed", seed},               {"outputs", outputs},
         {"started_at", started_at},   {"finished_at", finished_at},
         {"wall_ms", wall_ms},         {"ok", ok}};
  return j.dump(2) + "\n";
}

std::filesystem::path resolve_output_dir(const ExperimentConfig& cfg) {
  const char* root = std::getenv(kOutputRootEnv);
  if (root != nullptr && *root != '\0')
    return std::filesystem::path(root) / cfg.output_dir;
  return cfg.output_dir;
}

void emit_plot_data(std::ostream& out, const DynamicsTrace& sgpo, const DynamicsTrace& grpo) {
  write_csv_row(out, std::vector<std::string>{"series", "k", "value"});
  const auto series = [&out](const char* name, const DynamicsTrace& tr, auto proj) {
    for (const DynamicsPoint& pt : tr.points)
      write_csv_row(out, std::vector<std::string>{name, std::to_string(pt.k),
                                                  format_double(proj(pt))});
  };
  series("p_sgpo", sgpo, [](const DynamicsPoint& pt) { return pt.p; });
  series("p_grpo", grpo, [](const DynamicsPoint& pt) { return pt.p; });
  series("pq_sgpo", sgpo, [](const DynamicsPoint& pt) { return pt.product; });
  series("pq_grpo", grpo, [](const DynamicsPoint& pt) { return pt.product; });
  series("entropy1_sgpo", sgpo, [](const DynamicsPoint& pt) { return pt.entropy_step1; });
  series("entropy1_grpo", grpo, [](const DynamicsPoint& pt) { return pt.entropy_step1; });
}

void emit_plot_data(std::ostream& out, const TrainingTrace& trace) {
  write_csv_row(out, std::vector<std::string>{"series", "k", "value"});
  const auto series = [&out, &trace](const std::string& name, auto proj) {
    for (const TrainingRow& row : trace.rows)
      write_csv_row(out, std::vector<std::string>{name, std::to_string(row.iter),
                                                  format_double(proj(row))});
  };
  series("success_prob", [](const TrainingRow& r) { return r.success_prob; });
  series("mean_reward", [](const TrainingRow& r) { return r.mean_reward; });
  series("frac_all_negative", [](const TrainingRow& r) { return r.frac_all_negative; });
  series("grad_norm", [](const TrainingRow& r) { return r.grad_norm; });
  for (std::size_t c = 0; c < trace.entropy_columns.size(); ++c)
    series(trace.entropy_columns[c],
           [c](const TrainingRow& r) { return r.entropies.at(c); });
}

RunManifest run_experiment(const ExperimentConfig& cfg, std::uint64_t seed) {
  const auto t0 = std::chrono::steady_clock::now();
  RunManifest manifest;
  manifest.config_hash = config_hash(cfg);
  manifest.code_version = std::string(kVersion);
  manifest.seed = seed;
  manifest.started_at = iso_now();

  const std::filesystem::path dir = resolve_output_dir(cfg);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string());

  switch (cfg.kind) {
    case ExperimentKind::kDynamics: {
      const DynamicsSpec& d = cfg.dynamics;
      const DynamicsTrace sgpo =
          run_dynamics({Method::kSgpo, d.p0, d.q0}, d.iterations, d.eta);
      const DynamicsTrace grpo =
          run_dynamics({Method::kGrpo, d.p0, d.q0}, d.iterations, d.eta);
      std::ostringstream csv;
      write_dynamics_csv(csv, sgpo, grpo);
      write_file(dir / "dynamics.csv", csv.str());
      manifest.outputs.push_back("dynamics.csv");
      std::ostringstream plot;
      emit_plot_data(plot, sgpo, grpo);
      write_file(dir / "dynamics_plot.csv", plot.str());
      manifest.outputs.push_back("dynamics_plot.csv");
      break;
    }
    case ExperimentKind::kTrain: {
      SplitRng rng(seed);
      PolicyParams params = make_policy(cfg.tasks.at(0));
      const std::string tag = "_seed" + std::to_string(seed);
      std::optional<JudgeAuditLog> audit;
      const std::string audit_name = "judge_audit" + tag + ".jsonl";
      if (cfg.trainer.reward_mode == RewardKind::kSgpo &&
          cfg.trainer.judge.noise.flip_prob > 0.0) {
        std::filesystem::remove(dir / audit_name, ec);
        audit.emplace((dir / audit_name).string());
        manifest.outputs.push_back(audit_name);
      }
      const TrainingTrace trace = run_training(std::move(params), cfg.tasks, cfg.trainer,
                                               rng, audit ? &*audit : nullptr);
      std::ostringstream csv;
      write_training_csv(csv, trace);
      write_file(dir / ("train" + tag + ".csv"), csv.str());
      manifest.outputs.push_back("train" + tag + ".csv");
      std::ostringstream plot;
      emit_plot_data(plot, trace);
      write_file(dir / ("train" + tag + "_plot.csv"), plot.str());
      manifest.outputs.push_back("train" + tag + "_plot.csv");
      write_file(dir / ("final_policy" + tag + ".json"),
                 policy_to_json(trace.final_params) + "\n");
      manifest.outputs.push_back("final_policy" + tag + ".json");
      break;
    }
    case ExperimentKind::kVerify: {
      std::vector<std::string> ids =
          cfg.verify.lemma ? std::vector<std::string>{*cfg.verify.lemma} : lemma_ids();
      std::optional<DynamicsTrace> sgpo_trace, grpo_trace;
      Json arr = Json::array();
      bool all_pass = true;
      for (const std::string& id : ids) {
        const LemmaReport r = run_one_lemma(id, cfg.verify, sgpo_trace, grpo_trace);
        all_pass = all_pass && r.pass;
        arr.push_back(report_to_json(r));
      }
      write_file(dir / "verify_report.json", arr.dump(2) + "\n");
      manifest.outputs.push_back("verify_report.json");
      manifest.ok = all_pass;
      break;
    }
    case ExperimentKind::kEstimatorCheck: {
      require_stylized_shape(cfg.tasks);
      const EstimatorCheckSpec& e = cfg.estimator;
      const ChainTask& task = cfg.tasks.at(0);
      const PolicyParams params = make_stylized_policy(e.p, e.q);
      const std::vector<double> exact =
          brute_force_expected_gradient(task, params, e.reward, e.group_size);
      TrainerConfig tc;
      tc.group_size = e.group_size;
      tc.prompts_per_batch = 1;
      tc.iterations = 0;
      tc.reward_mode = e.reward.kind;
      tc.shaping = e.reward.shaping;
      tc.gating = Gating::kAlways;
      SplitRng rng(seed);
      std::vector<double> mc(exact.size(), 0.0);
      for (long long k = 0; k < e.samples; ++k) {
        const std::vector<double> g =
            estimate_gradient(params, cfg.tasks, tc, rng, static_cast<int>(k));
        for (std::size_t i = 0; i < mc.size(); ++i) mc[i] += g[i];
      }
      for (double& v : mc) v /= static_cast<double>(e.samples);
      double max_abs_diff = 0.0;
      for (std::size_t i = 0; i < mc.size(); ++i)
        max_abs_diff = std::max(max_abs_diff, std::abs(mc[i] - exact[i]));
      manifest.ok = max_abs_diff <= e.tolerance;
      const Json j{{"exact", exact},         {"mc", mc},
                   {"max_abs_diff", max_abs_diff}, {"samples", e.samples},
                   {"tolerance", e.tolerance},     {"ok", manifest.ok}};
      const std::string name = "estimator_check_seed" + std::to_string(seed) + ".json";
      write_file(dir / name, j.dump(2) + "\n");
      manifest.outputs.push_back(name);
      break;
    }
    case ExperimentKind::kSweep: {
      const Json sweep = Json::parse(cfg.sweep_json);
      const std::string base = sweep.at("base").get<std::string>();
      const Json& axes = sweep.at("axes");
      std::vector<std::string> names;
      std::vector<std::vector<Json>> values;
      long long total = 1;
      for (auto it = axes.begin(); it != axes.end(); ++it) {
        names.push_back(it.key());
        values.emplace_back(it.value().begin(), it.value().end());
        total *= static_cast<long long>(values.back().size());
      }
      if (total > 10000) throw ConfigError("sweep expands to more than 10000 points");

      Json root = Json::parse(cfg.canonical_json.empty() ? config_to_json(cfg).dump()
                                                         : cfg.canonical_json);
      root.erase("sweep");
      root["kind"] = base;
      root["seeds"] = Json::array({seed});

      Json index = Json::array();
      bool all_ok = true;
      std::vector<std::size_t> odo(names.size(), 0);
      for (long long point = 0; point < total; ++point) {
        Json pj = root;
        Json axis_values = Json::object();
        for (std::size_t a = 0; a < names.size(); ++a) {
          set_by_dotted_path(pj, names[a], values[a][odo[a]]);
          axis_values[names[a]] = values[a][odo[a]];
        }
        const std::string sub = "point_" + std::to_string(point);
        pj["output_dir"] =
            (std::filesystem::path(cfg.output_dir) / sub).generic_string();
        const ExperimentConfig pcfg = config_from_json(pj.dump());
        const RunManifest pm = run_experiment(pcfg, seed);
        all_ok = all_ok && pm.ok;
        index.push_back(Json{{"point", point},
                             {"dir", sub},
                             {"axes", axis_values},
                             {"config_hash", pm.config_hash},
                             {"ok", pm.ok}});
        // rightmost axis advances fastest
        for (std::size_t a = names.size(); a-- > 0;) {
          if (++odo[a] < values[a].size()) break;
          odo[a] = 0;
        }
      }
      write_file(dir / "sweep_index.json", index.dump(2) + "\n");
      manifest.outputs.push_back("sweep_index.json");
      manifest.ok = all_ok;
      break;
    }
  }

  manifest.finished_at = iso_now();
  manifest.wall_ms = std::chrono::duration<double, std::milli>(
                         std::chrono::steady_clock::now() - t0)
                         .count();
  const std::string name = "manifest_seed" + std::to_string(seed) + ".json";
  write_file(dir / name, manifest.to_json());
  return manifest;
}

}  // namespace sgpo
