#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "sgpo/group_opt.hpp"
#include "sgpo/lemma_verify.hpp"
#include "sgpo/stylized_dynamics.hpp"

namespace sgpo {

// Environment variable that, when set, prefixes every output_dir.
inline constexpr const char* kOutputRootEnv = "SGPO_OUTPUT_ROOT";

enum class ExperimentKind { kDynamics, kTrain, kVerify, kEstimatorCheck, kSweep };

struct DynamicsSpec {
  int iterations = 200;
  double p0 = 0.5;
  double q0 = 0.5;
  double eta = 1.0;
};

struct EstimatorCheckSpec {
  long long samples = 1'000'000;  // Monte-Carlo group draws
  int group_size = 2;
  double p = 0.5;
  double q = 0.5;
  RewardSpec reward{RewardKind::kSgpo, {10.0, 0.5, ShapingMode::kLinearRts}};
  double tolerance = 3e-3;  // per coordinate, |MC - exact|
};

struct VerifySpec {
  int resolution_1d = 10000;
  int resolution_2d = 500;
  double margin = 1e-12;
  std::optional<std::string> lemma;  // run just one id
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::kDynamics;
  std::vector<ChainTask> tasks;  // defaults to the stylized task
  TrainerConfig trainer;
  DynamicsSpec dynamics;
  EstimatorCheckSpec estimator;
  VerifySpec verify;
  std::vector<std::uint64_t> seeds = {0};
  std::string output_dir = "out";
  // kSweep: dotted config paths -> value lists, expanded as a cartesian
  // product over a "train" or "dynamics" base, e.g.
  //   {"base": "train", "axes": {"trainer.shaping.beta": [1, 5, 10]}}
  std::string sweep_json;
  // Canonical serialized form (defaults applied, keys sorted); hash input.
  std::string canonical_json;
};

// Parses, applies defaults (beta 10, gamma 0.5, group_size 8, step size 1,
// gating ALL_NEGATIVE_ONLY), validates every block, and records the canonical
// form. Unknown keys and invalid values raise ConfigError naming the field;
// malformed JSON raises ConfigError with position info.
ExperimentConfig config_from_json(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

// FNV-1a 64 over the canonical serialized config; stable under key reordering
// in the source file.
std::string config_hash(const ExperimentConfig& cfg);

struct RunManifest {
  std::string config_hash;
  std::string code_version;
  std::uint64_t seed = 0;
  std::vector<std::string> outputs;  // repo-relative file paths, write order
  std::string started_at;            // ISO-8601 UTC
  std::string finished_at;
  double wall_ms = 0.0;
  bool ok = true;  // verify / estimator-check status
  std::string to_json() const;
};

// Runs one experiment for one seed under resolve_output_dir(cfg). Every data
// file is written before the manifest (manifest_seed<seed>.json), so a
// manifest's presence marks a complete run. Returns the manifest; ok=false
// signals a failed verification-style run (CLI exit 3).
RunManifest run_experiment(const ExperimentConfig& cfg, std::uint64_t seed);

// output_dir, prefixed by $SGPO_OUTPUT_ROOT when set.
std::filesystem::path resolve_output_dir(const ExperimentConfig& cfg);

// Long-format plot data (series,k,value). Dynamics traces yield the four
// panel series p_/pq_ per method plus the two entropy1_ series; training
// traces yield one series per trace column including every entropy state.
// No trace data -> header only.
void emit_plot_data(std::ostream& out, const DynamicsTrace& sgpo, const DynamicsTrace& grpo);
void emit_plot_data(std::ostream& out, const TrainingTrace& trace);

}  // namespace sgpo
