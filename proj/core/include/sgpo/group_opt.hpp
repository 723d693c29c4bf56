#pragma once

#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "sgpo/chain_env.hpp"
#include "sgpo/judge.hpp"
#include "sgpo/policy.hpp"
#include "sgpo/reward.hpp"
#include "sgpo/rng.hpp"

namespace sgpo {

// Group-relative advantages (r - mean) / population-std. A group with reward
// std below 1e-12 yields exactly zero advantages (no update from that group).
std::vector<double> compute_advantages(std::span<const double> rewards);

// When shaped rewards replace outcome rewards in SGPO mode:
//  kAlways:          every group.
//  kAllNegativeOnly: only groups whose outcome rewards are all zero.
//  kFirstEpochs:     all-negative groups during the first gating_epochs
//                    iterations only (one iteration == one epoch here).
enum class Gating { kAlways, kAllNegativeOnly, kFirstEpochs };

struct TrainerConfig {
  int group_size = 8;          // G >= 2
  int prompts_per_batch = 1;   // N >= 1
  double step_size = 1.0;      // eta > 0
  int iterations = 0;          // K >= 0
  RewardKind reward_mode = RewardKind::kGrpo;
  ShapingConfig shaping{};
  Gating gating = Gating::kAllNegativeOnly;
  int gating_epochs = 3;
  std::optional<double> clip_epsilon;  // in (0,1); requires importance_sampling
  bool importance_sampling = false;
  JudgeConfig judge{};

  void validate() const;  // throws ConfigError naming the field
};

struct GroupSample {
  int task_index = 0;
  std::vector<Trajectory> trajectories;
  std::vector<double> rewards;     // effective, after gating/shaping
  std::vector<double> advantages;
  bool all_negative = false;       // outcome rewards all zero
};

// Draws one group for the task, computes effective rewards per the config's
// reward mode and gating at `iteration`, and fills advantages. SGPO shaping
// consumes the judge (substreams forked per sample; oracle when flip_prob=0).
GroupSample sample_group(const PolicyParams& params, const ChainTask& task,
                         int task_index, const TrainerConfig& cfg, int iteration,
                         SplitRng& rng, JudgeAuditLog* audit = nullptr);

struct BatchStats {
  std::vector<double> gradient;  // flat, (1/(N*G*H)) sum of score * advantage
  double mean_reward = 0.0;      // over all N*G effective rewards
  double frac_all_negative = 0.0;
};

// One batch of N groups (prompt slots drawn uniformly over tasks). Reduction
// order is fixed (group index, then sample, then step) for determinism.
BatchStats sample_batch(const PolicyParams& params, std::span<const ChainTask> tasks,
                        const TrainerConfig& cfg, int iteration, SplitRng& rng,
                        JudgeAuditLog* audit = nullptr);

// The batch gradient alone; unbiased for brute_force_expected_gradient.
std::vector<double> estimate_gradient(const PolicyParams& params,
                                      std::span<const ChainTask> tasks,
                                      const TrainerConfig& cfg, SplitRng& rng,
                                      int iteration = 0);

struct SurrogateEval {
  double value = 0.0;
  std::vector<double> gradient;
};

// Clipped importance-sampled surrogate for one group:
//   (1/(G*H)) sum_k min(rho_k * A_k, clip(rho_k, 1-eps, 1+eps) * A_k),
// rho_k = pi_params(y_k) / pi_old(y_k). Clipped-out samples contribute zero
// gradient. At params == old_params every rho is 1 and the gradient reduces to
// the plain per-group REINFORCE term.
SurrogateEval clipped_surrogate(const ChainTask& task, const PolicyParams& params,
                                const PolicyParams& old_params,
                                const GroupSample& group, double clip_epsilon);

std::vector<double> clipped_surrogate_gradient(const ChainTask& task,
                                               const PolicyParams& params,
                                               const PolicyParams& old_params,
                                               const GroupSample& group,
                                               double clip_epsilon);

struct TrainingRow {
  int iter = 0;                  // 1-based; stats after this iteration's update
  double success_prob = 0.0;     // post-update, mean over tasks
  double mean_reward = 0.0;      // batch that produced the update
  double frac_all_negative = 0.0;
  double grad_norm = 0.0;        // L2 of the batch gradient
  std::vector<double> entropies; // post-update, one per policy state
};

struct TrainingTrace {
  std::vector<std::string> entropy_columns;  // "entropy_state_<key>"
  std::vector<TrainingRow> rows;             // iterations 1..K
  PolicyParams final_params;
};

// Plain ascent loop: theta += eta * batch gradient, K iterations. Aborts with
// NumericError if any logit leaves [-kLogitCap, kLogitCap] (divergence guard;
// a one-line saturation warning goes to stderr when logits first near the cap).
TrainingTrace run_training(PolicyParams params, std::span<const ChainTask> tasks,
                           const TrainerConfig& cfg, SplitRng& rng,
                           JudgeAuditLog* audit = nullptr);

// CSV: iter,success_prob,mean_reward,frac_all_negative,grad_norm,entropy_state_*
void write_training_csv(std::ostream& out, const TrainingTrace& trace);

}  // namespace sgpo
