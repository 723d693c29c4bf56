#pragma once

#include "sgpo/chain_env.hpp"
#include "sgpo/rational.hpp"

namespace sgpo {

// Per-trajectory reward shape for incorrect responses.
//  kAllIncorrect:          sigmoid(beta * (RTS - gamma)) for every incorrect sample.
//  kAllNegativeGroupsOnly: same per-trajectory value; the group-level gate that
//                          decides *when* shaping applies lives in the trainer
//                          (TrainerConfig::gating), since a single trajectory
//                          cannot see its group.
//  kLinearRts:             raw RTS (stylized-model convention, rewards 0/0.5/1
//                          on the restricted two-step task).
enum class ShapingMode { kAllIncorrect, kAllNegativeGroupsOnly, kLinearRts };

struct ShapingConfig {
  double beta = 10.0;   // intensity, > 0
  double gamma = 0.5;   // RTS threshold, in (0, 1)
  ShapingMode mode = ShapingMode::kAllIncorrect;

  void validate() const;  // throws ConfigError naming the field
};

// 1 for fully correct trajectories, else 0.
double outcome_reward(const ChainTask& task, const Trajectory& t);

// Reasoning-trajectory score, exact:
//   (first_error - 1) / H   when an error exists,
//   emitted_steps / H       for error-free truncated responses,
//   1                       for correct responses.
Rational rts(const ChainTask& task, const Trajectory& t);

// Shaped value for a known RTS (used directly when the RTS comes from a judge).
double shape_rts(const ShapingConfig& cfg, Rational score);

// 1 for correct trajectories; shape_rts(cfg, rts(...)) otherwise. Incorrect
// responses score strictly below 1; sigmoid modes keep them strictly above 0.
double sgpo_reward(const ChainTask& task, const Trajectory& t, const ShapingConfig& cfg);

enum class RewardKind { kGrpo, kSgpo };

// Reward rule bundled for oracles and the trainer: plain outcome reward, or
// the shaped variant.
struct RewardSpec {
  RewardKind kind = RewardKind::kGrpo;
  ShapingConfig shaping{};

  double operator()(const ChainTask& task, const Trajectory& t) const;
};

}  // namespace sgpo
