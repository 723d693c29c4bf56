#include "sgpo/reward.hpp"

#include <cmath>

#include "sgpo/errors.hpp"

namespace sgpo {

void ShapingConfig::validate() const {
  if (!(beta > 0.0)) throw ConfigError("ShapingConfig.beta must be positive");
  if (!(gamma > 0.0 && gamma < 1.0))
    throw ConfigError("ShapingConfig.gamma must lie in (0, 1)");
}

double outcome_reward(const ChainTask& task, const Trajectory& t) {
  return is_correct(task, t) ? 1.0 : 0.0;
}

Rational rts(const ChainTask& task, const Trajectory& t) {
  if (t.emitted_steps > task.horizon)
    throw ConfigError("rts: trajectory longer than the task horizon");
  if (t.first_error.has_value()) {
    const int e = *t.first_error;
    if (e < 1 || e > task.horizon) throw ConfigError("rts: first_error outside [1, H]");
    return Rational(e - 1, task.horizon);
  }
  if (t.emitted_steps < task.horizon)
    return Rational(t.emitted_steps, task.horizon);  // error-free truncation
  return Rational(1, 1);
}

namespace {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

double shape_rts(const ShapingConfig& cfg, Rational score) {
  cfg.validate();
  if (cfg.mode == ShapingMode::kLinearRts) return score.value();
  return sigmoid(cfg.beta * (score.value() - cfg.gamma));
}

double sgpo_reward(const ChainTask& task, const Trajectory& t, const ShapingConfig& cfg) {
  if (is_correct(task, t)) return 1.0;
  return shape_rts(cfg, rts(task, t));
}

double RewardSpec::operator()(const ChainTask& task, const Trajectory& t) const {
  return kind == RewardKind::kGrpo ? outcome_reward(task, t)
                                   : sgpo_reward(task, t, shaping);
}

}  // namespace sgpo
