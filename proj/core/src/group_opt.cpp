#include "sgpo/group_opt.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "sgpo/csv.hpp"
#include "sgpo/errors.hpp"

namespace sgpo {

namespace {

constexpr double kStdFloor = 1e-12;

}  // namespace

std::vector<double> compute_advantages(std::span<const double> rewards) {
  if (rewards.size() < 2) throw ConfigError("compute_advantages: need at least 2 rewards");
  const auto n = static_cast<double>(rewards.size());
  const double mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) / n;
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  const double std_pop = std::sqrt(var / n);
  std::vector<double> adv(rewards.size(), 0.0);
  if (std_pop < kStdFloor) return adv;  // constant group: no update
  for (std::size_t i = 0; i < rewards.size(); ++i) adv[i] = (rewards[i] - mean) / std_pop;
  return adv;
}

void TrainerConfig::validate() const {
  if (group_size < 2) throw ConfigError("TrainerConfig.group_size must be >= 2");
  if (prompts_per_batch < 1) throw ConfigError("TrainerConfig.prompts_per_batch must be >= 1");
  if (!(step_size > 0.0)) throw ConfigError("TrainerConfig.step_size must be positive");
  if (iterations < 0) throw ConfigError("TrainerConfig.iterations must be >= 0");
  if (gating == Gating::kFirstEpochs && gating_epochs < 0)
    throw ConfigError("TrainerConfig.gating_epochs must be >= 0");
  if (clip_epsilon.has_value()) {
    if (!(*clip_epsilon > 0.0 && *clip_epsilon < 1.0))
      throw ConfigError("TrainerConfig.clip_epsilon must lie in (0, 1)");
    if (!importance_sampling)
      throw ConfigError("TrainerConfig.clip_epsilon requires importance_sampling");
  }
  shaping.validate();
  judge.validate();
}

namespace {

bool shaping_applies(const TrainerConfig& cfg, int iteration, bool all_negative) {
  if (cfg.reward_mode != RewardKind::kSgpo) return false;
  switch (cfg.gating) {
    case Gating::kAlways:
      return true;
    case Gating::kAllNegativeOnly:
      return all_negative;
    case Gating::kFirstEpochs:
      return all_negative && iteration < cfg.gating_epochs;
  }
  return false;
}

}  // namespace

GroupSample sample_group(const PolicyParams& params, const ChainTask& task,
                         int task_index, const TrainerConfig& cfg, int iteration,
                         SplitRng& rng, JudgeAuditLog* audit) {
  GroupSample group;
  group.task_index = task_index;
  group.trajectories.reserve(static_cast<std::size_t>(cfg.group_size));
  std::vector<double> outcome(static_cast<std::size_t>(cfg.group_size));
  for (int i = 0; i < cfg.group_size; ++i) {
    group.trajectories.push_back(sample_trajectory(params, task, rng));
    outcome[static_cast<std::size_t>(i)] = outcome_reward(task, group.trajectories.back());
  }
  group.all_negative =
      std::all_of(outcome.begin(), outcome.end(), [](double r) { return r == 0.0; });

  group.rewards = outcome;
  if (shaping_applies(cfg, iteration, group.all_negative)) {
    for (int i = 0; i < cfg.group_size; ++i) {
      const Trajectory& t = group.trajectories[static_cast<std::size_t>(i)];
      if (is_correct(task, t)) {
        group.rewards[static_cast<std::size_t>(i)] = 1.0;
        continue;
      }
      SplitRng judge_rng = rng.fork("judge", static_cast<std::uint64_t>(i));
      if (cfg.judge.noise.flip_prob == 0.0 && audit == nullptr) {
        group.rewards[static_cast<std::size_t>(i)] = shape_rts(cfg.shaping, rts(task, t));
      } else {
        const JudgeVerdict verdict = judged_first_error(task, t, cfg.judge, judge_rng);
        Trajectory judged = t;
        judged.first_error = verdict.first_error;
        const Rational score = rts(task, judged);
        if (audit != nullptr) audit->record(task, t, verdict, score);
        group.rewards[static_cast<std::size_t>(i)] = shape_rts(cfg.shaping, score);
      }
    }
  }
  group.advantages = compute_advantages(group.rewards);
  return group;
}

BatchStats sample_batch(const PolicyParams& params, std::span<const ChainTask> tasks,
                        const TrainerConfig& cfg, int iteration, SplitRng& rng,
                        JudgeAuditLog* audit) {
  cfg.validate();
  if (tasks.empty()) throw ConfigError("sample_batch: no tasks");
  for (const ChainTask& t : tasks) t.validate();

  BatchStats stats;
  stats.gradient.assign(static_cast<std::size_t>(params.num_logits()), 0.0);
  double reward_sum = 0.0;
  int all_negative_groups = 0;

  SplitRng iter_rng = rng.fork("iter", static_cast<std::uint64_t>(iteration));
  for (int n = 0; n < cfg.prompts_per_batch; ++n) {
    SplitRng group_rng = iter_rng.fork("group", static_cast<std::uint64_t>(n));
    const int task_index =
        tasks.size() == 1
            ? 0
            : static_cast<int>(group_rng.uniform() * static_cast<double>(tasks.size())) %
                  static_cast<int>(tasks.size());
    const ChainTask& task = tasks[static_cast<std::size_t>(task_index)];
    const GroupSample group =
        sample_group(params, task, task_index, cfg, iteration, group_rng, audit);

    reward_sum += std::accumulate(group.rewards.begin(), group.rewards.end(), 0.0);
    all_negative_groups += group.all_negative ? 1 : 0;

    if (cfg.clip_epsilon.has_value()) {
      // single update per batch: ratios are 1, identical to the plain term
      const std::vector<double> g =
          clipped_surrogate_gradient(task, params, params, group, *cfg.clip_epsilon);
      for (std::size_t j = 0; j < stats.gradient.size(); ++j) stats.gradient[j] += g[j];
    } else {
      // accumulate (delta - pi) * advantage along each trajectory, fixed order
      const double inv_gh =
          1.0 / (static_cast<double>(cfg.group_size) * static_cast<double>(task.horizon));
      for (int i = 0; i < cfg.group_size; ++i) {
        const double a = group.advantages[static_cast<std::size_t>(i)];
        if (a == 0.0) continue;
        const Trajectory& t = group.trajectories[static_cast<std::size_t>(i)];
        std::vector<int> prefix;
        prefix.reserve(t.actions.size());
        for (int h = 0; h < t.emitted_steps; ++h) {
          const int action = t.actions[static_cast<std::size_t>(h)];
          const int sid = params.state_index(prefix);
          if (sid >= 0) {
            const std::vector<double> probs = action_probs(params, prefix);
            const std::size_t base =
                static_cast<std::size_t>(sid) * static_cast<std::size_t>(params.actions);
            for (int c = 0; c < params.actions; ++c)
              stats.gradient[base + static_cast<std::size_t>(c)] +=
                  inv_gh * a *
                  ((c == action - 1 ? 1.0 : 0.0) - probs[static_cast<std::size_t>(c)]);
          }
          prefix.push_back(action);
        }
      }
    }
  }

  const double scale = 1.0 / static_cast<double>(cfg.prompts_per_batch);
  for (double& g : stats.gradient) g *= scale;
  stats.mean_reward = reward_sum / (static_cast<double>(cfg.prompts_per_batch) *
                                    static_cast<double>(cfg.group_size));
  stats.frac_all_negative =
      static_cast<double>(all_negative_groups) / static_cast<double>(cfg.prompts_per_batch);
  return stats;
}

std::vector<double> estimate_gradient(const PolicyParams& params,
                                      std::span<const ChainTask> tasks,
                                      const TrainerConfig& cfg, SplitRng& rng,
                                      int iteration) {
  return sample_batch(params, tasks, cfg, iteration, rng).gradient;
}

SurrogateEval clipped_surrogate(const ChainTask& task, const PolicyParams& params,
                                const PolicyParams& old_params,
                                const GroupSample& group, double clip_epsilon) {
  if (!(clip_epsilon > 0.0 && clip_epsilon < 1.0))
    throw ConfigError("clipped_surrogate: clip_epsilon must lie in (0, 1)");
  if (group.trajectories.size() != group.advantages.size())
    throw ConfigError("clipped_surrogate: group advantages missing");
  const double lo = 1.0 - clip_epsilon;
  const double hi = 1.0 + clip_epsilon;

  SurrogateEval eval;
  eval.gradient.assign(static_cast<std::size_t>(params.num_logits()), 0.0);
  const double norm =
      1.0 / (static_cast<double>(group.trajectories.size()) * task.horizon);

  for (std::size_t i = 0; i < group.trajectories.size(); ++i) {
    const Trajectory& t = group.trajectories[i];
    const double adv = group.advantages[i];
    const double ratio = std::exp(trajectory_log_prob(task, params, t) -
                                  trajectory_log_prob(task, old_params, t));
    const double clipped = std::clamp(ratio, lo, hi);
    const double unclipped_term = ratio * adv;
    const double clipped_term = clipped * adv;
    eval.value += norm * std::min(unclipped_term, clipped_term);
    if (adv == 0.0) continue;
    // min picks the unclipped branch (ties included): gradient rho * score * A
    if (unclipped_term <= clipped_term) {
      std::vector<int> prefix;
      prefix.reserve(t.actions.size());
      for (int h = 0; h < t.emitted_steps; ++h) {
        const int action = t.actions[static_cast<std::size_t>(h)];
        const int sid = params.state_index(prefix);
        if (sid >= 0) {
          const std::vector<double> probs = action_probs(params, prefix);
          const std::size_t base =
              static_cast<std::size_t>(sid) * static_cast<std::size_t>(params.actions);
          for (int c = 0; c < params.actions; ++c)
            eval.gradient[base + static_cast<std::size_t>(c)] +=
                norm * ratio * adv *
                ((c == action - 1 ? 1.0 : 0.0) - probs[static_cast<std::size_t>(c)]);
        }
        prefix.push_back(action);
      }
    }
  }
  return eval;
}

std::vector<double> clipped_surrogate_gradient(const ChainTask& task,
                                               const PolicyParams& params,
                                               const PolicyParams& old_params,
                                               const GroupSample& group,
                                               double clip_epsilon) {
  return clipped_surrogate(task, params, old_params, group, clip_epsilon).gradient;
}

TrainingTrace run_training(PolicyParams params, std::span<const ChainTask> tasks,
                           const TrainerConfig& cfg, SplitRng& rng,
                           JudgeAuditLog* audit) {
  cfg.validate();
  params.validate();
  if (tasks.empty()) throw ConfigError("run_training: no tasks");
  const int horizon = tasks[0].horizon;
  for (const ChainTask& t : tasks) {
    t.validate();
    if (t.horizon != horizon || t.actions_per_step != tasks[0].actions_per_step ||
        t.restricted_space != tasks[0].restricted_space)
      throw ConfigError("run_training: tasks must share horizon, action count and space");
    if (t.restricted_space && t.correct_actions[0] != tasks[0].correct_actions[0])
      throw ConfigError("run_training: restricted tasks must share the first correct action");
  }

  TrainingTrace trace;
  trace.entropy_columns.reserve(params.states.size());
  for (const auto& s : params.states)
    trace.entropy_columns.push_back("entropy_state_" + state_key(s));
  trace.rows.reserve(static_cast<std::size_t>(cfg.iterations));

  bool warned_near_cap = false;
  for (int k = 0; k < cfg.iterations; ++k) {
    const BatchStats batch = sample_batch(params, tasks, cfg, k, rng, audit);
    double norm2 = 0.0;
    for (std::size_t j = 0; j < batch.gradient.size(); ++j) {
      params.logits[j] += cfg.step_size * batch.gradient[j];
      norm2 += batch.gradient[j] * batch.gradient[j];
    }
    double max_abs = 0.0;
    for (double v : params.logits) max_abs = std::max(max_abs, std::abs(v));
    if (max_abs > kLogitCap)
      throw NumericError("training diverged: logit magnitude above 50 at iteration " +
                         std::to_string(k + 1));
    if (!warned_near_cap && max_abs > kLogitCap - 5.0) {
      std::fprintf(stderr, "warning: logit magnitude %.1f approaching the cap\n", max_abs);
      warned_near_cap = true;
    }

    TrainingRow row;
    row.iter = k + 1;
    double sp = 0.0;
    for (const ChainTask& t : tasks) sp += success_probability(params, t);
    row.success_prob = sp / static_cast<double>(tasks.size());
    row.mean_reward = batch.mean_reward;
    row.frac_all_negative = batch.frac_all_negative;
    row.grad_norm = std::sqrt(norm2);
    row.entropies.reserve(params.states.size());
    for (const auto& s : params.states) row.entropies.push_back(step_entropy(params, s));
    trace.rows.push_back(std::move(row));
  }
  trace.final_params = std::move(params);
  return trace;
}

void write_training_csv(std::ostream& out, const TrainingTrace& trace) {
  std::vector<std::string> header = {"iter", "success_prob", "mean_reward",
                                     "frac_all_negative", "grad_norm"};
  header.insert(header.end(), trace.entropy_columns.begin(), trace.entropy_columns.end());
  write_csv_row(out, header);
  for (const TrainingRow& row : trace.rows) {
    std::vector<std::string> cells = {std::to_string(row.iter),
                                      format_double(row.success_prob),
                                      format_double(row.mean_reward),
                                      format_double(row.frac_all_negative),
                                      format_double(row.grad_norm)};
    for (double e : row.entropies) cells.push_back(format_double(e));
    write_csv_row(out, cells);
  }
}

}  // namespace sgpo
