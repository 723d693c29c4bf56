#include "sgpo/chain_env.hpp"

#include <cmath>
#include <utility>

#include "json.hpp"
#include "sgpo/errors.hpp"
#include "sgpo/group_opt.hpp"
#include "sgpo/policy.hpp"
#include "sgpo/reward.hpp"

namespace sgpo {

void ChainTask::validate() const {
  if (horizon < 1) throw ConfigError("ChainTask.horizon must be >= 1");
  if (actions_per_step < 2) throw ConfigError("ChainTask.actions_per_step must be >= 2");
  if (static_cast<int>(correct_actions.size()) != horizon)
    throw ConfigError("ChainTask.correct_actions must have horizon entries");
  for (int a : correct_actions)
    if (a < 1 || a > actions_per_step)
      throw ConfigError("ChainTask.correct_actions entries must lie in [1, actions_per_step]");
  if (restricted_space && (horizon != 2 || actions_per_step != 2))
    throw ConfigError("ChainTask.restricted_space is only defined for horizon 2 with 2 actions");
}

ChainTask stylized_task() {
  ChainTask t;
  t.horizon = 2;
  t.actions_per_step = 2;
  t.correct_actions = {2, 2};
  t.restricted_space = true;
  return t;
}

namespace {

// Restricted space member check: {(1,1),(2,1),(2,2)} with correct = (2,2).
bool in_restricted_space(const ChainTask& task, std::span<const int> actions) {
  if (actions.empty()) return true;
  const int c1 = task.correct_actions[0];
  if (actions[0] != c1) {
    // forced branch: the single incorrect continuation
    for (std::size_t h = 1; h < actions.size(); ++h)
      if (actions[h] == task.correct_actions[h]) return false;
  }
  return true;
}

}  // namespace

Trajectory make_trajectory(const ChainTask& task, std::vector<int> actions) {
  task.validate();
  if (static_cast<int>(actions.size()) > task.horizon)
    throw ConfigError("trajectory longer than the task horizon");
  for (int a : actions)
    if (a < 1 || a > task.actions_per_step)
      throw ConfigError("trajectory action outside [1, actions_per_step]");
  if (task.restricted_space && !in_restricted_space(task, actions))
    throw ConfigError("trajectory outside the restricted space");

  Trajectory t;
  t.actions = std::move(actions);
  t.emitted_steps = static_cast<int>(t.actions.size());
  if (t.emitted_steps == 0) {
    t.first_error = 1;  // zero parseable steps err at step 1
    return t;
  }
  for (int h = 0; h < t.emitted_steps; ++h) {
    if (t.actions[h] != task.correct_actions[h]) {
      t.first_error = h + 1;
      break;
    }
  }
  return t;
}

bool is_correct(const ChainTask& task, const Trajectory& t) {
  return t.emitted_steps == task.horizon && !t.first_error.has_value();
}

std::vector<Trajectory> enumerate_trajectories(const ChainTask& task) {
  task.validate();
  if (task.restricted_space) {
    return {make_trajectory(task, {1, 1}), make_trajectory(task, {2, 1}),
            make_trajectory(task, {2, 2})};
  }
  double count = std::pow(static_cast<double>(task.actions_per_step), task.horizon);
  if (count > static_cast<double>(kMaxEnumeration))
    throw ConfigError("enumeration too large: actions_per_step^horizon exceeds 1e6");

  std::vector<Trajectory> out;
  out.reserve(static_cast<std::size_t>(count));
  std::vector<int> actions(task.horizon, 1);
  while (true) {
    out.push_back(make_trajectory(task, actions));
    int h = task.horizon - 1;
    while (h >= 0 && actions[h] == task.actions_per_step) {
      actions[h] = 1;
      --h;
    }
    if (h < 0) break;
    ++actions[h];
  }
  return out;
}

double trajectory_log_prob(const ChainTask& task, const PolicyParams& params,
                           const Trajectory& t) {
  if (t.emitted_steps > task.horizon)
    throw ConfigError("trajectory longer than the task horizon");
  double lp = 0.0;
  std::vector<int> prefix;
  prefix.reserve(t.actions.size());
  for (int h = 0; h < t.emitted_steps; ++h) {
    const int a = t.actions[h];
    if (params.state_index(prefix) >= 0) {
      const std::vector<double> probs = action_probs(params, prefix);
      lp += std::log(probs[a - 1]);
    }
    // states without a row are forced: probability 1
    prefix.push_back(a);
  }
  return lp;
}

double trajectory_probability(const ChainTask& task, const PolicyParams& params,
                              const Trajectory& t) {
  return std::exp(trajectory_log_prob(task, params, t));
}

std::vector<double> brute_force_expected_gradient(const ChainTask& task,
                                                  const PolicyParams& params,
                                                  const RewardSpec& reward,
                                                  int group_size) {
  if (group_size < 2) throw ConfigError("brute force group_size must be >= 2");
  const std::vector<Trajectory> space = enumerate_trajectories(task);
  const auto m = static_cast<long long>(space.size());
  double tuples = std::pow(static_cast<double>(m), group_size);
  if (tuples > static_cast<double>(kMaxEnumeration))
    throw ConfigError("enumeration too large: |space|^group_size exceeds 1e6");

  std::vector<double> prob(space.size()), rew(space.size());
  std::vector<std::vector<double>> score_sum(space.size());
  for (std::size_t i = 0; i < space.size(); ++i) {
    prob[i] = trajectory_probability(task, params, space[i]);
    rew[i] = reward(task, space[i]);
    std::vector<double> s(params.num_logits(), 0.0);
    std::vector<int> prefix;
    for (int h = 0; h < space[i].emitted_steps; ++h) {
      const int a = space[i].actions[h];
      if (params.state_index(prefix) >= 0) {
        const std::vector<double> step = score(params, prefix, a);
        for (int j = 0; j < params.num_logits(); ++j) s[j] += step[j];
      }
      prefix.push_back(a);
    }
    score_sum[i] = std::move(s);
  }

  const double norm = 1.0 / (static_cast<double>(group_size) * task.horizon);
  std::vector<double> grad(params.num_logits(), 0.0);
  std::vector<int> idx(group_size, 0);
  std::vector<double> rewards(group_size);
  while (true) {
    double joint = 1.0;
    for (int k = 0; k < group_size; ++k) {
      joint *= prob[idx[k]];
      rewards[k] = rew[idx[k]];
    }
    if (joint > 0.0) {
      const std::vector<double> adv = compute_advantages(rewards);
      for (int k = 0; k < group_size; ++k) {
        if (adv[k] == 0.0) continue;
        const double w = joint * adv[k] * norm;
        const std::vector<double>& s = score_sum[idx[k]];
        for (int j = 0; j < params.num_logits(); ++j) grad[j] += w * s[j];
      }
    }
    int k = group_size - 1;
    while (k >= 0 && idx[k] == m - 1) {
      idx[k] = 0;
      --k;
    }
    if (k < 0) break;
    ++idx[k];
  }
  return grad;
}

std::string chain_task_to_json(const ChainTask& task) {
  nlohmann::json j;
  j["horizon"] = task.horizon;
  j["actions_per_step"] = task.actions_per_step;
  j["correct_actions"] = task.correct_actions;
  j["restricted_space"] = task.restricted_space;
  return j.dump();
}

ChainTask chain_task_from_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("chain task JSON parse error: ") + e.what());
  }
  ChainTask t;
  try {
    t.horizon = j.at("horizon").get<int>();
    t.actions_per_step = j.at("actions_per_step").get<int>();
    t.correct_actions = j.at("correct_actions").get<std::vector<int>>();
    t.restricted_space = j.value("restricted_space", false);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("chain task JSON: ") + e.what());
  }
  t.validate();
  return t;
}

}  // namespace sgpo
