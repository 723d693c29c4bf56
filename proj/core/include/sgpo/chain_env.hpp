#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace sgpo {

struct PolicyParams;
struct RewardSpec;

// Hard cap on enumerated trajectories and on ordered group tuples.
inline constexpr long long kMaxEnumeration = 1'000'000;

// Synthetic multi-step chain: at step h (1-based) exactly one action index in
// [1, actions_per_step] is correct. restricted_space collapses everything after
// the first wrong action into a single forced branch; that construction is only
// defined for horizon 2 with 2 actions, where the trajectory space becomes
// {(1,1),(2,1),(2,2)}.
struct ChainTask {
  int horizon = 0;
  int actions_per_step = 0;
  std::vector<int> correct_actions;
  bool restricted_space = false;

  void validate() const;  // throws ConfigError
};

// The two-step restricted task with correct actions (2,2).
ChainTask stylized_task();

// A produced response. Actions are 1-based. emitted_steps < horizon models a
// truncated response; an empty response counts as erring at step 1.
struct Trajectory {
  std::vector<int> actions;
  int emitted_steps = 0;                // == actions.size()
  std::optional<int> first_error;      // 1-based step of the first deviation
};

// Builds a trajectory and derives first_error against the task's correct path.
Trajectory make_trajectory(const ChainTask& task, std::vector<int> actions);

bool is_correct(const ChainTask& task, const Trajectory& t);

// Every full-length trajectory, lexicographic by action sequence (the
// restricted space keeps its three canonical members in that order).
std::vector<Trajectory> enumerate_trajectories(const ChainTask& task);

double trajectory_log_prob(const ChainTask& task, const PolicyParams& params,
                           const Trajectory& t);
double trajectory_probability(const ChainTask& task, const PolicyParams& params,
                              const Trajectory& t);

// Exact expectation of the group-normalized REINFORCE gradient over all
// ordered group_size-tuples of trajectories, weighted by their joint
// probability, applying the same advantage rule as the sampled estimator.
// Independent reference for estimate_gradient and the closed-form population
// gradients. Guard: |space|^group_size <= kMaxEnumeration.
std::vector<double> brute_force_expected_gradient(const ChainTask& task,
                                                  const PolicyParams& params,
                                                  const RewardSpec& reward,
                                                  int group_size);

// JSON: {"horizon":2,"actions_per_step":2,"correct_actions":[2,2],
//        "restricted_space":true}
std::string chain_task_to_json(const ChainTask& task);
ChainTask chain_task_from_json(std::string_view text);

}  // namespace sgpo
