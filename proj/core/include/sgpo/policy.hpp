#pragma once

#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "sgpo/chain_env.hpp"
#include "sgpo/rng.hpp"

namespace sgpo {

inline constexpr double kLogitCap = 50.0;

// Tabular softmax policy over prefix states of a chain task. States are held
// in breadth-first order (by prefix length, then lexicographically by action
// sequence); within a state, actions 1..A in index order. Score and gradient
// vectors are flat over this layout, one coordinate per logit, so for the
// stylized task the four coordinates are (root:1, root:2, after-2:1, after-2:2).
struct PolicyParams {
  std::vector<std::vector<int>> states;  // prefix per state id
  std::vector<double> logits;            // states.size() * actions, row-major
  int actions = 0;

  int num_states() const { return static_cast<int>(states.size()); }
  int num_logits() const { return static_cast<int>(logits.size()); }
  // State id for a prefix, or -1 when the prefix has no decision row.
  int state_index(std::span<const int> prefix) const;
  std::span<const double> row(int state_id) const;
  std::span<double> row(int state_id);

  // Finite logits within |kLogitCap|; rows consistent with `actions`.
  void validate() const;

 private:
  friend PolicyParams make_policy(const ChainTask& task);
  std::unordered_map<std::string, int> index_;
};

// "root" for the empty prefix, else actions joined by '.', e.g. "2", "2.1".
std::string state_key(std::span<const int> prefix);

// Zero-initialized (uniform) policy with one row per decision state of the
// task. Restricted tasks only have rows for the root and the correct first
// action; the forced branch carries no parameters.
PolicyParams make_policy(const ChainTask& task);

// Stylized-task policy with given correct-action probabilities p (step 1) and
// q (step 2 after a correct first step). Logit layout (0, logit(p)), (0, logit(q)).
PolicyParams make_stylized_policy(double p, double q);

// Softmax over the state's logit row. Throws ConfigError for unknown prefixes.
std::vector<double> action_probs(const PolicyParams& params, std::span<const int> prefix);

// d log pi(action | prefix) / d logits, flat over all logits: delta - pi on the
// state's row, zero elsewhere.
std::vector<double> score(const PolicyParams& params, std::span<const int> prefix, int action);

// Shannon entropy (nats) of the action distribution at the state.
double step_entropy(const PolicyParams& params, std::span<const int> prefix);

// Probability of the correct action at the state.
double correct_action_prob(const PolicyParams& params, const ChainTask& task,
                           std::span<const int> prefix);

// Probability of emitting the task's fully correct trajectory.
double success_probability(const PolicyParams& params, const ChainTask& task);

// Autoregressive draw of a full-length trajectory. Forced steps of a
// restricted task consume no randomness.
Trajectory sample_trajectory(const PolicyParams& params, const ChainTask& task, SplitRng& rng);

// JSON: {state_key: [logits row]}, e.g. {"root":[0.0,0.3],"2":[0.0,-0.1]}.
std::string policy_to_json(const PolicyParams& params);
PolicyParams policy_from_json(std::string_view text, const ChainTask& task);

}  // namespace sgpo
