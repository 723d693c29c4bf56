#include "sgpo/policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "json.hpp"
#include "sgpo/errors.hpp"

namespace sgpo {

std::string state_key(std::span<const int> prefix) {
  if (prefix.empty()) return "root";
  std::string key;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    if (i) key += '.';
    key += std::to_string(prefix[i]);
  }
  return key;
}

int PolicyParams::state_index(std::span<const int> prefix) const {
  const auto it = index_.find(state_key(prefix));
  return it == index_.end() ? -1 : it->second;
}

std::span<const double> PolicyParams::row(int state_id) const {
  return {logits.data() + static_cast<std::size_t>(state_id) * actions,
          static_cast<std::size_t>(actions)};
}

std::span<double> PolicyParams::row(int state_id) {
  return {logits.data() + static_cast<std::size_t>(state_id) * actions,
          static_cast<std::size_t>(actions)};
}

void PolicyParams::validate() const {
  if (actions < 2) throw ConfigError("PolicyParams.actions must be >= 2");
  if (logits.size() != states.size() * static_cast<std::size_t>(actions))
    throw ConfigError("PolicyParams.logits size mismatch");
  for (double v : logits) {
    if (!std::isfinite(v)) throw ConfigError("PolicyParams.logits must be finite");
    if (std::abs(v) > kLogitCap)
      throw ConfigError("PolicyParams.logits exceed the magnitude cap of 50");
  }
}

PolicyParams make_policy(const ChainTask& task) {
  task.validate();
  PolicyParams p;
  p.actions = task.actions_per_step;
  if (task.restricted_space) {
    p.states.push_back({});
    p.states.push_back({task.correct_actions[0]});
  } else {
    // breadth-first: all prefixes of length < horizon, lexicographic per level
    std::vector<std::vector<int>> level = {{}};
    for (int h = 0; h < task.horizon; ++h) {
      for (const auto& s : level) p.states.push_back(s);
      if (h + 1 == task.horizon) break;
      std::vector<std::vector<int>> next;
      next.reserve(level.size() * task.actions_per_step);
      for (const auto& s : level) {
        for (int a = 1; a <= task.actions_per_step; ++a) {
          auto t = s;
          t.push_back(a);
          next.push_back(std::move(t));
        }
      }
      level = std::move(next);
      if (p.states.size() + level.size() >
          static_cast<std::size_t>(kMaxEnumeration))
        throw ConfigError("enumeration too large: policy state table exceeds 1e6");
    }
  }
  p.logits.assign(p.states.size() * static_cast<std::size_t>(p.actions), 0.0);
  for (std::size_t i = 0; i < p.states.size(); ++i)
    p.index_.emplace(state_key(p.states[i]), static_cast<int>(i));
  return p;
}

PolicyParams make_stylized_policy(double p, double q) {
  if (!(p > 0.0 && p < 1.0 && q > 0.0 && q < 1.0))
    throw ConfigError("stylized policy needs p, q in (0, 1)");
  PolicyParams params = make_policy(stylized_task());
  params.logits = {0.0, std::log(p / (1.0 - p)), 0.0, std::log(q / (1.0 - q))};
  return params;
}

namespace {

int require_state(const PolicyParams& params, std::span<const int> prefix) {
  const int id = params.state_index(prefix);
  if (id < 0)
    throw ConfigError("unknown policy state: " + state_key(prefix));
  return id;
}

std::vector<double> softmax_row(std::span<const double> row) {
  const double m = *std::max_element(row.begin(), row.end());
  std::vector<double> out(row.size());
  double z = 0.0;
  for (std::size_t i = 0; i < row.size(); ++i) {
    out[i] = std::exp(row[i] - m);
    z += out[i];
  }
  for (double& v : out) v /= z;
  return out;
}

}  // namespace

std::vector<double> action_probs(const PolicyParams& params, std::span<const int> prefix) {
  return softmax_row(params.row(require_state(params, prefix)));
}

std::vector<double> score(const PolicyParams& params, std::span<const int> prefix, int action) {
  const int id = require_state(params, prefix);
  if (action < 1 || action > params.actions)
    throw ConfigError("score: action outside [1, actions]");
  const std::vector<double> probs = softmax_row(params.row(id));
  std::vector<double> s(params.num_logits(), 0.0);
  const std::size_t base = static_cast<std::size_t>(id) * params.actions;
  for (int a = 0; a < params.actions; ++a)
    s[base + a] = (a == action - 1 ? 1.0 : 0.0) - probs[a];
  return s;
}

double step_entropy(const PolicyParams& params, std::span<const int> prefix) {
  const std::vector<double> probs = action_probs(params, prefix);
  double h = 0.0;
  for (double v : probs)
    if (v > 0.0) h -= v * std::log(v);
  return h;
}

double correct_action_prob(const PolicyParams& params, const ChainTask& task,
                           std::span<const int> prefix) {
  if (prefix.size() >= static_cast<std::size_t>(task.horizon))
    throw ConfigError("prefix as long as the horizon has no next action");
  const std::vector<double> probs = action_probs(params, prefix);
  return probs[task.correct_actions[prefix.size()] - 1];
}

double success_probability(const PolicyParams& params, const ChainTask& task) {
  double sp = 1.0;
  std::vector<int> prefix;
  prefix.reserve(task.horizon);
  for (int h = 0; h < task.horizon; ++h) {
    sp *= correct_action_prob(params, task, prefix);
    prefix.push_back(task.correct_actions[h]);
  }
  return sp;
}

Trajectory sample_trajectory(const PolicyParams& params, const ChainTask& task, SplitRng& rng) {
  std::vector<int> actions;
  actions.reserve(task.horizon);
  std::vector<int> prefix;
  prefix.reserve(task.horizon);
  for (int h = 0; h < task.horizon; ++h) {
    int a;
    if (params.state_index(prefix) >= 0) {
      const std::vector<double> probs = action_probs(params, prefix);
      a = rng.categorical(probs) + 1;
    } else {
      // forced branch of a restricted task: the single incorrect action
      a = task.correct_actions[h] == 1 ? 2 : 1;
    }
    actions.push_back(a);
    prefix.push_back(a);
  }
  return make_trajectory(task, std::move(actions));
}

std::string policy_to_json(const PolicyParams& params) {
  nlohmann::json j = nlohmann::json::object();
  for (std::size_t i = 0; i < params.states.size(); ++i) {
    const auto row = params.row(static_cast<int>(i));
    j[state_key(params.states[i])] = std::vector<double>(row.begin(), row.end());
  }
  return j.dump();
}

PolicyParams policy_from_json(std::string_view text, const ChainTask& task) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("policy JSON parse error: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("policy JSON must be an object of state rows");
  PolicyParams params = make_policy(task);
  std::size_t seen = 0;
  for (std::size_t i = 0; i < params.states.size(); ++i) {
    const std::string key = state_key(params.states[i]);
    const auto it = j.find(key);
    if (it == j.end())
      throw ConfigError("policy JSON missing state: " + key);
    std::vector<double> row;
    try {
      row = it->get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("policy JSON state " + key + ": " + e.what());
    }
    if (row.size() != static_cast<std::size_t>(params.actions))
      throw ConfigError("policy JSON state " + key + " has wrong row length");
    std::copy(row.begin(), row.end(), params.row(static_cast<int>(i)).begin());
    ++seen;
  }
  if (seen != j.size()) throw ConfigError("policy JSON contains unknown states");
  params.validate();
  return params;
}

}  // namespace sgpo
