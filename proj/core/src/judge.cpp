#include "sgpo/judge.hpp"

#include <algorithm>
#include <map>

#include "json.hpp"
#include "sgpo/errors.hpp"
#include "sgpo/reward.hpp"

namespace sgpo {

void NoiseModel::validate() const {
  if (!(flip_prob >= 0.0 && flip_prob < 0.5))
    throw ConfigError("NoiseModel.flip_prob must lie in [0, 0.5)");
  if (displacement == DisplacementKind::kOffsets) {
    if (offsets.empty()) throw ConfigError("NoiseModel.offsets must be non-empty");
    for (int o : offsets)
      if (o == 0) throw ConfigError("NoiseModel.offsets must be nonzero");
  }
}

void JudgeConfig::validate() const {
  noise.validate();
  if (vote_count < 1 || vote_count % 2 == 0)
    throw ConfigError("JudgeConfig.vote_count must be odd and positive");
}

std::optional<int> oracle_first_error(const ChainTask& task, const Trajectory& t) {
  if (t.emitted_steps > task.horizon)
    throw ConfigError("judge: trajectory longer than the task horizon");
  return t.first_error;
}

std::optional<int> noisy_judgment(const ChainTask& task, const Trajectory& t,
                                  const NoiseModel& noise, SplitRng& rng) {
  noise.validate();
  const std::optional<int> truth = oracle_first_error(task, t);
  if (noise.flip_prob == 0.0) return truth;
  if (rng.uniform() >= noise.flip_prob) return truth;

  const int h = task.horizon;
  if (noise.displacement == DisplacementKind::kUniformWrong) {
    if (!truth.has_value()) {
      return 1 + static_cast<int>(rng.uniform() * h) % h;
    }
    if (h == 1) return std::nullopt;  // no wrong index exists; claim "no error"
    int pick = 1 + static_cast<int>(rng.uniform() * (h - 1)) % (h - 1);
    if (pick >= *truth) ++pick;  // skip the true index
    return pick;
  }
  const int t0 = truth.value_or(h + 1);
  const auto i = static_cast<std::size_t>(rng.uniform() * noise.offsets.size()) %
                 noise.offsets.size();
  return std::clamp(t0 + noise.offsets[i], 1, h);
}

std::optional<int> majority_vote(std::span<const std::optional<int>> votes) {
  if (votes.empty()) throw ConfigError("majority_vote: no votes");
  std::size_t none_count = 0;
  std::map<int, std::size_t> counts;  // ordered: ties resolve to smallest index
  for (const auto& v : votes) {
    if (v.has_value())
      ++counts[*v];
    else
      ++none_count;
  }
  if (2 * none_count > votes.size()) return std::nullopt;  // strict majority only
  int best = 0;
  std::size_t best_count = 0;
  for (const auto& [idx, c] : counts) {
    if (c > best_count) {
      best = idx;
      best_count = c;
    }
  }
  if (best_count == 0) return std::nullopt;  // all votes were NONE, no strict majority
  return best;
}

JudgeVerdict judged_first_error(const ChainTask& task, const Trajectory& t,
                                const JudgeConfig& cfg, SplitRng& rng) {
  cfg.validate();
  JudgeVerdict verdict;
  const std::optional<int> truth = oracle_first_error(task, t);
  if (cfg.noise.flip_prob == 0.0) {
    // noise-free path: bitwise-identical verdicts for every vote_count
    verdict.votes.assign(static_cast<std::size_t>(cfg.vote_count), truth);
    verdict.first_error = truth;
    return verdict;
  }
  verdict.votes.reserve(static_cast<std::size_t>(cfg.vote_count));
  for (int i = 0; i < cfg.vote_count; ++i) {
    SplitRng vote_rng = rng.fork("vote", static_cast<std::uint64_t>(i));
    verdict.votes.push_back(noisy_judgment(task, t, cfg.noise, vote_rng));
  }
  verdict.first_error = majority_vote(verdict.votes);
  return verdict;
}

Rational judged_rts(const ChainTask& task, const Trajectory& t,
                    const JudgeConfig& cfg, SplitRng& rng) {
  const JudgeVerdict verdict = judged_first_error(task, t, cfg, rng);
  Trajectory judged = t;  // same emitted steps, judged error position
  judged.first_error = verdict.first_error;
  return rts(task, judged);
}

JudgeAuditLog::JudgeAuditLog(const std::string& path) : path_(path) {
  out_.open(path, std::ios::app);
  if (!out_) throw IoError("cannot open judge audit log: " + path);
}

void JudgeAuditLog::record(const ChainTask& task, const Trajectory& t,
                           const JudgeVerdict& verdict, Rational rts_value) {
  nlohmann::json j;
  j["trajectory"] = t.actions;
  j["reference"] = task.correct_actions;
  nlohmann::json votes = nlohmann::json::array();
  for (const auto& v : verdict.votes)
    votes.push_back(v.has_value() ? nlohmann::json(*v) : nlohmann::json(nullptr));
  j["votes"] = std::move(votes);
  j["first_error"] =
      verdict.first_error.has_value() ? nlohmann::json(*verdict.first_error) : nlohmann::json(nullptr);
  j["rts"] = rts_value.value();
  out_ << j.dump() << '\n';
  if (!out_) throw IoError("failed writing judge audit log: " + path_);
  ++entries_;
}

}  // namespace sgpo
