#pragma once

#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sgpo/chain_env.hpp"
#include "sgpo/rational.hpp"
#include "sgpo/rng.hpp"

namespace sgpo {

// How a wrong judgment displaces the true first-error position. Wrong answers
// are always step indices in [1, H], never NONE.
//  kUniformWrong: uniform over {1..H} minus the true index (uniform over all of
//                 {1..H} when the truth is NONE); never returns the truth.
//  kOffsets:      uniform over the listed nonzero offsets applied to the true
//                 index (NONE counts as H+1), clamped to [1, H]; clamping can
//                 collide with the truth at the boundary.
enum class DisplacementKind { kUniformWrong, kOffsets };

struct NoiseModel {
  double flip_prob = 0.0;  // in [0, 0.5)
  DisplacementKind displacement = DisplacementKind::kUniformWrong;
  std::vector<int> offsets = {-1, 1};  // kOffsets only; nonzero

  void validate() const;
};

struct JudgeConfig {
  NoiseModel noise{};
  int vote_count = 5;  // odd, >= 1

  void validate() const;
};

struct JudgeVerdict {
  std::optional<int> first_error;            // majority outcome
  std::vector<std::optional<int>> votes;     // individual calls, vote order
};

// Ground truth: exactly Trajectory::first_error.
std::optional<int> oracle_first_error(const ChainTask& task, const Trajectory& t);

// One judge call: the oracle answer with probability 1 - flip_prob, otherwise
// a displaced index per the noise model.
std::optional<int> noisy_judgment(const ChainTask& task, const Trajectory& t,
                                  const NoiseModel& noise, SplitRng& rng);

// Most frequent vote. Ties break toward the smallest error index; NONE wins
// only as a strict majority of all votes. votes must be non-empty.
std::optional<int> majority_vote(std::span<const std::optional<int>> votes);

// vote_count independent judge calls (forked substreams; the parent stream is
// never consumed) reduced by majority_vote. flip_prob == 0 short-circuits to
// the oracle with identical verdicts regardless of vote_count.
JudgeVerdict judged_first_error(const ChainTask& task, const Trajectory& t,
                                const JudgeConfig& cfg, SplitRng& rng);

// RTS computed from the majority-voted first_error instead of ground truth.
Rational judged_rts(const ChainTask& task, const Trajectory& t,
                    const JudgeConfig& cfg, SplitRng& rng);

// Append-only JSONL audit log of judgments:
// {"trajectory":[...],"reference":[...],"votes":[...],"first_error":int|null,"rts":x}
class JudgeAuditLog {
 public:
  explicit JudgeAuditLog(const std::string& path);  // throws IoError
  void record(const ChainTask& task, const Trajectory& t,
              const JudgeVerdict& verdict, Rational rts_value);
  long long entries() const { return entries_; }

 private:
  std::ofstream out_;
  std::string path_;
  long long entries_ = 0;
};

}  // namespace sgpo
