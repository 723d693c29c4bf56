#include <vector>

#include "doctest.h"
#include "sgpo/chain_env.hpp"
#include "sgpo/errors.hpp"
#include "sgpo/reward.hpp"

using namespace sgpo;

namespace {

ChainTask five_step_task() { return ChainTask{5, 3, {1, 1, 1, 1, 1}, false}; }

}  // namespace

TEST_CASE("outcome reward is binary on full correctness") {
  const ChainTask task = stylized_task();
  CHECK(outcome_reward(task, make_trajectory(task, {2, 2})) == 1.0);
  CHECK(outcome_reward(task, make_trajectory(task, {2, 1})) == 0.0);
  CHECK(outcome_reward(task, make_trajectory(task, {2})) == 0.0);  // truncated
}

TEST_CASE("rts counts correct steps before the first error") {
  const ChainTask task = five_step_task();

  // first error at step 4 of 5 -> 3/5
  const Trajectory t = make_trajectory(task, {1, 1, 1, 2, 1});
  CHECK(t.first_error == 4);
  CHECK(rts(task, t) == Rational{3, 5});

  CHECK(rts(task, make_trajectory(task, {1, 1, 1, 1, 1})) == Rational{1, 1});
  CHECK(rts(task, make_trajectory(task, {2, 1, 1, 1, 1})) == Rational{0, 1});
  // error-free truncation scores the emitted prefix
  CHECK(rts(task, make_trajectory(task, {1, 1, 1})) == Rational{3, 5});
  CHECK(rts(task, make_trajectory(task, {})) == Rational{0, 1});
}

TEST_CASE("shaping hits one half exactly at the threshold") {
  const ShapingConfig cfg{10.0, 0.5, ShapingMode::kAllIncorrect};
  CHECK(shape_rts(cfg, Rational{1, 2}) == doctest::Approx(0.5).epsilon(1e-12));
  // sigmoid(10 * (3/5 - 1/2)) = sigmoid(1)
  CHECK(shape_rts(cfg, Rational{3, 5}) ==
        doctest::Approx(0.7310585786300049).epsilon(1e-14));
  CHECK(shape_rts(cfg, Rational{0, 1}) < 0.01);
  CHECK(shape_rts(cfg, Rational{0, 1}) > 0.0);
}

TEST_CASE("shaped reward is strictly monotone in rts") {
  const ShapingConfig cfg{10.0, 0.5, ShapingMode::kAllIncorrect};
  double prev = shape_rts(cfg, Rational{0, 1000});
  for (int i = 1; i <= 1000; ++i) {
    const double cur = shape_rts(cfg, Rational{i, 1000});
    CHECK(cur > prev);
    prev = cur;
  }
}

TEST_CASE("sgpo reward pins correct responses to one") {
  const ChainTask task = five_step_task();
  const ShapingConfig cfg{};
  CHECK(sgpo_reward(task, make_trajectory(task, {1, 1, 1, 1, 1}), cfg) == 1.0);
  const double wrong = sgpo_reward(task, make_trajectory(task, {1, 1, 1, 2, 1}), cfg);
  CHECK(wrong < 1.0);
  CHECK(wrong > 0.0);
}

TEST_CASE("linear mode returns the raw rts") {
  const ChainTask task = stylized_task();
  const ShapingConfig cfg{10.0, 0.5, ShapingMode::kLinearRts};
  CHECK(sgpo_reward(task, make_trajectory(task, {1, 1}), cfg) == 0.0);
  CHECK(sgpo_reward(task, make_trajectory(task, {2, 1}), cfg) == 0.5);
  CHECK(sgpo_reward(task, make_trajectory(task, {2, 2}), cfg) == 1.0);
}

TEST_CASE("the group-gated mode shapes trajectories identically") {
  // the gate itself lives in the trainer; per trajectory the value matches
  const ChainTask task = five_step_task();
  const ShapingConfig all{10.0, 0.5, ShapingMode::kAllIncorrect};
  const ShapingConfig gated{10.0, 0.5, ShapingMode::kAllNegativeGroupsOnly};
  const Trajectory t = make_trajectory(task, {1, 1, 2, 1, 1});
  CHECK(sgpo_reward(task, t, all) == sgpo_reward(task, t, gated));
}

TEST_CASE("reward spec dispatch") {
  const ChainTask task = stylized_task();
  const RewardSpec grpo{RewardKind::kGrpo, {10.0, 0.5, ShapingMode::kLinearRts}};
  const RewardSpec sgpo{RewardKind::kSgpo, {10.0, 0.5, ShapingMode::kLinearRts}};
  const Trajectory half = make_trajectory(task, {2, 1});
  CHECK(grpo(task, half) == 0.0);  // shaping ignored under plain outcome reward
  CHECK(sgpo(task, half) == 0.5);
}

TEST_CASE("shaping config validation") {
  CHECK_THROWS_AS((ShapingConfig{0.0, 0.5, ShapingMode::kAllIncorrect}).validate(),
                  ConfigError);
  CHECK_THROWS_AS((ShapingConfig{10.0, 1.0, ShapingMode::kAllIncorrect}).validate(),
                  ConfigError);
  CHECK_THROWS_AS((ShapingConfig{10.0, 0.0, ShapingMode::kAllIncorrect}).validate(),
                  ConfigError);
  CHECK_NOTHROW((ShapingConfig{}).validate());
}

TEST_CASE("rational ordering and value") {
  CHECK(Rational{3, 5} == Rational{6, 10});
  CHECK(Rational{1, 2} < Rational{3, 5});
  CHECK(Rational{3, 5}.value() == doctest::Approx(0.6).epsilon(1e-15));
}
