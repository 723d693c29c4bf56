#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "sgpo/chain_env.hpp"
#include "sgpo/group_opt.hpp"
#include "sgpo/lemma_verify.hpp"
#include "sgpo/policy.hpp"
#include "sgpo/rng.hpp"
#include "sgpo/stylized_dynamics.hpp"

namespace {

using namespace sgpo;

void BM_DynamicsStep(benchmark::State& state) {
  DynamicsState s{Method::kSgpo, 0.5, 0.5};
  for (auto _ : state) {
    benchmark::DoNotOptimize(s = dynamics_step(s));
    if (s.p > 0.999) s = {Method::kSgpo, 0.5, 0.5};
  }
}
BENCHMARK(BM_DynamicsStep);

void BM_RunDynamics200(benchmark::State& state) {
  for (auto _ : state)
    benchmark::DoNotOptimize(run_dynamics({Method::kSgpo, 0.5, 0.5}, 200));
}
BENCHMARK(BM_RunDynamics200);

void BM_PopulationGradient(benchmark::State& state) {
  double p = 0.3, q = 0.6;
  for (auto _ : state) {
    benchmark::DoNotOptimize(population_gradient(Method::kSgpo, p, q));
    benchmark::DoNotOptimize(population_gradient(Method::kGrpo, p, q));
  }
}
BENCHMARK(BM_PopulationGradient);

void BM_ComputeAdvantages(benchmark::State& state) {
  const std::vector<double> rewards = {1, 0, 0, 1, 0.5, 0, 1, 0};
  for (auto _ : state) benchmark::DoNotOptimize(compute_advantages(rewards));
}
BENCHMARK(BM_ComputeAdvantages);

void BM_SampleTrajectory(benchmark::State& state) {
  const ChainTask task = stylized_task();
  const PolicyParams params = make_stylized_policy(0.5, 0.5);
  SplitRng rng(1);
  std::uint64_t i = 0;
  for (auto _ : state) {
    SplitRng draw = rng.fork("bench", i++);
    benchmark::DoNotOptimize(sample_trajectory(params, task, draw));
  }
}
BENCHMARK(BM_SampleTrajectory);

void BM_EstimateGradient(benchmark::State& state) {
  const ChainTask task = stylized_task();
  const std::vector<ChainTask> tasks = {task};
  const PolicyParams params = make_stylized_policy(0.5, 0.5);
  TrainerConfig cfg;
  cfg.group_size = static_cast<int>(state.range(0));
  cfg.reward_mode = RewardKind::kSgpo;
  cfg.shaping = {10.0, 0.5, ShapingMode::kLinearRts};
  cfg.gating = Gating::kAlways;
  SplitRng rng(2);
  int k = 0;
  for (auto _ : state)
    benchmark::DoNotOptimize(estimate_gradient(params, tasks, cfg, rng, k++));
}
BENCHMARK(BM_EstimateGradient)->Arg(2)->Arg(8)->Arg(64);

void BM_EnumerateTrajectories(benchmark::State& state) {
  ChainTask task;
  task.horizon = static_cast<int>(state.range(0));
  task.actions_per_step = 3;
  task.correct_actions.assign(static_cast<std::size_t>(task.horizon), 3);
  for (auto _ : state) benchmark::DoNotOptimize(enumerate_trajectories(task));
}
BENCHMARK(BM_EnumerateTrajectories)->Arg(4)->Arg(8);

void BM_BruteForceGradient(benchmark::State& state) {
  const ChainTask task = stylized_task();
  const PolicyParams params = make_stylized_policy(0.4, 0.6);
  const RewardSpec spec{RewardKind::kSgpo, {10.0, 0.5, ShapingMode::kLinearRts}};
  const int group_size = static_cast<int>(state.range(0));
  for (auto _ : state)
    benchmark::DoNotOptimize(brute_force_expected_gradient(task, params, spec, group_size));
}
BENCHMARK(BM_BruteForceGradient)->Arg(2)->Arg(6);

void BM_PairProductRow(benchmark::State& state) {
  // one row of the triangle certificate at x = 0.75
  const double x = 0.75;
  for (auto _ : state) {
    double acc = 0.0;
    for (int j = 1; j < 500; ++j) {
      const double y = 0.5 + 0.5 * static_cast<double>(j) / 501.0;
      if (y >= x) break;
      const double c = inv_grpo_sym_step(std::sqrt(x * y));
      acc += c * c - inv_sgpo_p_step(x) * inv_sgpo_q_step(x, y);
    }
    benchmark::DoNotOptimize(acc);
  }
}
BENCHMARK(BM_PairProductRow);

void BM_LemmaBatterySmall(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(run_all_lemmas(500, 50));
}
BENCHMARK(BM_LemmaBatterySmall);

}  // namespace

BENCHMARK_MAIN();
