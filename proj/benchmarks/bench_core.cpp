#include <benchmark/benchmark.h>

#include "flm/bounds.hpp"
#include "flm/planner.hpp"
#include "flm/random.hpp"
#include "flm/sweep.hpp"

using namespace flm;

namespace {

RandomInstance sized(Index states, Index compressed) {
  InstanceRanges r;
  r.states_min = r.states_max = states;
  r.compressed_min = r.compressed_max = compressed;
  r.actions_min = r.actions_max = 4;
  r.gamma_min = r.gamma_max = 0.9;
  return random_instance(11, r);
}

void BM_ValueIteration(benchmark::State& state) {
  const RandomInstance inst = sized(state.range(0), 1);
  for (auto _ : state) benchmark::DoNotOptimize(value_iteration(inst.mdp, 1e-10));
}
BENCHMARK(BM_ValueIteration)->Arg(10)->Arg(30)->Arg(100);

void BM_Plan(benchmark::State& state) {
  const RandomInstance inst = sized(state.range(0), state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(plan(inst.mdp, inst.model, NormSpec::sup()));
}
BENCHMARK(BM_Plan)->Args({30, 5})->Args({100, 10})->Args({300, 30});

void BM_Audit(benchmark::State& state) {
  const RandomInstance inst = sized(state.range(0), state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(audit(inst.mdp, inst.model));
}
BENCHMARK(BM_Audit)->Args({10, 3})->Args({30, 10});

void BM_SweepTrial(benchmark::State& state) {
  ExperimentConfig config;
  config.seed = 3;
  config.trials = 64;
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(run_trial(config, i++ % config.trials));
}
BENCHMARK(BM_SweepTrial);

}  // namespace

BENCHMARK_MAIN();
