#include <benchmark/benchmark.h>

#include "rsma/dataset.hpp"
#include "rsma/eval.hpp"
#include "rsma/pgd.hpp"
#include "rsma/projection.hpp"
#include "rsma/train.hpp"

namespace {

using namespace rsma;

ChannelSample sample_for(int antennas) {
  return generate_dataset(default_scenario(3, antennas), 1, 42).front();
}

void BM_Project(benchmark::State& state) {
  const ChannelSample s = sample_for(static_cast<int>(state.range(0)));
  BeamState st = init_state(s);
  st.priv *= 2.0;
  st.common *= 2.0;
  for (auto _ : state) benchmark::DoNotOptimize(project(s, st, ProjectionMode::always));
}
BENCHMARK(BM_Project)->Arg(4)->Arg(12)->Arg(64);

void BM_LayerForward(benchmark::State& state) {
  const ChannelSample s = sample_for(static_cast<int>(state.range(0)));
  const ModelParams model = init_model(s.config, 1, 2.0 * s.config.weights.maxCoeff(), 1);
  const BeamState st = project(s, init_state(s), ProjectionMode::always);
  const RVector env = env_vector(s.config);
  for (auto _ : state)
    benchmark::DoNotOptimize(
        layer_forward(s, st, model.layers[0], model.lambda, env, model.rate_step));
}
BENCHMARK(BM_LayerForward)->Arg(4)->Arg(12)->Arg(64);

void BM_PgdStep(benchmark::State& state) {
  const ChannelSample s = sample_for(static_cast<int>(state.range(0)));
  const PgdConfig config = default_pgd_config(s.config);
  const BeamState st = project(s, init_state(s), ProjectionMode::always);
  for (auto _ : state) benchmark::DoNotOptimize(pgd_step(s, st, update_aux(s, st), config));
}
BENCHMARK(BM_PgdStep)->Arg(4)->Arg(12)->Arg(64);

void BM_Forward4Layers(benchmark::State& state) {
  const ChannelSample s = sample_for(12);
  const ModelParams model = init_model(s.config, 4, 2.0 * s.config.weights.maxCoeff(), 1);
  for (auto _ : state) benchmark::DoNotOptimize(forward(s, model));
}
BENCHMARK(BM_Forward4Layers);

void BM_PgdOracle(benchmark::State& state) {
  const ChannelSample s = sample_for(12);
  for (auto _ : state) benchmark::DoNotOptimize(oracle_wsr(s));
}
BENCHMARK(BM_PgdOracle);

}  // namespace

BENCHMARK_MAIN();
