#include <benchmark/benchmark.h>

#include <vector>

#include "dadagger/engine.hpp"
#include "dadagger/policy_net.hpp"
#include "dadagger/random.hpp"
#include "dadagger/uncertainty.hpp"

namespace {

using namespace dadagger;

MlpSpec track_spec(double p) {
  MlpSpec s;
  s.layer_sizes = {obs_dim(EnvKind::track), 32, 32, act_dim(EnvKind::track)};
  s.dropout_rate = p;
  return s;
}

std::vector<Sample> synthetic(std::size_t n, std::size_t in, std::size_t out) {
  Rng rng(3);
  std::vector<Sample> data(n);
  for (Sample& s : data) {
    s.obs.resize(in);
    s.act.resize(out);
    for (double& v : s.obs) v = rng.uniform(-1, 1);
    for (double& v : s.act) v = rng.uniform(-0.9, 0.9);
  }
  return data;
}

void BM_Forward(benchmark::State& state) {
  const PolicyParams p = init_params(track_spec(0.1), 1);
  const std::vector<double> x(p.spec.input_dim(), 0.3);
  for (auto _ : state) benchmark::DoNotOptimize(forward(p, x));
}
BENCHMARK(BM_Forward);

void BM_ForwardMc(benchmark::State& state) {
  const PolicyParams p = init_params(track_spec(0.1), 1);
  const std::vector<double> x(p.spec.input_dim(), 0.3);
  const auto m = static_cast<std::size_t>(state.range(0));
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(forward_mc(p, x, m, ++seed));
}
BENCHMARK(BM_ForwardMc)->Arg(5)->Arg(10)->Arg(20);

void BM_TrainEpoch(benchmark::State& state) {
  const PolicyParams p = init_params(track_spec(0.1), 1);
  const auto data = synthetic(static_cast<std::size_t>(state.range(0)), p.spec.input_dim(),
                              p.spec.output_dim());
  TrainConfig cfg;
  cfg.epochs = 1;
  for (auto _ : state) benchmark::DoNotOptimize(train(p, data, cfg));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_TrainEpoch)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_Disagreement(benchmark::State& state) {
  Rng rng(5);
  std::vector<Action> preds(static_cast<std::size_t>(state.range(0)), Action(6));
  for (auto& a : preds) {
    for (double& v : a) v = rng.uniform(-1, 1);
  }
  for (auto _ : state) benchmark::DoNotOptimize(disagreement(preds));
}
BENCHMARK(BM_Disagreement)->Arg(10)->Arg(100);

void BM_SelectTopAlpha(benchmark::State& state) {
  Rng rng(6);
  std::vector<double> scores(static_cast<std::size_t>(state.range(0)));
  for (double& v : scores) v = rng.uniform();
  for (auto _ : state) benchmark::DoNotOptimize(select_top_alpha(scores, 0.1));
}
BENCHMARK(BM_SelectTopAlpha)->Arg(1500);

}  // namespace

BENCHMARK_MAIN();
