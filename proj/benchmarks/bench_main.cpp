#include <benchmark/benchmark.h>

#include "sabrnet/mc_engine.hpp"
#include "sabrnet/model_core.hpp"
#include "sabrnet/netfit.hpp"
#include "sabrnet/rng.hpp"

namespace {

using namespace sabrnet;

void BM_NormalDraw(benchmark::State& state) {
  rng::NormalSampler normal(42);
  double sink = 0.0;
  for (auto _ : state) sink += normal();
  benchmark::DoNotOptimize(sink);
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_NormalDraw);

void BM_SimulateTerminal(benchmark::State& state) {
  SabrParams params{0.3, 0.5, -0.4};
  SimConfig cfg;
  cfg.n_paths = static_cast<std::uint64_t>(state.range(0));
  cfg.dt = 0.02;
  cfg.seed = 7;
  for (auto _ : state) {
    auto terminals = simulate_terminal(params, 1.0, cfg);
    benchmark::DoNotOptimize(terminals.data());
  }
  // paths * steps normal pairs per iteration
  state.SetItemsProcessed(state.iterations() * state.range(0) * 50);
}
BENCHMARK(BM_SimulateTerminal)->Arg(10000)->Arg(100000);

void BM_ImpliedVol(benchmark::State& state) {
  const double price = bs_price(1.0, 1.1, 1.0, 0.25, true);
  for (auto _ : state) {
    const double vol = implied_vol(price, 1.0, 1.1, 1.0, true);
    benchmark::DoNotOptimize(vol);
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_ImpliedVol);

void BM_NetworkForward(benchmark::State& state) {
  NetConfig cfg;
  cfg.hidden_layers = 2;
  cfg.nodes_per_layer = static_cast<int>(state.range(0));
  auto net = init_network<float>(cfg);
  Network<float>::Matrix X = Network<float>::Matrix::Random(Network<float>::kInputs, 400);
  for (auto _ : state) {
    auto y = net.forward(X);
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * 400);
}
BENCHMARK(BM_NetworkForward)->Arg(64)->Arg(256);

}  // namespace

BENCHMARK_MAIN();
