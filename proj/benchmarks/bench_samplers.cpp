#include <benchmark/benchmark.h>

#include <cmath>

#include "gfzip/distributions.hpp"
#include "gfzip/gibbs.hpp"
#include "gfzip/polya_gamma.hpp"
#include "gfzip/rng.hpp"
#include "gfzip/simulation.hpp"

using namespace gfzip;

namespace {

void BM_PolyaGammaUnit(benchmark::State& state) {
  RngStream rng(1);
  const double c = static_cast<double>(state.range(0)) / 10.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(sample_pg(1.0, c, rng));
  }
}
BENCHMARK(BM_PolyaGammaUnit)->Arg(0)->Arg(10)->Arg(30);

void BM_PolyaGammaLarge(benchmark::State& state) {
  RngStream rng(2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(sample_pg(1003.0, -5.8, rng));
  }
}
BENCHMARK(BM_PolyaGammaLarge);

void BM_TruncatedNbFinite(benchmark::State& state) {
  RngStream rng(3);
  const double psi = std::log(3.0 / 1000.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(sample_trunc_nb(1000.0, psi, 3, 6, rng));
  }
}
BENCHMARK(BM_TruncatedNbFinite);

void BM_TruncatedNbOpenTail(benchmark::State& state) {
  RngStream rng(4);
  const double psi = std::log(2.0 / 1000.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(sample_trunc_nb(1000.0, psi, 51, std::nullopt, rng));
  }
}
BENCHMARK(BM_TruncatedNbOpenTail);

void BM_GibbsSweep(benchmark::State& state) {
  const RngStream data_rng(5);
  const auto [data, truth] = generate_dataset(1, static_cast<int>(state.range(0)), data_rng);
  ModelConfig config;
  config.n_factors = 1;
  config.seed = 5;
  GibbsSampler sampler(data, config, RngStream(5));
  sampler.initialize();
  for (auto _ : state) {
    sampler.sweep();
  }
  state.SetItemsProcessed(state.iterations() * data.n_individuals() * data.n_dims());
}
BENCHMARK(BM_GibbsSweep)->Arg(200)->Arg(1000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
