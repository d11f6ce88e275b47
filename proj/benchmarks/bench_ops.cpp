#include <benchmark/benchmark.h>

#include "fraclab/spectral.hpp"

using namespace fraclab;

static void BM_FracLaplacian1D(benchmark::State& state) {
  Grid g = Grid::make(1, int(state.range(0)), 2.0);
  Field u = random_band_limited(g, 8, 1);
  for (auto _ : state) {
    Field w = frac_laplacian(u, 0.5);
    benchmark::DoNotOptimize(w.values.data());
  }
}
BENCHMARK(BM_FracLaplacian1D)->Arg(256)->Arg(1024);

static void BM_FracLaplacian2D(benchmark::State& state) {
  Grid g = Grid::make(2, int(state.range(0)), 2.0);
  Field u = random_band_limited(g, 6, 2);
  for (auto _ : state) {
    Field w = frac_laplacian(u, 0.5);
    benchmark::DoNotOptimize(w.values.data());
  }
}
BENCHMARK(BM_FracLaplacian2D)->Arg(64)->Arg(256);

static void BM_RieszDirect2D(benchmark::State& state) {
  Grid g = Grid::make(2, int(state.range(0)), 2.0);
  Field u = random_bump_superposition(g, {0.0, 0.0, 0.0}, 0.7, 3, 3);
  for (auto _ : state) {
    Field w = riesz_potential(u, 1.0, RieszBackend::direct);
    benchmark::DoNotOptimize(w.values.data());
  }
}
BENCHMARK(BM_RieszDirect2D)->Arg(64)->Arg(128);

BENCHMARK_MAIN();
