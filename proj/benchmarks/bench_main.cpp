#include <random>

#include <benchmark/benchmark.h>

#include "modelens/bdg.hpp"
#include "modelens/gpe.hpp"
#include "modelens/pca.hpp"

using namespace modelens;

namespace {

ComplexField random_field(const Grid2D& g, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d;
  std::vector<Complex> v(g.size());
  for (auto& z : v) z = {d(rng), d(rng)};
  return ComplexField(g, std::move(v));
}

void BM_fft2(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto f = random_field(Grid2D(n, n, 15, 15), 1);
  for (auto _ : state) benchmark::DoNotOptimize(fft2(f));
  state.SetItemsProcessed(state.iterations() * f.size());
}
BENCHMARK(BM_fft2)->Arg(64)->Arg(128)->Arg(256);

void BM_split_step(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Grid2D g(n, n, 15, 15);
  const auto V = potential(TrapParams::reference_final(), g);
  const auto gs = ground_state(potential(TrapParams::reference_initial(), g), 1000.0);
  SplitStepPropagator p(gs.psi, V, 1000.0, 1e-3);
  for (auto _ : state) p.step(100);
  state.SetItemsProcessed(state.iterations() * 100);
}
BENCHMARK(BM_split_step)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_bdg_apply(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Grid2D g(n, n, 15, 15);
  auto V = potential(TrapParams::reference_final(), g);
  const auto gs = ground_state(V, 1000.0);
  const Condensate c{gs.psi, gs.mu, std::move(V), 1000.0};
  const auto u = random_field(g, 2), v = random_field(g, 3);
  for (auto _ : state) benchmark::DoNotOptimize(bdg_apply(c, u, v));
}
BENCHMARK(BM_bdg_apply)->Arg(64)->Arg(128);

// Gram-matrix route of the reference stack size: 300 frames of 128^2 pixels.
void BM_principal_components(benchmark::State& state) {
  const int N = static_cast<int>(state.range(0)), P = 128 * 128;
  std::mt19937_64 rng(4);
  std::normal_distribution<double> d;
  FrameMatrix frames(N, P);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < P; ++j) frames(i, j) = d(rng);
  std::vector<double> t(N);
  for (int i = 0; i < N; ++i) t[i] = i;
  const auto data = center(ImageStack(128, 128, std::move(frames), std::move(t)));
  for (auto _ : state) benchmark::DoNotOptimize(principal_components(data, 11));
}
BENCHMARK(BM_principal_components)->Arg(30)->Arg(300)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
