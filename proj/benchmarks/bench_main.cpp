#include <cmath>

#include <benchmark/benchmark.h>

#include "fluctuo/convolution.hpp"
#include "fluctuo/noise.hpp"
#include "fluctuo/solver.hpp"
#include "fluctuo/weighted_poisson.hpp"

using namespace fluctuo;

namespace {

Grid grid_for(const benchmark::State& state) {
  return Grid(static_cast<int>(state.range(0)), static_cast<std::size_t>(state.range(1)), 4.0);
}

Field bump(const Grid& g) {
  Field f(g, 1.0, 1.0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    double r2 = 0.0;
    for (int k = 0; k < g.d; ++k) r2 += g.center(i, k) * g.center(i, k);
    f[i] += std::exp(-r2);
  }
  return f;
}

void BM_Convolution(benchmark::State& state) {
  const Grid g = grid_for(state);
  const bool fft = state.range(2) != 0;
  CyclicConvolver conv(g, build_kernel(g, 0.9), fft);
  std::vector<double> in(g.size(), 1.0), out;
  for (std::size_t i = 0; i < in.size(); ++i) in[i] = std::sin(0.1 * static_cast<double>(i));
  for (auto _ : state) {
    conv.apply(in, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(g.size()));
}
BENCHMARK(BM_Convolution)->Args({1, 256, 0})->Args({1, 256, 1})->Args({1, 4096, 1})->Args({2, 64, 0})->Args({2, 64, 1})->Args({2, 256, 1});

void BM_NoiseSample(benchmark::State& state) {
  const Grid g = grid_for(state);
  NoiseModel noise(g, NoiseParams{.alpha = 0.9, .A = 0.5, .K_a = 1, .seed = 1});
  VectorField dW(g);
  std::uint64_t step = 0;
  for (auto _ : state) {
    noise.sample(1e-4, step++, dW);
    benchmark::DoNotOptimize(dW.comp[0].data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(g.size()));
}
BENCHMARK(BM_NoiseSample)->Args({1, 256})->Args({1, 4096})->Args({2, 64})->Args({2, 256});

void BM_StepperAdvance(benchmark::State& state) {
  const Grid g = grid_for(state);
  const auto spec = NonlinearitySpec::power_law(2.0, 1.0);
  NoiseModel noise(g, NoiseParams{.alpha = 0.9, .A = 0.5, .K_a = 1, .seed = 1});
  SolverConfig cfg;
  cfg.eps = 0.01;
  Stepper stepper(spec, cfg, noise.a_norm_sq());
  const Field rho0 = bump(g);
  Field rho = rho0;
  const double dt = 0.5 * stepper.dt_max(rho0);
  VectorField dW = noise.sample(dt, 0);
  for (auto _ : state) {
    stepper.advance(rho, dt, &dW, nullptr);
    state.PauseTiming();
    rho = rho0;
    state.ResumeTiming();
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(g.size()));
}
BENCHMARK(BM_StepperAdvance)->Args({1, 256})->Args({1, 4096})->Args({2, 64})->Args({2, 256});

void BM_WeightedPoisson(benchmark::State& state) {
  const Grid g = grid_for(state);
  VectorField w(g, 1.0);
  const Field rho = bump(g);
  for (int k = 0; k < g.d; ++k) {
    for (std::size_t i = 0; i < g.size(); ++i) w[k][i] = rho[i] * rho[g.neighbor(i, k, 1)];
  }
  std::vector<double> rhs(g.size());
  double mean = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) mean += rhs[i] = std::cos(g.center(i, 0)) + (g.d == 2 ? std::sin(g.center(i, 1)) : 0.0);
  for (double& v : rhs) v -= mean / static_cast<double>(g.size());
  std::size_t iters = 0;
  for (auto _ : state) {
    const PoissonResult r = solve_weighted_poisson(w, rhs);
    iters = r.iterations;
    benchmark::DoNotOptimize(r.phi.data());
  }
  state.counters["cg_iterations"] = static_cast<double>(iters);
}
BENCHMARK(BM_WeightedPoisson)->Args({1, 256})->Args({2, 32})->Args({2, 64});

}  // namespace
BENCHMARK_MAIN();
