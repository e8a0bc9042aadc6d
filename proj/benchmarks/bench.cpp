#include <benchmark/benchmark.h>

#include <random>

#include "ahs/models.hpp"
#include "ahs/normalform.hpp"
#include "ahs/radial.hpp"
#include "ahs/specfun.hpp"

using namespace ahs;

static void BM_GammaComplex(benchmark::State& state) {
  cplx z(2.3, 0.7);
  for (auto _ : state) {
    benchmark::DoNotOptimize(gamma_complex(z));
    z += cplx(1e-9, 0.0);
  }
}
BENCHMARK(BM_GammaComplex);

static void BM_TIntegral(benchmark::State& state) {
  const SpectralPoint sp(2.3, static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(t_integral(1, 1, sp));
}
BENCHMARK(BM_TIntegral)->Arg(1)->Arg(2)->Arg(3)->Unit(benchmark::kMillisecond);

static void BM_SolveMode(benchmark::State& state) {
  const SpectralPoint sp(2.3, 1);
  auto rp = cylinder_problem(BoundaryMetric::identity(1), std::vector<PerturbationJet>{}, 0.0, std::vector<int>{static_cast<int>(state.range(0))}, sp);
  for (auto _ : state) benchmark::DoNotOptimize(solve_mode(rp));
}
BENCHMARK(BM_SolveMode)->Arg(1)->Arg(10)->Arg(40)->Unit(benchmark::kMillisecond);

static void BM_ModelForm(benchmark::State& state) {
  std::mt19937_64 rng(1);
  const MetricJet mj = random_metric_jet(static_cast<int>(state.range(0)), 5, rng);
  for (auto _ : state) benchmark::DoNotOptimize(model_form(mj, 5));
}
BENCHMARK(BM_ModelForm)->Arg(1)->Arg(2)->Arg(3)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
