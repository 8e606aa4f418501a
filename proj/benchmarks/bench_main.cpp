#include <benchmark/benchmark.h>

#include "latticelab/asymptotics.hpp"
#include "latticelab/kernel.hpp"
#include "latticelab/montecarlo.hpp"
#include "latticelab/potential.hpp"

using namespace latticelab;

static void BM_KilledKernel(benchmark::State& state) {
  const auto law = light_law();
  const auto A = KillingSet::finite({0, 3});
  const long n = state.range(0);
  for (auto _ : state) benchmark::DoNotOptimize(killed_kernel(law, A, 5, n).live_mass());
  state.SetComplexityN(n);
}
BENCHMARK(BM_KilledKernel)->RangeMultiplier(4)->Range(64, 4096)->Unit(benchmark::kMillisecond);

// wide support: the march switches to FFT convolution
static void BM_KilledKernelHeavy(benchmark::State& state) {
  const auto law = heavy_tail_family(3.5, 400);
  const auto A = KillingSet::finite({0});
  const long n = state.range(0);
  for (auto _ : state) benchmark::DoNotOptimize(killed_kernel(law, A, 10, n).live_mass());
}
BENCHMARK(BM_KilledKernelHeavy)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

static void BM_PotentialQuadrature(benchmark::State& state) {
  const auto law = light_law();
  for (auto _ : state)
    benchmark::DoNotOptimize(potential_table(law, state.range(0), PotentialMethod::QuadratureOnly).a(1));
}
BENCHMARK(BM_PotentialQuadrature)->Arg(128)->Arg(512)->Unit(benchmark::kMillisecond);

static void BM_PotentialBoth(benchmark::State& state) {
  const auto law = light_law();
  for (auto _ : state) benchmark::DoNotOptimize(potential_table(law, state.range(0)).a(1));
}
BENCHMARK(BM_PotentialBoth)->Arg(64)->Unit(benchmark::kMillisecond);

static void BM_Context(benchmark::State& state) {
  const auto law = light_law();
  const auto A = KillingSet::finite({0, 3});
  ContextOptions o;
  o.range = state.range(0);
  for (auto _ : state) benchmark::DoNotOptimize(make_context(law, A, o).sigma2);
}
BENCHMARK(BM_Context)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

static void BM_RatioStudy(benchmark::State& state) {
  const auto ctx = make_context(light_law(), KillingSet::finite({0, 2}));
  ScheduleSpec s;
  s.x = 5;
  s.y = 4;
  s.log2_lo = 8;
  s.log2_hi = static_cast<int>(state.range(0));
  const auto sched = make_schedule(ctx, s);
  for (auto _ : state) benchmark::DoNotOptimize(ratio_study(ctx, sched, "generic").pass);
}
BENCHMARK(BM_RatioStudy)->Arg(10)->Arg(12)->Unit(benchmark::kMillisecond);

static void BM_Simulate(benchmark::State& state) {
  const auto law = light_law();
  const auto A = KillingSet::finite({0});
  McFunctionals f;
  f.sigma_time = true;
  const long trials = state.range(0);
  for (auto _ : state) benchmark::DoNotOptimize(simulate(law, A, 4, 256, trials, 1, f).size());
  state.SetItemsProcessed(state.iterations() * trials);
}
BENCHMARK(BM_Simulate)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);

static void BM_AliasSample(benchmark::State& state) {
  const AliasTable t(heavy_tail_family(3.5, 400));
  double u = 0.123;
  long acc = 0;
  for (auto _ : state) {
    u += 0.6180339887;
    if (u >= 1) u -= 1;
    acc += t.sample(u, 1 - u);
  }
  benchmark::DoNotOptimize(acc);
}
BENCHMARK(BM_AliasSample);
BENCHMARK_MAIN();
