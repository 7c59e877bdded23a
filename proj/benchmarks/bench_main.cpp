#include <benchmark/benchmark.h>

#include "spinal/lln.hpp"
#include "spinal/msolver.hpp"
#include "spinal/popsim.hpp"
#include "spinal/spine.hpp"

using namespace spinal;

static void BM_SolveM_ThreeType(benchmark::State& state) {
  const auto m = preset_three_type(2.0, 0.3, 0.5, 0.4, static_cast<int>(state.range(0)));
  const auto idx = enumerate_states(m);
  const auto G = build_generator(m, idx);
  const auto psi = psi_vector(m, *idx);
  for (auto _ : state) benchmark::DoNotOptimize(solve_m(G, psi, 2.0));
  state.counters["states"] = static_cast<double>(G.size());
}
BENCHMARK(BM_SolveM_ThreeType)->Arg(10)->Arg(20)->Arg(40)->Unit(benchmark::kMillisecond);

static void BM_Population_Logistic(benchmark::State& state) {
  const int K = static_cast<int>(state.range(0));
  const auto m = preset_logistic(2.0, 1.0, K);
  PopulationRun run;
  std::uint64_t i = 0;
  for (auto _ : state) {
    Rng rng(1, streams::kPopulation, i++);
    simulate_population(m, {K / 4}, 2.0, rng, run);
    benchmark::DoNotOptimize(run.alive.size());
  }
}
BENCHMARK(BM_Population_Logistic)->Arg(100)->Arg(1000)->Unit(benchmark::kMicrosecond);

static void BM_InhomSpine_Toy(benchmark::State& state) {
  const auto m = preset_toy(1.0, 2.0);
  const auto mt = solve_m(m, 3.0);
  InhomSpineSimulator sim(m, mt, 3.0);
  const auto i0 = static_cast<std::size_t>(mt.index().find(0, {1, 0}));
  SpinePathK path;
  std::uint64_t i = 0;
  for (auto _ : state) {
    Rng rng(1, streams::kSpine, i++);
    benchmark::DoNotOptimize(sim.run(i0, 0.0, 3.0, rng, &path));
  }
}
BENCHMARK(BM_InhomSpine_Toy);

static void BM_Coupling_ThreeType(benchmark::State& state) {
  const auto base = preset_three_type(2.0, 0.3, 0.5, 0.4, 20);
  const FlowBundle flow(base, {0.2, 0.15, 0.1}, 1.0);
  const auto mk = base.with_capacity(static_cast<int>(state.range(0)));
  std::uint64_t i = 0;
  for (auto _ : state) {
    Rng rng(1, streams::kCoupling, i++);
    benchmark::DoNotOptimize(couple_spines(mk, flow, 0, 1.0, rng).sup_deviation);
  }
}
BENCHMARK(BM_Coupling_ThreeType)->Arg(200)->Arg(3200)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
