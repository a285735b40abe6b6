#include <benchmark/benchmark.h>

#include "ni_swarm/engine.hpp"
#include "ni_swarm/lti.hpp"
#include "ni_swarm/ni_analysis.hpp"
#include "ni_swarm/presets.hpp"
#include "ni_swarm/roles.hpp"
#include "ni_swarm/rng.hpp"
#include "ni_swarm/vehicle.hpp"

using namespace ni_swarm;

static void BM_Discretize(benchmark::State& state) {
  const auto plant = ugv_plants().first;
  for (auto _ : state) benchmark::DoNotOptimize(lti::discretize(plant, lti::kDefaultDt));
}
BENCHMARK(BM_Discretize);

static void BM_DiscreteStep(benchmark::State& state) {
  auto d = lti::discretize(ugv_plants().first, lti::kDefaultDt);
  double u = 1.0;
  for (auto _ : state) {
    u = -u;
    benchmark::DoNotOptimize(d.step(u));
  }
}
BENCHMARK(BM_DiscreteStep);

static void BM_IsSni(benchmark::State& state) {
  const auto plant = uav_plants().first;
  for (auto _ : state) benchmark::DoNotOptimize(ni::is_sni(plant));
}
BENCHMARK(BM_IsSni);

static void BM_AssignIds(benchmark::State& state) {
  Rng r = Rng::split(3, 0, 0);
  std::vector<Vec2> pts(static_cast<std::size_t>(state.range(0)));
  for (auto& p : pts) p = {r.uniform(-5.0, 5.0), r.uniform(-5.0, 5.0)};
  for (auto _ : state) benchmark::DoNotOptimize(roles::assign_ids(pts, {10.0, 0.0}));
}
BENCHMARK(BM_AssignIds)->Arg(6)->Arg(64);

// One engine tick of the six-robot gap scenario, sampled mid-run.
static void BM_EngineTick(benchmark::State& state) {
  auto w = sim::make_world(presets::case1_6ugv(1));
  for (int i = 0; i < 2000; ++i) sim::tick(w);
  for (auto _ : state) sim::tick(w);
}
BENCHMARK(BM_EngineTick);

static void BM_Gauntlet(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(sim::run_scenario(presets::case1_6ugv(1)));
}
BENCHMARK(BM_Gauntlet)->Unit(benchmark::kMillisecond)->Iterations(3);
BENCHMARK_MAIN();
