#include <benchmark/benchmark.h>

#include "codql/env.hpp"
#include "codql/grid_sim.hpp"

using namespace codql;

static void BM_SimStep(benchmark::State& state) {
  sim::SimConfig c;
  c.grid_rows = static_cast<int>(state.range(0));
  c.grid_cols = c.grid_rows;
  c.spawn_rate = 3;
  c.rng_seed = 1;
  sim::SimState s = sim::new_simulator(c);
  std::vector<int> phases(c.n_intersections(), 0);
  int t = 0;
  for (auto _ : state) {
    for (std::size_t k = 0; k < phases.size(); ++k) phases[k] = ((t / 4) + static_cast<int>(k)) % 2;
    benchmark::DoNotOptimize(sim::step(s, phases));
    ++t;
  }
}
BENCHMARK(BM_SimStep)->Arg(2)->Arg(5)->Arg(10);

static void BM_MarkovStep(benchmark::State& state) {
  sim::SimConfig c;
  c.spawn_rate = 3;
  c.rng_seed = 2;
  sim::SimState s = sim::new_simulator(c);
  const auto topo = env::Topology::build(env::TopologyMode::All, c);
  std::vector<int> phases(c.n_intersections(), 1);
  for (auto _ : state) {
    for (auto& p : phases) p ^= 1;
    benchmark::DoNotOptimize(env::markov_step(s, phases, c.action_interval, topo, {}));
  }
}
BENCHMARK(BM_MarkovStep);
