#include <benchmark/benchmark.h>

#include "codql/replay_buffer.hpp"

using namespace codql;

static void BM_ReplayPush(benchmark::State& state) {
  agents::ReplayBuffer buf(500000);
  agents::ReplayRecord r;
  for (auto _ : state) {
    buf.push(r);
    ++r.agent;
  }
}
BENCHMARK(BM_ReplayPush);

static void BM_ReplaySample(benchmark::State& state) {
  agents::ReplayBuffer buf(500000);
  agents::ReplayRecord r;
  for (int i = 0; i < 100000; ++i) buf.push(r);
  Rng rng(3);
  for (auto _ : state) benchmark::DoNotOptimize(buf.sample_indices(1024, rng));
  state.SetItemsProcessed(state.iterations() * 1024);
}
BENCHMARK(BM_ReplaySample);
BENCHMARK_MAIN();
