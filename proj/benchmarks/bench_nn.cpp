#include <benchmark/benchmark.h>

#include "codql/nn.hpp"

using namespace codql;

namespace {

nn::QNetParams net(int input_dim) {
  Rng rng(1);
  return nn::init_params(nn::NetSpec{input_dim, {128, 128}, 2, false}, rng);
}

}  // namespace

static void BM_ForwardBatch(benchmark::State& state) {
  const auto p = net(35);
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(35, state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(nn::forward_batch(p, x));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ForwardBatch)->Arg(25)->Arg(1024);

static void BM_TrainStep(benchmark::State& state) {
  auto p = net(35);
  const int batch = static_cast<int>(state.range(0));
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(35, batch);
  std::vector<int> actions(batch);
  std::vector<double> targets(batch);
  for (int i = 0; i < batch; ++i) {
    actions[i] = i % 2;
    targets[i] = -1.0 + 0.001 * i;
  }
  for (auto _ : state) benchmark::DoNotOptimize(nn::train_step(p, x, actions, targets, 1e-4));
  state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_TrainStep)->Arg(1024);

static void BM_SoftUpdate(benchmark::State& state) {
  auto target = net(35);
  const auto online = net(35);
  for (auto _ : state) nn::soft_update(target, online, 0.01);
}
BENCHMARK(BM_SoftUpdate);
