#include <gtest/gtest.h>

#include "codql/errors.hpp"
#include "codql/nn.hpp"
#include "codql/rng.hpp"
#include "nn_oracle.hpp"

using namespace codql;
using namespace codql::nn;

namespace {

test::OracleBatch random_batch(const NetSpec& spec, int n, Rng& rng) {
  test::OracleBatch b;
  for (int i = 0; i < n; ++i) {
    std::vector<double> x(spec.input_dim);
    for (double& v : x) v = 2.0 * uniform01(rng) - 1.0;
    b.inputs.push_back(x);
    b.actions.push_back(uniform_int(rng, 0, spec.output_dim - 1));
    b.targets.push_back(2.0 * uniform01(rng) - 1.0);
  }
  return b;
}

QNetParams random_params(const NetSpec& spec, std::uint64_t seed) {
  Rng rng(seed);
  QNetParams p = init_params(spec, rng);
  for (auto& l : p.layers) {
    for (Eigen::Index i = 0; i < l.bias.size(); ++i) l.bias(i) = 0.2 * uniform01(rng) - 0.1;
  }
  return p;
}

}  // namespace

TEST(Nn, ZeroWeightsGiveZeroOutput) {
  const auto p = zero_params(NetSpec{3, {4}, 2, false});
  const std::vector<double> x{1.0, -2.0, 5.0};
  EXPECT_EQ(forward(p, x), Eigen::VectorXd::Zero(2));
}

TEST(Nn, IdentitySingleLayer) {
  auto p = zero_params(NetSpec{2, {}, 2, false});
  p.layers[0].weight = Eigen::MatrixXd::Identity(2, 2);
  const std::vector<double> x{1.0, 2.0};
  EXPECT_EQ(forward(p, x), (Eigen::VectorXd(2) << 1.0, 2.0).finished());
}

TEST(Nn, ForwardMatchesStraightLineOracle) {
  Rng rng(3);
  for (const auto& spec : {NetSpec{5, {7, 3}, 2, false}, NetSpec{10, {128, 128}, 2, false},
                           NetSpec{4, {6}, 3, true}}) {
    const auto p = random_params(spec, rng());
    const auto batch = random_batch(spec, 16, rng);
    const Eigen::MatrixXd out = forward_batch(p, test::to_matrix(batch));
    for (std::size_t j = 0; j < batch.inputs.size(); ++j) {
      const auto ref = test::oracle_forward(p, batch.inputs[j]).output;
      for (int a = 0; a < spec.output_dim; ++a) EXPECT_NEAR(out(a, j), ref[a], 1e-12);
      const auto single = forward(p, batch.inputs[j]);
      for (int a = 0; a < spec.output_dim; ++a) EXPECT_NEAR(single(a), out(a, j), 1e-12);
    }
  }
}

TEST(Nn, ForwardIsPureAndChecksShape) {
  const auto p = random_params(NetSpec{3, {5}, 2, false}, 9);
  const std::vector<double> x{0.1, 0.2, 0.3};
  EXPECT_EQ(forward(p, x), forward(p, x));
  const std::vector<double> bad{0.1, 0.2};
  EXPECT_THROW(forward(p, bad), ContractError);
}

TEST(Nn, AnalyticGradientsMatchFiniteDifferences) {
  Rng rng(21);
  for (const auto& spec : {NetSpec{3, {4, 4}, 2, false}, NetSpec{2, {}, 2, false},
                           NetSpec{6, {5}, 2, true}, NetSpec{12, {16, 8, 4}, 2, false}}) {
    const auto p = random_params(spec, rng());
    const auto cmp = test::compare_gradients(p, random_batch(spec, 6, rng));
    EXPECT_LT(cmp.max_rel_error, 1e-4);
    EXPECT_GT(cmp.checked, cmp.skipped);
  }
}

TEST(Nn, LibraryGradientCheckPasses) {
  for (const auto& spec : grad_check_shapes()) {
    if (spec.hidden.size() == 2 && spec.hidden[0] == 128) continue;  // covered by acceptance
    const auto r = gradient_check(spec, 4);
    EXPECT_LT(r.max_rel_error, 1e-4);
    EXPECT_GT(r.n_checked, 0u);
  }
}

TEST(Nn, LossIsZeroWhenTargetsMatch) {
  auto p = random_params(NetSpec{3, {5}, 2, false}, 2);
  Rng rng(1);
  auto batch = random_batch(p.spec, 8, rng);
  for (std::size_t i = 0; i < batch.inputs.size(); ++i) {
    batch.targets[i] = test::oracle_forward(p, batch.inputs[i]).output[batch.actions[i]];
  }
  const auto before = p;
  const double loss = train_step(p, test::to_matrix(batch), batch.actions, batch.targets, 1e-3);
  EXPECT_NEAR(loss, 0.0, 1e-24);
  EXPECT_LT(parameter_distance(p, before), 1e-12);
}

TEST(Nn, TrainStepDescends) {
  auto p = random_params(NetSpec{3, {}, 2, false}, 5);
  Rng rng(2);
  const auto batch = random_batch(p.spec, 1, rng);
  const auto x = test::to_matrix(batch);
  const double first = train_step(p, x, batch.actions, batch.targets, 1e-3);
  const double second = loss_and_gradients(p, x, batch.actions, batch.targets, nullptr);
  EXPECT_LT(second, first);
  EXPECT_EQ(p.step, 1);
}

TEST(Nn, LossIsNonNegative) {
  Rng rng(6);
  const auto p = random_params(NetSpec{4, {6}, 2, false}, 6);
  for (int i = 0; i < 20; ++i) {
    const auto b = random_batch(p.spec, 4, rng);
    EXPECT_GE(loss_and_gradients(p, test::to_matrix(b), b.actions, b.targets, nullptr), 0.0);
  }
}

TEST(Nn, NonFiniteTargetsThrow) {
  auto p = random_params(NetSpec{2, {3}, 2, false}, 1);
  const Eigen::MatrixXd x = Eigen::MatrixXd::Zero(2, 1);
  const std::vector<int> a{0};
  const std::vector<double> y{std::nan("")};
  EXPECT_THROW(train_step(p, x, a, y, 1e-3), NumericError);
}

TEST(Nn, SoftUpdateArithmetic) {
  const NetSpec spec{1, {}, 1, false};
  auto target = zero_params(spec);
  auto online = zero_params(spec);
  online.layers[0].weight(0, 0) = 4.0;
  soft_update(target, online, 0.5);
  EXPECT_EQ(target.layers[0].weight(0, 0), 2.0);
  soft_update(target, online, 1.0);
  EXPECT_EQ(target.layers[0].weight(0, 0), 4.0);
  EXPECT_THROW(soft_update(target, online, 0.0), ContractError);
  EXPECT_THROW(soft_update(target, zero_params(NetSpec{2, {}, 1, false}), 0.5), ContractError);
}

TEST(Nn, SoftUpdateContractsGeometrically) {
  const NetSpec spec{4, {8}, 2, false};
  auto target = random_params(spec, 1);
  const auto online = random_params(spec, 2);
  double d = parameter_distance(target, online);
  for (int i = 0; i < 5; ++i) {
    soft_update(target, online, 0.1);
    const double next = parameter_distance(target, online);
    EXPECT_NEAR(next, 0.9 * d, 1e-12);
    d = next;
  }
}

TEST(Nn, SoftUpdateIsLinear) {
  // soft(t1 + t2, o1 + o2) == soft(t1, o1) + soft(t2, o2)
  const NetSpec spec{3, {4}, 2, false};
  auto t1 = random_params(spec, 1), t2 = random_params(spec, 2);
  const auto o1 = random_params(spec, 3), o2 = random_params(spec, 4);
  auto tsum = t1, osum = o1;
  for (std::size_t i = 0; i < tsum.layers.size(); ++i) {
    tsum.layers[i].weight += t2.layers[i].weight;
    tsum.layers[i].bias += t2.layers[i].bias;
    osum.layers[i].weight += o2.layers[i].weight;
    osum.layers[i].bias += o2.layers[i].bias;
  }
  soft_update(t1, o1, 0.3);
  soft_update(t2, o2, 0.3);
  soft_update(tsum, osum, 0.3);
  for (std::size_t i = 0; i < tsum.layers.size(); ++i) {
    EXPECT_TRUE(tsum.layers[i].weight.isApprox(t1.layers[i].weight + t2.layers[i].weight, 1e-12));
    EXPECT_TRUE(tsum.layers[i].bias.isApprox(t1.layers[i].bias + t2.layers[i].bias, 1e-12));
  }
}

TEST(Nn, SerializationRoundTrip) {
  auto p = random_params(NetSpec{3, {5, 4}, 2, true}, 8);
  Rng rng(4);
  const auto b = random_batch(p.spec, 4, rng);
  train_step(p, test::to_matrix(b), b.actions, b.targets, 1e-2);
  const auto q = deserialize(serialize(p));
  EXPECT_TRUE(identical(p, q));
  auto bytes = serialize(p);
  bytes[20] ^= 1;
  EXPECT_THROW(deserialize(bytes), FormatError);
}
