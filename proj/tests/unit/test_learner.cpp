#include <gtest/gtest.h>

#include "codql/errors.hpp"
#include "codql/learner.hpp"

using namespace codql;
using namespace codql::agents;

namespace {

// A net with no hidden layer and zero weights outputs its bias for any input.
nn::QNetParams constant_net(int input_dim, double q0, double q1) {
  nn::QNetParams p = nn::zero_params(nn::NetSpec{input_dim, {}, 2, false});
  p.layers[0].bias << q0, q1;
  return p;
}

ReplayRecord record(double reward, double shared) {
  ReplayRecord r;
  r.agent = 0;
  r.reward = reward;
  r.shared_reward = shared;
  r.obs.own = {1, 2, 3, 4};
  r.next_obs.own = {2, 1, 0, 3};
  r.mean_action = {0.5, 0.5};
  r.next_mean_action = {1.0, 0.0};
  return r;
}

LearnerConfig small_config(Algorithm a) {
  LearnerConfig c;
  c.algorithm = a;
  c.hidden = {8};
  c.batch_size = 4;
  c.replay_capacity = 64;
  c.min_buffer_before_training = 8;
  c.updates_per_episode = 5;
  return c;
}

}  // namespace

TEST(FeatureEncoder, WidthsPerAlgorithm) {
  EXPECT_EQ(FeatureEncoder(Algorithm::CoDQL, 4, 20).width(), 14);
  EXPECT_EQ(FeatureEncoder(Algorithm::IDQL, 4, 20).width(), 8);
  EXPECT_EQ(FeatureEncoder(Algorithm::IQL, 9, 20).width(), 13);
  const FeatureEncoder e(Algorithm::CoDQL, 25, 20);
  EXPECT_EQ(e.state_width() + e.mean_action_width(), 10);
}

TEST(FeatureEncoder, NormalisesAndEmbeds) {
  const FeatureEncoder e(Algorithm::CoDQL, 3, 10);
  env::JointObs obs;
  obs.own = {10, 5, 0, 2};
  obs.neighbor_mean = {1.0, 0.0, 3.0, 0.5};
  const std::vector<double> mean{0.25, 0.75};
  std::vector<double> x(e.width());
  e.encode(obs, mean, 1, x.data());
  const std::vector<double> expected{1.0, 0.5, 0.0, 0.2, 0.1, 0.0, 0.3, 0.05, 0.25, 0.75, 0, 1, 0};
  ASSERT_EQ(x.size(), expected.size());
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_DOUBLE_EQ(x[i], expected[i]) << i;
  EXPECT_THROW(e.encode(obs, mean, 3, x.data()), ContractError);
}

TEST(Targets, DoubleEstimatorExample) {
  const FeatureEncoder e(Algorithm::CoDQL, 1, 20);
  const auto online = constant_net(e.width(), 1.0, 3.0);
  const auto target = constant_net(e.width(), 5.0, 0.0);
  const ReplayRecord r = record(7.0, -1.0);
  const Batch b{&r};
  EXPECT_DOUBLE_EQ(codql_target(b, online, target, 0.95, e)[0], -1.0);
  const FeatureEncoder ei(Algorithm::IDQL, 1, 20);
  EXPECT_DOUBLE_EQ(idql_target(b, constant_net(ei.width(), 1, 3), constant_net(ei.width(), 5, 0),
                               0.95, ei)[0],
                   7.0);
}

TEST(Targets, SingleEstimatorExample) {
  const FeatureEncoder e(Algorithm::IQL, 1, 20);
  const ReplayRecord r = record(1.0, 99.0);
  EXPECT_DOUBLE_EQ(iql_target({&r}, constant_net(e.width(), 2.0, 7.0), 0.5, e)[0], 4.5);
}

TEST(Targets, ZeroDiscountGivesScaledReward) {
  const ReplayRecord r = record(-3.0, -5.0);
  const Batch b{&r};
  for (auto a : {Algorithm::CoDQL, Algorithm::IDQL, Algorithm::IQL}) {
    const FeatureEncoder e(a, 1, 20);
    const auto n1 = constant_net(e.width(), 4.0, -2.0);
    const auto n2 = constant_net(e.width(), -6.0, 8.0);
    const double expected = a == Algorithm::CoDQL ? -5.0 : -3.0;
    double y = 0;
    if (a == Algorithm::CoDQL) y = codql_target(b, n1, n2, 0.0, e, 0.5)[0];
    if (a == Algorithm::IDQL) y = idql_target(b, n1, n2, 0.0, e, 0.5)[0];
    if (a == Algorithm::IQL) y = iql_target(b, n2, 0.0, e, 0.5)[0];
    EXPECT_DOUBLE_EQ(y, 0.5 * expected);
  }
}

TEST(Targets, DoubleNeverExceedsMaxAndAgreesWhenNetsMatch) {
  const FeatureEncoder e(Algorithm::IDQL, 2, 20);
  Rng rng(11);
  const nn::NetSpec spec{e.width(), {6}, 2, false};
  const auto a = nn::init_params(spec, rng);
  const auto t = nn::init_params(spec, rng);
  std::vector<ReplayRecord> recs;
  for (int i = 0; i < 30; ++i) {
    ReplayRecord r = record(0.1 * i, 0.0);
    r.agent = i % 2;
    r.next_obs.own = {i % 5, (3 * i) % 7, i % 3, 20 - i % 20};
    recs.push_back(r);
  }
  Batch b;
  for (const auto& r : recs) b.push_back(&r);
  const auto y_double = idql_target(b, a, t, 0.9, e);
  const auto y_max = iql_target(b, t, 0.9, e);
  const auto y_same = idql_target(b, t, t, 0.9, e);
  for (std::size_t i = 0; i < b.size(); ++i) {
    EXPECT_LE(y_double[i], y_max[i] + 1e-15);
    EXPECT_DOUBLE_EQ(y_same[i], y_max[i]);
  }
}

TEST(Targets, UseNextMeanAction) {
  const FeatureEncoder e(Algorithm::CoDQL, 1, 20);
  // Output 0 reads the second mean-action coordinate.
  nn::QNetParams net = nn::zero_params(nn::NetSpec{e.width(), {}, 2, false});
  net.layers[0].weight(0, 9) = 10.0;
  ReplayRecord r = record(0.0, 0.0);
  r.mean_action = {0.0, 1.0};
  r.next_mean_action = {1.0, 0.0};
  EXPECT_DOUBLE_EQ(codql_target({&r}, net, net, 0.5, e)[0], 0.0);
  r.next_mean_action = {0.5, 0.5};
  EXPECT_DOUBLE_EQ(codql_target({&r}, net, net, 0.5, e)[0], 2.5);
}

TEST(LearnerConfig, Validation) {
  LearnerConfig c;
  EXPECT_NO_THROW(c.validate());
  c.gamma = 1.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.batch_size = 10;
  c.replay_capacity = 5;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.tau = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.alpha_reward = 1.5;
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_EQ(algorithm_from_string("Co-DQL"), Algorithm::CoDQL);
  EXPECT_THROW(algorithm_from_string("sarsa"), ConfigError);
}

TEST(Learner, SkipsBelowMinimumBuffer) {
  Learner l(small_config(Algorithm::CoDQL), 1, 20, 3);
  ReplayBuffer buf(64);
  for (int i = 0; i < 7; ++i) buf.push(record(-1.0, -1.0));
  Rng rng(1);
  const auto before = l.online();
  const auto stats = l.learn_episode(buf, rng);
  EXPECT_TRUE(stats.skipped);
  EXPECT_EQ(stats.updates, 0);
  EXPECT_TRUE(nn::identical(before, l.online()));
}

TEST(Learner, ZeroUpdatesLeavesParametersAlone) {
  auto c = small_config(Algorithm::IDQL);
  c.updates_per_episode = 0;
  Learner l(c, 1, 20, 3);
  ReplayBuffer buf(64);
  for (int i = 0; i < 10; ++i) buf.push(record(-1.0, -1.0));
  Rng rng(1);
  const auto online = l.online();
  const auto target = l.target();
  const auto stats = l.learn_episode(buf, rng);
  EXPECT_FALSE(stats.skipped);
  EXPECT_EQ(stats.updates, 0);
  EXPECT_TRUE(nn::identical(online, l.online()));
  EXPECT_TRUE(nn::identical(target, l.target()));
}

TEST(Learner, TargetFollowsOnceSoftly) {
  auto c = small_config(Algorithm::IQL);
  c.tau = 0.25;
  Learner l(c, 1, 20, 3);
  ReplayBuffer buf(64);
  for (int i = 0; i < 10; ++i) buf.push(record(-1.0, -1.0));
  Rng rng(1);
  const auto target_before = l.target();
  l.learn_episode(buf, rng);
  nn::QNetParams expected = target_before;
  nn::soft_update(expected, l.online(), 0.25);
  EXPECT_LT(nn::parameter_distance(expected, l.target()), 1e-15);
}

TEST(Learner, RegressesToConstantTarget) {
  auto c = small_config(Algorithm::CoDQL);
  c.gamma = 0.0;
  c.lr = 1e-2;
  c.updates_per_episode = 100;
  c.batch_size = 16;
  Learner l(c, 1, 20, 5);
  ReplayBuffer buf(64);
  for (int i = 0; i < 32; ++i) {
    ReplayRecord r = record(0.0, 0.5);
    r.action = i % 2;
    buf.push(r);
  }
  Rng rng(2);
  LearnStats last;
  for (int e = 0; e < 5; ++e) last = l.learn_episode(buf, rng);
  EXPECT_LT(last.loss_mean, 1e-3);
  const env::JointObs obs = record(0, 0).obs;
  const env::MeanAction mean{{0.5, 0.5}};
  const auto q = l.q_values({&obs, 1}, {&mean, 1});
  EXPECT_NEAR(q(0, 0), 0.5, 0.05);
  EXPECT_NEAR(q(1, 0), 0.5, 0.05);
}

TEST(Learner, GreedyIsArgmaxAndExploreCounts) {
  Learner l(small_config(Algorithm::CoDQL), 2, 20, 9);
  std::vector<env::JointObs> obs(2);
  obs[0].own = {1, 0, 0, 0};
  obs[1].own = {0, 0, 3, 0};
  const std::vector<env::MeanAction> means(2, env::uniform_mean_action());
  const auto q = l.q_values(obs, means);
  const auto g = l.greedy_actions(obs, means);
  for (int k = 0; k < 2; ++k) EXPECT_EQ(g[k], q(1, k) > q(0, k) ? 1 : 0);
  Rng rng(4);
  for (int i = 0; i < 3; ++i) l.explore_actions(obs, means, rng);
  const auto* e = l.ucb().find(0, ucb_state_key(obs[0].own, 20));
  ASSERT_NE(e, nullptr);
  EXPECT_EQ(e->visits, 3);
  EXPECT_GE(e->action_counts[0], 1);
  EXPECT_GE(e->action_counts[1], 1);
}

TEST(Learner, LoadRejectsShapeMismatch) {
  Learner l(small_config(Algorithm::CoDQL), 2, 20, 1);
  Learner other(small_config(Algorithm::IQL), 2, 20, 1);
  EXPECT_THROW(l.load(other.online(), other.target(), std::nullopt), FormatError);
  EXPECT_THROW(l.load(l.online(), l.target(), UcbCounts(3, 2)), FormatError);
  EXPECT_NO_THROW(l.load(l.online(), l.target(), std::nullopt));
}
