#include <gtest/gtest.h>

#include <Eigen/Dense>

#include "codql/errors.hpp"
#include "codql/tabular.hpp"

using namespace codql;
using namespace codql::tabular;

namespace {

// Q* by enumerating every deterministic joint policy and solving each
// policy's linear Bellman system exactly.
JointQ policy_enumeration_oracle(const StochasticGame& g) {
  const int S = g.n_states;
  const int J = g.n_joint_actions();
  Eigen::VectorXd best = Eigen::VectorXd::Constant(S, -1e300);
  std::vector<int> policy(S, 0);
  while (true) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Identity(S, S);
    Eigen::VectorXd r(S);
    for (int s = 0; s < S; ++s) {
      r(s) = g.reward[0][s][policy[s]];
      for (int t = 0; t < S; ++t) m(s, t) -= g.gamma * g.transition[s][policy[s]][t];
    }
    const Eigen::VectorXd v = m.partialPivLu().solve(r);
    best = best.cwiseMax(v);
    int i = 0;
    while (i < S && ++policy[i] == J) policy[i++] = 0;
    if (i == S) break;
  }
  JointQ q(S, std::vector<double>(J));
  for (int s = 0; s < S; ++s) {
    for (int j = 0; j < J; ++j) {
      double next = 0;
      for (int t = 0; t < S; ++t) next += g.transition[s][j][t] * best(t);
      q[s][j] = g.reward[0][s][j] + g.gamma * next;
    }
  }
  return q;
}

StochasticGame one_state(double reward, double gamma) {
  StochasticGame g;
  g.n_states = 1;
  g.gamma = gamma;
  g.transition = {{{1.0}, {1.0}}};
  g.reward = {{{reward, reward}}};
  return g;
}

}  // namespace

TEST(TabularGames, BuiltInsAreValid) {
  for (auto name : {"bandit", "mdp2", "small3"}) {
    const auto g = make_game(name);
    EXPECT_NO_THROW(g.validate()) << name;
    EXPECT_TRUE(g.identical_interest()) << name;
  }
  EXPECT_THROW(make_game("chess"), ConfigError);
  const auto g = make_game("small3");
  for (int j = 0; j < g.n_joint_actions(); ++j) EXPECT_EQ(g.joint_index(g.joint_actions(j)), j);
}

TEST(TabularOracle, ClosedForms) {
  const auto q = value_iteration_oracle(one_state(1.0, 0.5));
  EXPECT_NEAR(q[0][0], 2.0, 1e-9);
  EXPECT_NEAR(q[0][1], 2.0, 1e-9);
  const auto bandit = make_game("bandit");
  const auto qb = value_iteration_oracle(bandit);
  EXPECT_DOUBLE_EQ(qb[0][0], bandit.reward[0][0][0]);
  EXPECT_DOUBLE_EQ(qb[0][1], bandit.reward[0][0][1]);
}

TEST(TabularOracle, MatchesPolicyEnumeration) {
  for (auto name : {"mdp2", "small3"}) {
    const auto g = make_game(name);
    const auto vi = value_iteration_oracle(g);
    const auto pe = policy_enumeration_oracle(g);
    for (int s = 0; s < g.n_states; ++s) {
      for (int j = 0; j < g.n_joint_actions(); ++j) EXPECT_NEAR(vi[s][j], pe[s][j], 1e-8) << name;
    }
  }
}

TEST(TabularOracle, RejectsNonCooperative) {
  auto g = make_game("small3");
  g.reward[1][0][0] += 1.0;
  EXPECT_THROW(value_iteration_oracle(g), ConfigError);
  EXPECT_THROW(value_iteration_oracle(make_game("mdp2"), false), ConfigError);
}

TEST(MeanActionBuckets, OneNeighbor) {
  const MeanActionBuckets b{2, 5, 1};
  const int b0 = b.bucket_of_actions(std::vector<int>{0});
  const int b1 = b.bucket_of_actions(std::vector<int>{1});
  EXPECT_NE(b0, b1);
  EXPECT_EQ(b.bucket(std::vector<double>{1.0, 0.0}), b0);
  const auto r = b.reachable();
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(r[0], std::min(b0, b1));
  EXPECT_EQ(r[1], std::max(b0, b1));
  for (int x : r) EXPECT_LT(x, b.count());
  EXPECT_EQ((MeanActionBuckets{2, 5, 0}.count()), 1);
}

TEST(MeanActionBuckets, FourNeighborsGiveFiveMixtures) {
  const MeanActionBuckets b{2, 5, 4};
  EXPECT_EQ(b.reachable().size(), 5u);
  EXPECT_EQ(b.bucket_of_actions(std::vector<int>{0, 1, 1, 0}),
            b.bucket(std::vector<double>{0.5, 0.5}));
}

TEST(DoubleQUpdate, FullStepCopiesTarget) {
  TabularDoubleQ q(1, 1, 2, 1);
  const std::vector<int> boot{0};
  double_q_update(q, 0, {0, 1, 0, 3.0, 0}, 1.0, 0.0, Table::A, boot);
  EXPECT_DOUBLE_EQ(q.a(0, 0, 1, 0), 3.0);
  EXPECT_DOUBLE_EQ(q.b(0, 0, 1, 0), 0.0);
  double_q_update(q, 0, {0, 1, 0, 9.0, 0}, 0.0, 0.9, Table::A, boot);
  EXPECT_DOUBLE_EQ(q.a(0, 0, 1, 0), 3.0);
}

TEST(DoubleQUpdate, EvaluatesArgmaxInOtherTable) {
  TabularDoubleQ q(1, 2, 2, 2);
  // Table A prefers (action 0, bucket 1) at state 1; table B values it at 4.
  q.table_a[0][q.index(1, 0, 1)] = 10.0;
  q.table_a[0][q.index(1, 1, 0)] = 7.0;
  q.table_b[0][q.index(1, 0, 1)] = 4.0;
  q.table_b[0][q.index(1, 1, 0)] = 100.0;
  q.table_a[0][q.index(0, 1, 0)] = 2.0;
  const std::vector<int> all{0, 1};
  double_q_update(q, 0, {0, 1, 0, 1.0, 1}, 0.5, 0.5, Table::A, all);
  // 0.5 * 2 + 0.5 * (1 + 0.5 * 4)
  EXPECT_DOUBLE_EQ(q.a(0, 0, 1, 0), 2.5);
  const std::vector<int> only0{0};
  double_q_update(q, 0, {0, 1, 0, 1.0, 1}, 1.0, 0.5, Table::A, only0);
  EXPECT_DOUBLE_EQ(q.a(0, 0, 1, 0), 1.0 + 0.5 * 100.0);
}

TEST(DoubleQUpdate, CoinIsFair) {
  TabularDoubleQ q(1, 1, 2, 1);
  Rng coin(5);
  const std::vector<int> boot{0};
  int a = 0;
  for (int i = 0; i < 4000; ++i) {
    a += double_q_update(q, 0, {0, 0, 0, 0.0, 0}, 0.1, 0.5, coin, boot) == Table::A;
  }
  EXPECT_NEAR(a / 4000.0, 0.5, 0.04);
}

TEST(Schedules, Conditions) {
  LearningRateSchedule lr;
  EXPECT_TRUE(lr.robbins_monro());
  EXPECT_DOUBLE_EQ(lr.rate(4), 0.25);
  lr.kind = LearningRateSchedule::Kind::Polynomial;
  lr.exponent = 0.7;
  EXPECT_TRUE(lr.robbins_monro());
  lr.exponent = 0.4;
  EXPECT_FALSE(lr.robbins_monro());
  lr.kind = LearningRateSchedule::Kind::Constant;
  EXPECT_FALSE(lr.robbins_monro());
  ExplorationSchedule ex;
  EXPECT_TRUE(ex.glie());
  EXPECT_DOUBLE_EQ(ex.epsilon(1), 1.0);
  ex.exponent = 0.0;
  EXPECT_FALSE(ex.glie());
  ex.exponent = 2.0;
  EXPECT_FALSE(ex.glie());
}

TEST(Convergence, WarnsOnBadSchedules) {
  ConvergenceConfig c;
  c.n_updates = 10;
  c.trace_every = 5;
  c.learning_rate.kind = LearningRateSchedule::Kind::Constant;
  c.learning_rate.value = 0.1;
  c.exploration.exponent = 0.0;
  const auto r = run_convergence_experiment(make_game("mdp2"), c);
  EXPECT_EQ(r.warnings.size(), 2u);
  ConvergenceConfig good;
  good.n_updates = 10;
  const auto ok = run_convergence_experiment(make_game("mdp2"), good);
  EXPECT_TRUE(ok.warnings.empty());
}

TEST(Convergence, Mdp2AndSmall3) {
  for (auto name : {"mdp2", "small3"}) {
    const auto g = make_game(name);
    ConvergenceConfig c;
    c.seed = 3;
    c.trace_every = 20000;
    const auto r = run_convergence_experiment(g, c);
    const auto& last = r.trace.back();
    EXPECT_EQ(last.update, c.n_updates);
    EXPECT_LT(std::max(last.err_a, last.err_b), 0.05) << name;
    EXPECT_LT(last.gap_ab, 0.02) << name;
    EXPECT_LE(r.max_abs_q, g.reward_bound() / (1.0 - g.gamma) + 1e-12) << name;
  }
}

TEST(Convergence, DeterministicPerSeed) {
  ConvergenceConfig c;
  c.n_updates = 5000;
  c.trace_every = 500;
  c.seed = 8;
  const auto g = make_game("small3");
  const auto r1 = run_convergence_experiment(g, c);
  const auto r2 = run_convergence_experiment(g, c);
  EXPECT_EQ(trace_csv(r1.trace), trace_csv(r2.trace));
  EXPECT_EQ(r1.q.table_a, r2.q.table_a);
  EXPECT_EQ(trace_csv(r1.trace).substr(0, 31), "update_index,err_a,err_b,gap_ab");
}

TEST(Convergence, PrintedRuleMissesJointOptimum) {
  ConvergenceConfig c;
  c.bootstrap = BootstrapMean::Current;
  c.trace_every = 200000;
  const auto r = run_convergence_experiment(make_game("small3"), c);
  EXPECT_GT(std::max(r.trace.back().err_a, r.trace.back().err_b), 0.05);
  EXPECT_EQ(bootstrap_from_string("next"), BootstrapMean::NextObserved);
  EXPECT_THROW(bootstrap_from_string("later"), ConfigError);
}
