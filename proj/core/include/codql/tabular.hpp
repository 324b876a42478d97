#pragma once

// Tabular double Q-learning with mean-action conditioning on small finite
// stochastic games, and a value-iteration oracle for identical-interest
// games.

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "codql/rng.hpp"

namespace codql::tabular {

struct StochasticGame {
  int n_agents = 1;
  int n_states = 1;
  int n_actions = 2;  // per agent
  double gamma = 0.5;
  // Sampled rewards add uniform noise in [-reward_noise, reward_noise].
  double reward_noise = 0.0;
  // transition[s][joint][s'] and reward[k][s][joint] (expected value).
  std::vector<std::vector<std::vector<double>>> transition;
  std::vector<std::vector<std::vector<double>>> reward;

  int n_joint_actions() const;
  int joint_index(std::span<const int> actions) const;
  std::vector<int> joint_actions(int index) const;
  /// Bound K on |sampled reward|.
  double reward_bound() const;
  bool identical_interest() const;
  /// Throws ConfigError on malformed shapes or rows not summing to 1.
  void validate() const;
};

/// Built-in games: "bandit" (1 agent, 1 state, gamma 0), "mdp2" (1 agent,
/// 2 states), "small3" (2 agents, 3 states, identical interest).
StochasticGame make_game(std::string_view name);

using JointQ = std::vector<std::vector<double>>;  // [state][joint action]

/// Fixed point of the joint Bellman optimality operator. Only
/// identical-interest games are supported; anything else throws ConfigError.
JointQ value_iteration_oracle(const StochasticGame& game, bool cooperative = true,
                              double tolerance = 1e-10);

/// Discretizes a mean action into `bins` levels per coordinate.
struct MeanActionBuckets {
  int n_actions = 2;
  int bins = 5;
  int n_neighbors = 1;  // 0: a single bucket

  int count() const;
  int bucket(std::span<const double> mean) const;
  /// Bucket of the mean one-hot action of `neighbor_actions`.
  int bucket_of_actions(std::span<const int> neighbor_actions) const;
  /// Buckets produced by some neighbor action profile, ascending.
  std::vector<int> reachable() const;
};

/// Two Q tables per agent, indexed by (state, own action, mean-action bucket).
struct TabularDoubleQ {
  int n_agents = 0;
  int n_states = 0;
  int n_actions = 0;
  int n_buckets = 0;
  std::vector<std::vector<double>> table_a;
  std::vector<std::vector<double>> table_b;
  std::vector<std::vector<std::int64_t>> count_a;
  std::vector<std::vector<std::int64_t>> count_b;

  TabularDoubleQ() = default;
  TabularDoubleQ(int n_agents, int n_states, int n_actions, int n_buckets);

  std::size_t index(int state, int action, int bucket) const {
    return (static_cast<std::size_t>(state) * n_actions + action) * n_buckets + bucket;
  }
  double a(int k, int s, int act, int b) const { return table_a[k][index(s, act, b)]; }
  double b(int k, int s, int act, int bk) const { return table_b[k][index(s, act, bk)]; }
};

enum class Table { A, B };

struct TabularTransition {
  int state = 0;
  int action = 0;
  int bucket = 0;
  double reward = 0;
  int next_state = 0;
};

/// Updates one table of agent k:
///   Q_u(s,a,m) <- (1-alpha) Q_u(s,a,m) + alpha (r + gamma Q_o(s', a*, m*))
/// where (a*, m*) maximizes Q_u(s', ., .) over `bootstrap_buckets` and Q_o is
/// the other table. Passing {bucket} reproduces the printed rule with the
/// current mean action; passing the next-step bucket or every reachable
/// bucket gives the alternative bootstraps.
void double_q_update(TabularDoubleQ& q, int agent, const TabularTransition& t, double alpha,
                     double gamma, Table which, std::span<const int> bootstrap_buckets);

/// Same, with the table picked by a fair coin. Returns the table updated.
Table double_q_update(TabularDoubleQ& q, int agent, const TabularTransition& t, double alpha,
                     double gamma, Rng& coin, std::span<const int> bootstrap_buckets);

enum class BootstrapMean {
  Current,       // mean action of the transition itself
  NextObserved,  // neighbors' actions actually taken at s'
  StageOptimum,  // maximize over every reachable mean action at s'
};

BootstrapMean bootstrap_from_string(std::string_view name);

struct LearningRateSchedule {
  enum class Kind { InverseCount, Polynomial, Constant };
  Kind kind = Kind::InverseCount;
  double exponent = 1.0;  // Polynomial: 1 / n^exponent
  double value = 1.0;     // Constant

  double rate(std::int64_t n) const;
  bool robbins_monro() const;
};

/// epsilon(n) = min(1, initial / n^exponent), n = visits of the state.
struct ExplorationSchedule {
  double initial = 1.0;
  double exponent = 0.1;

  double epsilon(std::int64_t visits) const;
  bool glie() const;
};

struct ConvergenceConfig {
  LearningRateSchedule learning_rate;
  ExplorationSchedule exploration;
  BootstrapMean bootstrap = BootstrapMean::StageOptimum;
  int mean_bins = 5;
  std::int64_t n_updates = 200000;
  std::int64_t trace_every = 1000;
  std::uint64_t seed = 0;
};

struct TraceRow {
  std::int64_t update = 0;
  double err_a = 0;
  double err_b = 0;
  double gap_ab = 0;
};

struct ConvergenceResult {
  std::vector<TraceRow> trace;
  std::vector<std::string> warnings;
  TabularDoubleQ q;
  JointQ oracle;
  double max_abs_q = 0;  // largest |Q| seen in either table during training
};

/// Max-norm distances of both tables to the oracle, and between the tables,
/// over every (state, joint action) entry.
TraceRow measure(const TabularDoubleQ& q, const JointQ& oracle, const StochasticGame& game,
                 const MeanActionBuckets& buckets);

/// Simulates the game under per-agent epsilon-greedy behavior and applies
/// double_q_update for every agent at every transition. One update = one
/// simulated transition. Schedule problems are reported as warnings.
ConvergenceResult run_convergence_experiment(const StochasticGame& game,
                                             const ConvergenceConfig& config);

/// update_index,err_a,err_b,gap_ab
std::string trace_csv(std::span<const TraceRow> trace);

}  // namespace codql::tabular
