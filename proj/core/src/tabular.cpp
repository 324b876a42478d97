#include "codql/tabular.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>

#include "codql/csv.hpp"
#include "codql/errors.hpp"

namespace codql::tabular {

namespace {

using Tensor3 = std::vector<std::vector<std::vector<double>>>;

// Builds per-agent identical rewards and a transition kernel from compact
// per-state tables indexed by joint action.
StochasticGame assemble(int n_agents, int n_states, int n_actions, double gamma, double noise,
                        const std::vector<std::vector<double>>& team_reward,
                        const Tensor3& transition) {
  StochasticGame g;
  g.n_agents = n_agents;
  g.n_states = n_states;
  g.n_actions = n_actions;
  g.gamma = gamma;
  g.reward_noise = noise;
  g.transition = transition;
  g.reward.assign(n_agents, team_reward);
  g.validate();
  return g;
}

}  // namespace

int StochasticGame::n_joint_actions() const {
  int n = 1;
  for (int k = 0; k < n_agents; ++k) n *= n_actions;
  return n;
}

int StochasticGame::joint_index(std::span<const int> actions) const {
  if (static_cast<int>(actions.size()) != n_agents) throw ContractError("joint action size");
  int idx = 0;
  for (int a : actions) {
    if (a < 0 || a >= n_actions) throw ContractError("action out of range");
    idx = idx * n_actions + a;
  }
  return idx;
}

std::vector<int> StochasticGame::joint_actions(int index) const {
  std::vector<int> out(n_agents);
  for (int k = n_agents - 1; k >= 0; --k) {
    out[k] = index % n_actions;
    index /= n_actions;
  }
  return out;
}

double StochasticGame::reward_bound() const {
  double k = 0.0;
  for (const auto& agent : reward) {
    for (const auto& row : agent) {
      for (double r : row) k = std::max(k, std::abs(r));
    }
  }
  return k + reward_noise;
}

bool StochasticGame::identical_interest() const {
  for (int k = 1; k < n_agents; ++k) {
    if (reward[k] != reward[0]) return false;
  }
  return true;
}

void StochasticGame::validate() const {
  if (n_agents < 1) throw ConfigError("game.n_agents", "must be >= 1");
  if (n_states < 1) throw ConfigError("game.n_states", "must be >= 1");
  if (n_actions < 1) throw ConfigError("game.n_actions", "must be >= 1");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("game.gamma", "must lie in [0, 1)");
  if (reward_noise < 0.0) throw ConfigError("game.reward_noise", "must be >= 0");
  const int nj = n_joint_actions();
  if (static_cast<int>(transition.size()) != n_states) {
    throw ConfigError("game.transition", "one row block per state required");
  }
  for (const auto& per_state : transition) {
    if (static_cast<int>(per_state.size()) != nj) {
      throw ConfigError("game.transition", "one row per joint action required");
    }
    for (const auto& row : per_state) {
      if (static_cast<int>(row.size()) != n_states) {
        throw ConfigError("game.transition", "row width must equal the state count");
      }
      double sum = 0.0;
      for (double p : row) {
        if (p < 0.0) throw ConfigError("game.transition", "negative probability");
        sum += p;
      }
      if (std::abs(sum - 1.0) > 1e-12) throw ConfigError("game.transition", "row does not sum to 1");
    }
  }
  if (static_cast<int>(reward.size()) != n_agents) {
    throw ConfigError("game.reward", "one reward table per agent required");
  }
  for (const auto& agent : reward) {
    if (static_cast<int>(agent.size()) != n_states) throw ConfigError("game.reward", "state count");
    for (const auto& row : agent) {
      if (static_cast<int>(row.size()) != nj) throw ConfigError("game.reward", "joint action count");
      for (double r : row) {
        if (!std::isfinite(r)) throw ConfigError("game.reward", "non-finite reward");
      }
    }
  }
}

StochasticGame make_game(std::string_view name) {
  if (name == "bandit") {
    return assemble(1, 1, 2, 0.0, 0.1, {{0.5, 1.0}}, {{{1.0}, {1.0}}});
  }
  if (name == "mdp2") {
    // Action 0 in state 0 mostly stays put; state 1 pays more.
    return assemble(1, 2, 2, 0.5, 0.1, {{0.0, 0.3}, {1.0, 0.5}},
                    {{{0.8, 0.2}, {0.4, 0.6}}, {{0.5, 0.5}, {0.9, 0.1}}});
  }
  if (name == "small3") {
    // Joint action order: (0,0), (0,1), (1,0), (1,1). Each state rewards a
    // different coordinated profile; miscoordination leaks to state 2.
    return assemble(2, 3, 2, 0.5, 0.1,
                    {{1.0, 0.0, 0.0, 0.6}, {0.2, 0.9, 0.3, 0.0}, {0.0, 0.4, 0.8, 0.1}},
                    {{{0.7, 0.2, 0.1}, {0.1, 0.3, 0.6}, {0.2, 0.2, 0.6}, {0.1, 0.8, 0.1}},
                     {{0.5, 0.4, 0.1}, {0.1, 0.6, 0.3}, {0.3, 0.1, 0.6}, {0.2, 0.2, 0.6}},
                     {{0.3, 0.3, 0.4}, {0.6, 0.2, 0.2}, {0.1, 0.6, 0.3}, {0.4, 0.1, 0.5}}});
  }
  throw ConfigError("game", "unknown game '" + std::string(name) + "' (bandit, mdp2, small3)");
}

JointQ value_iteration_oracle(const StochasticGame& game, bool cooperative, double tolerance) {
  game.validate();
  if (!cooperative) {
    throw ConfigError("game", "only identical-interest games have a value-iteration oracle");
  }
  if (!game.identical_interest()) {
    throw ConfigError("game.reward", "agents' rewards differ; game is not identical-interest");
  }
  const int nj = game.n_joint_actions();
  JointQ q(game.n_states, std::vector<double>(nj, 0.0));
  const double stop = game.gamma == 0.0 ? std::numeric_limits<double>::infinity()
                                        : tolerance * (1.0 - game.gamma) / game.gamma;
  for (int iter = 0; iter < 100000; ++iter) {
    std::vector<double> v(game.n_states);
    for (int s = 0; s < game.n_states; ++s) v[s] = *std::max_element(q[s].begin(), q[s].end());
    double delta = 0.0;
    JointQ next = q;
    for (int s = 0; s < game.n_states; ++s) {
      for (int j = 0; j < nj; ++j) {
        double expect = 0.0;
        for (int s2 = 0; s2 < game.n_states; ++s2) expect += game.transition[s][j][s2] * v[s2];
        next[s][j] = game.reward[0][s][j] + game.gamma * expect;
        delta = std::max(delta, std::abs(next[s][j] - q[s][j]));
      }
    }
    q = std::move(next);
    if (delta < stop || (game.gamma == 0.0 && iter > 0)) break;
  }
  return q;
}

int MeanActionBuckets::count() const {
  if (n_neighbors == 0) return 1;
  int n = 1;
  for (int c = 0; c < n_actions; ++c) n *= bins;
  return n;
}

int MeanActionBuckets::bucket(std::span<const double> mean) const {
  if (n_neighbors == 0) return 0;
  if (static_cast<int>(mean.size()) != n_actions) throw ContractError("mean action width");
  int idx = 0;
  for (int c = n_actions - 1; c >= 0; --c) {
    const int level = static_cast<int>(std::lround(std::clamp(mean[c], 0.0, 1.0) * (bins - 1)));
    idx = idx * bins + level;
  }
  return idx;
}

int MeanActionBuckets::bucket_of_actions(std::span<const int> neighbor_actions) const {
  if (n_neighbors == 0) return 0;
  std::vector<double> mean(n_actions, 0.0);
  for (int a : neighbor_actions) mean.at(a) += 1.0;
  for (double& m : mean) m /= static_cast<double>(neighbor_actions.size());
  return bucket(mean);
}

std::vector<int> MeanActionBuckets::reachable() const {
  if (n_neighbors == 0) return {0};
  std::set<int> out;
  std::vector<int> profile(n_neighbors, 0);
  while (true) {
    out.insert(bucket_of_actions(profile));
    int i = 0;
    while (i < n_neighbors && ++profile[i] == n_actions) profile[i++] = 0;
    if (i == n_neighbors) break;
  }
  return {out.begin(), out.end()};
}

TabularDoubleQ::TabularDoubleQ(int agents, int states, int actions, int buckets)
    : n_agents(agents), n_states(states), n_actions(actions), n_buckets(buckets) {
  const std::size_t size = static_cast<std::size_t>(states) * actions * buckets;
  table_a.assign(agents, std::vector<double>(size, 0.0));
  table_b = table_a;
  count_a.assign(agents, std::vector<std::int64_t>(size, 0));
  count_b = count_a;
}

void double_q_update(TabularDoubleQ& q, int agent, const TabularTransition& t, double alpha,
                     double gamma, Table which, std::span<const int> bootstrap_buckets) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ContractError("learning rate must lie in [0, 1]");
  if (bootstrap_buckets.empty()) throw ContractError("no bootstrap mean action");
  auto& upd = which == Table::A ? q.table_a[agent] : q.table_b[agent];
  const auto& other = which == Table::A ? q.table_b[agent] : q.table_a[agent];
  std::size_t best = q.index(t.next_state, 0, bootstrap_buckets[0]);
  for (int a = 0; a < q.n_actions; ++a) {
    for (int b : bootstrap_buckets) {
      const std::size_t i = q.index(t.next_state, a, b);
      if (upd[i] > upd[best]) best = i;
    }
  }
  double& entry = upd[q.index(t.state, t.action, t.bucket)];
  entry = (1.0 - alpha) * entry + alpha * (t.reward + gamma * other[best]);
}

Table double_q_update(TabularDoubleQ& q, int agent, const TabularTransition& t, double alpha,
                      double gamma, Rng& coin, std::span<const int> bootstrap_buckets) {
  const Table which = coin_flip(coin) ? Table::A : Table::B;
  double_q_update(q, agent, t, alpha, gamma, which, bootstrap_buckets);
  return which;
}

BootstrapMean bootstrap_from_string(std::string_view name) {
  if (name == "current") return BootstrapMean::Current;
  if (name == "next") return BootstrapMean::NextObserved;
  if (name == "stage_optimum") return BootstrapMean::StageOptimum;
  throw ConfigError("tabular.bootstrap",
                    "unknown bootstrap '" + std::string(name) + "' (current, next, stage_optimum)");
}

double LearningRateSchedule::rate(std::int64_t n) const {
  switch (kind) {
    case Kind::InverseCount:
      return 1.0 / static_cast<double>(std::max<std::int64_t>(n, 1));
    case Kind::Polynomial:
      return 1.0 / std::pow(static_cast<double>(std::max<std::int64_t>(n, 1)), exponent);
    case Kind::Constant:
      return value;
  }
  return value;
}

bool LearningRateSchedule::robbins_monro() const {
  switch (kind) {
    case Kind::InverseCount:
      return true;
    case Kind::Polynomial:
      return exponent > 0.5 && exponent <= 1.0;
    case Kind::Constant:
      return false;
  }
  return false;
}

double ExplorationSchedule::epsilon(std::int64_t visits) const {
  if (visits <= 1) return std::min(1.0, initial);
  return std::min(1.0, initial / std::pow(static_cast<double>(visits), exponent));
}

bool ExplorationSchedule::glie() const { return initial > 0.0 && exponent > 0.0 && exponent <= 1.0; }

TraceRow measure(const TabularDoubleQ& q, const JointQ& oracle, const StochasticGame& game,
                 const MeanActionBuckets& buckets) {
  TraceRow row;
  std::vector<int> others;
  for (int s = 0; s < game.n_states; ++s) {
    for (int j = 0; j < game.n_joint_actions(); ++j) {
      const auto actions = game.joint_actions(j);
      for (int k = 0; k < game.n_agents; ++k) {
        others.clear();
        for (int l = 0; l < game.n_agents; ++l) {
          if (l != k) others.push_back(actions[l]);
        }
        const int b = buckets.bucket_of_actions(others);
        const double qa = q.a(k, s, actions[k], b);
        const double qb = q.b(k, s, actions[k], b);
        row.err_a = std::max(row.err_a, std::abs(qa - oracle[s][j]));
        row.err_b = std::max(row.err_b, std::abs(qb - oracle[s][j]));
        row.gap_ab = std::max(row.gap_ab, std::abs(qa - qb));
      }
    }
  }
  return row;
}

ConvergenceResult run_convergence_experiment(const StochasticGame& game,
                                             const ConvergenceConfig& config) {
  ConvergenceResult result;
  result.oracle = value_iteration_oracle(game, true);
  if (!config.learning_rate.robbins_monro()) {
    result.warnings.push_back("learning-rate schedule violates the Robbins-Monro conditions");
  }
  if (!config.exploration.glie()) {
    result.warnings.push_back("exploration schedule is not greedy in the limit with infinite exploration");
  }
  if (config.n_updates < 0 || config.trace_every < 1) {
    throw ConfigError("tabular.updates", "update count must be >= 0 and trace interval >= 1");
  }

  const MeanActionBuckets buckets{game.n_actions, config.mean_bins, game.n_agents - 1};
  const auto reachable = buckets.reachable();
  TabularDoubleQ& q = result.q;
  q = TabularDoubleQ(game.n_agents, game.n_states, game.n_actions, buckets.count());

  Rng env_rng = make_rng(config.seed, "sim");
  Rng explore_rng = make_rng(config.seed, "exploration");
  Rng coin = make_rng(config.seed, "coin");
  std::vector<std::int64_t> state_visits(game.n_states, 0);

  auto behave = [&](int s) {
    const double eps = config.exploration.epsilon(++state_visits[s]);
    std::vector<int> actions(game.n_agents);
    for (int k = 0; k < game.n_agents; ++k) {
      if (uniform01(explore_rng) < eps) {
        actions[k] = uniform_int(explore_rng, 0, game.n_actions - 1);
        continue;
      }
      double best = -std::numeric_limits<double>::infinity();
      for (int a = 0; a < game.n_actions; ++a) {
        for (int b : reachable) {
          const double v = q.a(k, s, a, b) + q.b(k, s, a, b);
          if (v > best) {
            best = v;
            actions[k] = a;
          }
        }
      }
    }
    return actions;
  };
  auto sample_next = [&](int s, int joint) {
    const auto& row = game.transition[s][joint];
    return static_cast<int>(std::discrete_distribution<int>(row.begin(), row.end())(env_rng));
  };

  int state = 0;
  auto actions = behave(state);
  std::vector<int> others, next_others;
  for (std::int64_t t = 1; t <= config.n_updates; ++t) {
    const int joint = game.joint_index(actions);
    const int next_state = sample_next(state, joint);
    std::vector<double> rewards(game.n_agents);
    for (int k = 0; k < game.n_agents; ++k) {
      rewards[k] = game.reward[k][state][joint];
      if (game.reward_noise > 0.0) {
        rewards[k] += game.reward_noise * (2.0 * uniform01(env_rng) - 1.0);
      }
    }
    const auto next_actions = behave(next_state);
    for (int k = 0; k < game.n_agents; ++k) {
      others.clear();
      next_others.clear();
      for (int l = 0; l < game.n_agents; ++l) {
        if (l == k) continue;
        others.push_back(actions[l]);
        next_others.push_back(next_actions[l]);
      }
      TabularTransition tr{state, actions[k], buckets.bucket_of_actions(others), rewards[k], next_state};
      std::vector<int> boot;
      switch (config.bootstrap) {
        case BootstrapMean::Current:
          boot = {tr.bucket};
          break;
        case BootstrapMean::NextObserved:
          boot = {buckets.bucket_of_actions(next_others)};
          break;
        case BootstrapMean::StageOptimum:
          boot = reachable;
          break;
      }
      const std::size_t entry = q.index(tr.state, tr.action, tr.bucket);
      const Table which = coin_flip(coin) ? Table::A : Table::B;
      auto& counts = which == Table::A ? q.count_a[k] : q.count_b[k];
      const double alpha = config.learning_rate.rate(++counts[entry]);
      double_q_update(q, k, tr, alpha, game.gamma, which, boot);
      const auto& table = which == Table::A ? q.table_a[k] : q.table_b[k];
      result.max_abs_q = std::max(result.max_abs_q, std::abs(table[entry]));
    }
    state = next_state;
    actions = next_actions;
    if (t % config.trace_every == 0 || t == config.n_updates) {
      TraceRow row = measure(q, result.oracle, game, buckets);
      row.update = t;
      result.trace.push_back(row);
    }
  }
  return result;
}

std::string trace_csv(std::span<const TraceRow> trace) {
  CsvWriter csv({"update_index", "err_a", "err_b", "gap_ab"});
  for (const auto& r : trace) {
    csv.row({std::to_string(r.update), format_double(r.err_a), format_double(r.err_b),
             format_double(r.gap_ab)});
  }
  return csv.str();
}

}  // namespace codql::tabular
