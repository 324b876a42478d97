#include "codql/env.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "codql/errors.hpp"

namespace codql::env {

namespace {

void check_agent(const Topology& t, int k) {
  if (k < 0 || k >= t.n_agents) throw ContractError("agent index out of range");
  if (t.neighbors[k].empty()) {
    throw ContractError("agent " + std::to_string(k) + " has no neighbors");
  }
}

}  // namespace

TopologyMode topology_mode_from_string(std::string_view name) {
  if (name == "all") return TopologyMode::All;
  if (name == "adjacent4") return TopologyMode::Adjacent4;
  throw ConfigError("env.topology", "unknown topology '" + std::string(name) + "'");
}

std::string_view to_string(TopologyMode mode) {
  return mode == TopologyMode::All ? "all" : "adjacent4";
}

Topology Topology::all(int n_agents) {
  Topology t;
  t.n_agents = n_agents;
  t.mode = TopologyMode::All;
  t.neighbors.resize(n_agents);
  for (int k = 0; k < n_agents; ++k) {
    for (int l = 0; l < n_agents; ++l) {
      if (l != k) t.neighbors[k].push_back(l);
    }
  }
  return t;
}

Topology Topology::adjacent4(int rows, int cols) {
  Topology t;
  t.n_agents = rows * cols;
  t.mode = TopologyMode::Adjacent4;
  t.neighbors.resize(t.n_agents);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      auto& nb = t.neighbors[r * cols + c];
      if (r > 0) nb.push_back((r - 1) * cols + c);
      if (r + 1 < rows) nb.push_back((r + 1) * cols + c);
      if (c > 0) nb.push_back(r * cols + c - 1);
      if (c + 1 < cols) nb.push_back(r * cols + c + 1);
    }
  }
  return t;
}

Topology Topology::build(TopologyMode mode, const sim::SimConfig& config) {
  return mode == TopologyMode::All ? all(config.n_intersections())
                                   : adjacent4(config.grid_rows, config.grid_cols);
}

MeanAction uniform_mean_action(int n_actions) {
  return {std::vector<double>(n_actions, 1.0 / n_actions)};
}

MeanAction mean_action(std::span<const int> actions, const Topology& topology, int k,
                       int n_actions) {
  if (static_cast<int>(actions.size()) != topology.n_agents) {
    throw ContractError("action vector length does not match agent count");
  }
  check_agent(topology, k);
  MeanAction m{std::vector<double>(n_actions, 0.0)};
  const auto& nb = topology.neighbors[k];
  for (int l : nb) {
    const int a = actions[l];
    if (a < 0 || a >= n_actions) throw ContractError("action out of range");
    m.dist[a] += 1.0;
  }
  for (double& p : m.dist) p /= static_cast<double>(nb.size());
  return m;
}

double RewardShare::weight(const Topology& topology, int k) const {
  if (alpha) return *alpha;
  const auto n = topology.neighbors[k].size();
  return n == 0 ? 0.0 : 1.0 / static_cast<double>(n);
}

void RewardShare::validate() const {
  if (alpha && !(*alpha >= 0.0 && *alpha <= 1.0)) {
    throw ConfigError("learner.alpha_reward", "must lie in [0, 1]");
  }
}

std::vector<double> reallocate_rewards(std::span<const double> rewards, const Topology& topology,
                                       const RewardShare& share) {
  share.validate();
  if (static_cast<int>(rewards.size()) != topology.n_agents) {
    throw ContractError("reward vector length does not match agent count");
  }
  std::vector<double> out(rewards.begin(), rewards.end());
  for (int k = 0; k < topology.n_agents; ++k) {
    const double w = share.weight(topology, k);
    if (w == 0.0) continue;
    double sum = 0.0;
    for (int l : topology.neighbors[k]) sum += rewards[l];
    out[k] += w * sum;
  }
  return out;
}

JointObs shared_state(std::span<const Observation> observations, const Topology& topology, int k) {
  if (static_cast<int>(observations.size()) != topology.n_agents) {
    throw ContractError("observation count does not match agent count");
  }
  check_agent(topology, k);
  JointObs j;
  j.own = observations[k];
  for (int l : topology.neighbors[k]) {
    for (int d = 0; d < sim::kNumDirections; ++d) j.neighbor_mean[d] += observations[l][d];
  }
  const double n = static_cast<double>(topology.neighbors[k].size());
  for (double& v : j.neighbor_mean) v /= n;
  return j;
}

std::vector<JointObs> shared_states(std::span<const Observation> observations,
                                    const Topology& topology) {
  std::vector<JointObs> out(topology.n_agents);
  for (int k = 0; k < topology.n_agents; ++k) out[k] = shared_state(observations, topology, k);
  return out;
}

MarkovOutcome markov_step(sim::SimState& state, std::span<const int> joint_action, int dt,
                          const Topology& topology, const RewardShare& share) {
  if (dt != state.config.action_interval) {
    throw ContractError("dt must equal the simulator action interval");
  }
  if (topology.n_agents != state.n_intersections()) {
    throw ContractError("topology does not match the grid");
  }
  const int n = topology.n_agents;
  const auto before = observe_queues(state);
  std::vector<double> summed(n, 0.0);
  MarkovOutcome out;
  for (int t = 0; t < dt; ++t) {
    const auto s = sim::step(state, joint_action);
    double total = 0.0;
    for (int k = 0; k < n; ++k) {
      summed[k] += s.rewards[k];
      total += s.rewards[k];
    }
    out.step_reward_totals.push_back(total);
    out.arrivals += s.arrivals;
    out.spawned += s.spawned;
    out.dropped += s.dropped;
    out.delay += s.delay;
  }
  out.next_observations = observe_queues(state);
  const auto shared = reallocate_rewards(summed, topology, share);
  out.transitions.resize(n);
  for (int k = 0; k < n; ++k) {
    EnvTransition& tr = out.transitions[k];
    tr.obs = shared_state(before, topology, k);
    tr.action = joint_action[k];
    tr.reward = summed[k];
    tr.shared_reward = shared[k];
    tr.next_obs = shared_state(out.next_observations, topology, k);
    tr.mean_action = mean_action(joint_action, topology, k);
  }
  return out;
}

double episode_return(std::span<const std::vector<double>> transition_rewards, double gamma,
                      int dt) {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("learner.gamma", "must lie in [0, 1)");
  if (dt < 1) throw ContractError("dt must be >= 1");
  double total = 0.0;
  double discount = 1.0;
  for (const auto& rewards : transition_rewards) {
    if (!rewards.empty()) {
      const double mean =
          std::accumulate(rewards.begin(), rewards.end(), 0.0) / static_cast<double>(rewards.size());
      total += discount * mean / dt;
    }
    discount *= gamma;
  }
  return total;
}

}  // namespace codql::env
