#pragma once

// Learning-side view of the simulator: per-agent observations, neighbor
// sharing, mean actions, reward reallocation and Δt-step Markov transitions.

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "codql/grid_sim.hpp"

namespace codql::env {

enum class TopologyMode { All, Adjacent4 };

TopologyMode topology_mode_from_string(std::string_view name);
std::string_view to_string(TopologyMode mode);

struct Topology {
  int n_agents = 0;
  TopologyMode mode = TopologyMode::All;
  std::vector<std::vector<int>> neighbors;

  /// Every other agent is a neighbor.
  static Topology all(int n_agents);
  /// Grid-adjacent intersections only.
  static Topology adjacent4(int rows, int cols);
  static Topology build(TopologyMode mode, const sim::SimConfig& config);
};

using Observation = sim::QueueVector;

struct JointObs {
  Observation own{};
  std::array<double, sim::kNumDirections> neighbor_mean{};
  bool operator==(const JointObs&) const = default;
};

struct MeanAction {
  std::vector<double> dist;
  bool operator==(const MeanAction&) const = default;
};

inline constexpr int kJointObsWidth = 2 * sim::kNumDirections;

MeanAction uniform_mean_action(int n_actions = sim::kNumPhases);

/// Average one-hot action over the neighbors of `k`.
MeanAction mean_action(std::span<const int> actions, const Topology& topology, int k,
                       int n_actions = sim::kNumPhases);

/// Reward-sharing weight: a fixed alpha, or 1/|N(k)| when unset.
struct RewardShare {
  std::optional<double> alpha;
  double weight(const Topology& topology, int k) const;
  void validate() const;
};

/// r_k + alpha_k * sum of neighbor rewards.
std::vector<double> reallocate_rewards(std::span<const double> rewards, const Topology& topology,
                                       const RewardShare& share);

JointObs shared_state(std::span<const Observation> observations, const Topology& topology, int k);
std::vector<JointObs> shared_states(std::span<const Observation> observations,
                                    const Topology& topology);

/// One agent's view of a Markov transition.
struct EnvTransition {
  JointObs obs;
  int action = 0;
  double reward = 0;         // raw, summed over the Δt steps
  double shared_reward = 0;  // after reallocation
  JointObs next_obs;
  MeanAction mean_action;    // neighbors' actions in this transition
};

struct MarkovOutcome {
  std::vector<EnvTransition> transitions;  // one per agent
  std::vector<Observation> next_observations;
  std::vector<double> step_reward_totals;  // sum over agents, per simulator step
  int arrivals = 0;
  int spawned = 0;
  int dropped = 0;
  std::int64_t delay = 0;
};

/// Holds `joint_action` for `dt` simulator steps. `dt` must equal the
/// simulator's action_interval.
MarkovOutcome markov_step(sim::SimState& state, std::span<const int> joint_action, int dt,
                          const Topology& topology, const RewardShare& share);

/// Discounted sum over transitions of the agent-mean reward scaled by 1/dt.
/// `transition_rewards[T]` holds the per-agent rewards of transition T.
double episode_return(std::span<const std::vector<double>> transition_rewards, double gamma,
                      int dt);

}  // namespace codql::env
