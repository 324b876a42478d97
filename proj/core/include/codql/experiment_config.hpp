#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "codql/config.hpp"
#include "codql/env.hpp"
#include "codql/grid_sim.hpp"
#include "codql/learner.hpp"

namespace codql::harness {

inline constexpr int kConfigSchemaVersion = 1;

/// Everything a train/evaluate run depends on. File layout:
///
///   schema = 1
///   seed = 7
///   [sim]      grid_rows, grid_cols, travel_time, spawn_rate, route_len_min,
///              route_len_max, lane_capacity, initial_vehicles,
///              action_interval, scenario
///   [env]      topology ("all" | "adjacent4")
///   [learner]  algorithm, gamma, lr, batch_size, tau, alpha_reward,
///              replay_capacity, min_buffer, updates_per_episode,
///              reward_scale, hidden, relu_output
///   [train]    episodes, horizon, checkpoint_every, best_window
///   [seeds]    path, count, warmup_steps, spacing
///   [eval]     episodes
struct ExperimentConfig {
  sim::SimConfig sim;
  agents::LearnerConfig learner;
  env::TopologyMode topology = env::TopologyMode::All;
  int n_train_episodes = 200;
  int episode_horizon = 200;  // Markov transitions
  int checkpoint_every = 50;  // 0 disables periodic checkpoints
  int best_window = 50;
  std::string seed_snapshots;  // empty: generate from the sim config
  int n_seed_snapshots = 10;
  int seed_warmup_steps = 400;
  int seed_spacing = 100;
  int eval_episodes = 100;
  std::uint64_t rng_seed = 0;

  void validate() const;

  /// Reads every known key; unknown keys throw ConfigError.
  static ExperimentConfig from_kv(const KeyValueConfig& kv);
  /// Fully resolved config, defaults included.
  KeyValueConfig to_kv() const;
  std::string to_text() const { return to_kv().to_text(); }
  /// FNV-1a of to_text().
  std::uint64_t digest() const;
};

/// Parses `path` (if non-empty), then applies `overrides` in order.
ExperimentConfig load_experiment_config(const std::filesystem::path& path,
                                        const std::vector<std::string>& overrides);

}  // namespace codql::harness
