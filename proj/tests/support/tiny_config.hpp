#pragma once

#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>

#include "codql/experiment_config.hpp"

namespace codql::test {

/// A 2x2 grid and a small network: trains in well under a second.
inline harness::ExperimentConfig tiny_config(std::uint64_t seed = 1) {
  auto c = harness::load_experiment_config("", {});
  c.rng_seed = seed;
  c.sim.rng_seed = seed;
  c.sim.grid_rows = 2;
  c.sim.grid_cols = 2;
  c.sim.travel_time = 2;
  c.sim.spawn_rate = 2;
  c.sim.route_len_max = 4;
  c.sim.lane_capacity = 8;
  c.sim.initial_vehicles = 6;
  c.learner.hidden = {8};
  c.learner.batch_size = 16;
  c.learner.replay_capacity = 2000;
  c.learner.min_buffer_before_training = 16;
  c.learner.updates_per_episode = 3;
  c.learner.reward_scale = 0.05;
  c.n_train_episodes = 4;
  c.episode_horizon = 10;
  c.checkpoint_every = 2;
  c.best_window = 2;
  c.n_seed_snapshots = 2;
  c.seed_warmup_steps = 20;
  c.seed_spacing = 5;
  c.eval_episodes = 4;
  return c;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() /
                   ("codql_test_" + name + "_" + std::to_string(std::random_device{}()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace codql::test
