#pragma once

// Training, evaluation and comparison runs over the traffic grid.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "codql/checkpoint.hpp"
#include "codql/env.hpp"
#include "codql/experiment_config.hpp"
#include "codql/grid_sim.hpp"
#include "codql/learner.hpp"

namespace codql::harness {

/// Seed snapshots named by the config, or generated from its sim section.
std::vector<sim::SimSnapshot> seed_snapshots(const ExperimentConfig& config);

/// Chooses a joint action from the current shared states and decision-time
/// mean actions. Implementations must be safe to call concurrently.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::vector<int> act(std::span<const env::JointObs> obs,
                               std::span<const env::MeanAction> means, Rng& rng) const = 0;
};

/// Argmax of the learner's online network; no exploration bonus.
class GreedyPolicy : public Policy {
 public:
  explicit GreedyPolicy(const agents::Learner& learner) : learner_(learner) {}
  std::vector<int> act(std::span<const env::JointObs> obs, std::span<const env::MeanAction> means,
                       Rng& rng) const override;

 private:
  const agents::Learner& learner_;
};

/// Independent uniform phase per agent.
class RandomPolicy : public Policy {
 public:
  std::vector<int> act(std::span<const env::JointObs> obs, std::span<const env::MeanAction> means,
                       Rng& rng) const override;
};

struct EpisodeStats {
  /// Raw per-step rewards averaged over agents, transitions and Δt.
  double mean_reward = 0;
  /// Delayed vehicle-steps accrued in the episode per vehicle present.
  double average_delay = 0;
  std::int64_t arrived = 0;
  std::int64_t dropped = 0;
  std::int64_t delay = 0;
  std::int64_t vehicles = 0;  // live at the start plus those that entered
  /// Sum of all agents' rewards at each simulator step.
  std::vector<double> step_rewards;
};

/// Runs `horizon` Markov transitions from `state` under `policy`.
EpisodeStats run_episode(sim::SimState state, const ExperimentConfig& config,
                         const env::Topology& topology, const Policy& policy, Rng& policy_rng);

struct Metrics {
  int episodes = 0;
  double mean_episode_reward = 0;
  double mean_episode_reward_std = 0;
  double average_delay_time = 0;
  double average_delay_time_std = 0;
  std::int64_t arrived = 0;  // summed over episodes
  std::int64_t dropped = 0;
  bool operator==(const Metrics&) const = default;
};

/// Means, sample standard deviations and totals.
Metrics aggregate(std::span<const EpisodeStats> episodes);

/// Evaluation episode i starts from snapshot i mod n with the simulator
/// reseeded from the "eval" stream, so every policy sees the same traffic.
/// Episodes are spread over `jobs` threads; results do not depend on it.
std::vector<EpisodeStats> evaluate_episodes(const Policy& policy, const ExperimentConfig& config,
                                            std::span<const sim::SimSnapshot> seeds, int jobs = 1);

Metrics evaluate(const agents::Learner& learner, const ExperimentConfig& config,
                 std::span<const sim::SimSnapshot> seeds, int jobs = 1);
Metrics evaluate_random(const ExperimentConfig& config, std::span<const sim::SimSnapshot> seeds,
                        int jobs = 1);

struct TrainingRow {
  int episode = 0;  // 1-based
  double mean_episode_reward = 0;
  double loss = 0;
  std::size_t buffer_fill = 0;
  int updates = 0;
  double explore_fraction = 0;  // agents acting off their greedy choice
};

struct TrainResult {
  std::vector<TrainingRow> rows;
  /// Best trailing-window mean reward and the episode it ended at (0: none).
  double best_window_mean = 0;
  int best_episode = 0;
  std::optional<Checkpoint> best;
  std::optional<Checkpoint> final;
};

/// Trailing mean of the last `window` values ending at index `end` (inclusive).
double trailing_mean(std::span<const double> values, std::size_t end, int window);

/// Runs the training loop. With a non-empty `out_dir` it writes config.toml,
/// training.csv, checkpoints/episode_<n>.ckpt every checkpoint_every
/// episodes, best.ckpt and final.ckpt. Progress goes to `log` if given.
/// A non-finite loss throws NumericError naming the episode.
TrainResult train(const ExperimentConfig& config, const std::filesystem::path& out_dir,
                  std::ostream* log = nullptr);

/// Per-episode mean reward of a uniformly random policy replaying the
/// training schedule: same start snapshots and simulator reseeds.
std::vector<double> random_training_baseline(const ExperimentConfig& config);

std::string training_csv(std::span<const TrainingRow> rows);
/// method,average_delay_time,average_delay_time_std,mean_episode_reward,
/// mean_episode_reward_std,arrived,dropped,episodes
std::string metrics_csv_header();
std::string metrics_csv_row(const std::string& label, const Metrics& m);
/// episode,mean_episode_reward,average_delay_time,arrived,dropped
std::string episodes_csv(std::span<const EpisodeStats> episodes);

struct CompareEntry {
  std::string label;
  Checkpoint checkpoint;
};

struct CompareRow {
  std::string label;
  std::string algorithm;
  Metrics metrics;
  int rank = 0;  // 1 = lowest average delay
};

/// Evaluates every entry on the same seeds and ranks by average delay,
/// ties broken by higher reward, then label. Rows come back in rank order.
std::vector<CompareRow> compare(std::span<const CompareEntry> entries,
                                const ExperimentConfig& config,
                                std::span<const sim::SimSnapshot> seeds, int jobs = 1);
std::string compare_csv(std::span<const CompareRow> rows);

}  // namespace codql::harness
