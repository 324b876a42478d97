#pragma once

// Value-based learners sharing one Q-network across agents:
//   CoDQL - double estimators on shared state, mean action and reallocated reward
//   IDQL  - double estimators on the agent's own observation and raw reward
//   IQL   - single max estimator on the agent's own observation and raw reward

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "codql/env.hpp"
#include "codql/nn.hpp"
#include "codql/replay_buffer.hpp"
#include "codql/ucb.hpp"

namespace codql::agents {

enum class Algorithm : std::uint8_t { CoDQL = 0, IDQL = 1, IQL = 2 };

std::string_view to_string(Algorithm a);
/// Accepts "codql", "idql", "iql" (case-insensitive). Throws ConfigError.
Algorithm algorithm_from_string(std::string_view name);

struct LearnerConfig {
  Algorithm algorithm = Algorithm::CoDQL;
  double gamma = 0.95;
  double lr = 1e-4;
  int batch_size = 1024;
  double tau = 0.01;
  std::optional<double> alpha_reward;  // unset: 1/|N(k)|
  std::size_t replay_capacity = 500000;
  std::size_t min_buffer_before_training = 1024;
  int updates_per_episode = 50;
  // Multiplies rewards when forming regression targets.
  double reward_scale = 1.0;
  std::vector<int> hidden{128, 128};
  bool relu_output = false;

  void validate() const;
};

/// Maps (state, mean action, agent id) to the network input vector.
/// Queue counts are divided by lane capacity; the agent id is one-hot.
class FeatureEncoder {
 public:
  FeatureEncoder(Algorithm algorithm, int n_agents, int lane_capacity);

  int state_width() const { return uses_shared_state_ ? env::kJointObsWidth : sim::kNumDirections; }
  int mean_action_width() const { return uses_mean_action_ ? sim::kNumPhases : 0; }
  int embedding_width() const { return n_agents_; }
  int width() const { return state_width() + mean_action_width() + embedding_width(); }

  void encode(const env::JointObs& obs, std::span<const double> mean_action, int agent,
              double* out) const;

 private:
  bool uses_shared_state_;
  bool uses_mean_action_;
  int n_agents_;
  double inv_capacity_;
};

using Batch = std::vector<const ReplayRecord*>;

/// Y = r_hat + gamma * Q_target(s', argmax_a Q_online(s', a, mean'), mean').
std::vector<double> codql_target(const Batch& batch, const nn::QNetParams& online,
                                 const nn::QNetParams& target, double gamma,
                                 const FeatureEncoder& encoder, double reward_scale = 1.0);
/// As codql_target on the own observation and raw reward.
std::vector<double> idql_target(const Batch& batch, const nn::QNetParams& online,
                                const nn::QNetParams& target, double gamma,
                                const FeatureEncoder& encoder, double reward_scale = 1.0);
/// Y = r + gamma * max_a Q_target(s', a).
std::vector<double> iql_target(const Batch& batch, const nn::QNetParams& target, double gamma,
                               const FeatureEncoder& encoder, double reward_scale = 1.0);

struct LearnStats {
  bool skipped = false;
  int updates = 0;
  double loss_mean = 0;
};

class Learner {
 public:
  Learner(const LearnerConfig& config, int n_agents, int lane_capacity, std::uint64_t init_seed);

  const LearnerConfig& config() const { return config_; }
  const FeatureEncoder& encoder() const { return encoder_; }
  nn::NetSpec net_spec() const { return online_.spec; }
  int n_agents() const { return n_agents_; }
  int lane_capacity() const { return lane_capacity_; }

  const nn::QNetParams& online() const { return online_; }
  const nn::QNetParams& target() const { return target_; }
  const UcbCounts& ucb() const { return ucb_; }
  /// Replaces parameters, e.g. from a checkpoint. Shapes must match.
  void load(nn::QNetParams online, nn::QNetParams target, std::optional<UcbCounts> ucb);

  /// Q-values for every agent, one column each.
  Eigen::MatrixXd q_values(std::span<const env::JointObs> obs,
                           std::span<const env::MeanAction> means) const;

  /// UCB selection; updates visit counts. `exploratory` (optional) receives
  /// how many agents chose an action other than their greedy one.
  std::vector<int> explore_actions(std::span<const env::JointObs> obs,
                                   std::span<const env::MeanAction> means, Rng& rng,
                                   int* exploratory = nullptr);
  std::vector<int> greedy_actions(std::span<const env::JointObs> obs,
                                  std::span<const env::MeanAction> means) const;

  /// Regression targets under this learner's rule.
  std::vector<double> targets(const Batch& batch) const;

  /// updates_per_episode minibatch steps, then one soft target update.
  /// Skipped when the buffer holds fewer than
  /// min_buffer_before_training records.
  LearnStats learn_episode(const ReplayBuffer& buffer, Rng& rng);

 private:
  Eigen::MatrixXd encode_batch(const Batch& batch, bool next) const;

  LearnerConfig config_;
  int n_agents_;
  int lane_capacity_;
  FeatureEncoder encoder_;
  nn::QNetParams online_;
  nn::QNetParams target_;
  UcbCounts ucb_;
};

}  // namespace codql::agents
