#include "codql/learner.hpp"

#include <algorithm>
#include <cctype>
#include <string>

#include "codql/errors.hpp"

namespace codql::agents {

namespace {

Eigen::MatrixXd encode_records(const Batch& batch, const FeatureEncoder& enc, bool next) {
  Eigen::MatrixXd x(enc.width(), static_cast<Eigen::Index>(batch.size()));
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const ReplayRecord& r = *batch[i];
    const auto& obs = next ? r.next_obs : r.obs;
    const auto& mean = next ? r.next_mean_action : r.mean_action;
    enc.encode(obs, mean, r.agent, x.col(static_cast<Eigen::Index>(i)).data());
  }
  return x;
}

std::vector<double> double_q(const Batch& batch, const nn::QNetParams& online,
                             const nn::QNetParams& target, double gamma,
                             const FeatureEncoder& enc, double scale, bool shared_reward) {
  const Eigen::MatrixXd x = encode_records(batch, enc, true);
  const Eigen::MatrixXd q_online = nn::forward_batch(online, x);
  const Eigen::MatrixXd q_target = nn::forward_batch(target, x);
  std::vector<double> y(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto col = static_cast<Eigen::Index>(i);
    Eigen::Index best = 0;
    q_online.col(col).maxCoeff(&best);
    const double r = shared_reward ? batch[i]->shared_reward : batch[i]->reward;
    y[i] = scale * r + gamma * q_target(best, col);
  }
  return y;
}

}  // namespace

std::string_view to_string(Algorithm a) {
  switch (a) {
    case Algorithm::CoDQL:
      return "codql";
    case Algorithm::IDQL:
      return "idql";
    case Algorithm::IQL:
      return "iql";
  }
  return "unknown";
}

Algorithm algorithm_from_string(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  std::erase(lower, '-');
  if (lower == "codql") return Algorithm::CoDQL;
  if (lower == "idql") return Algorithm::IDQL;
  if (lower == "iql") return Algorithm::IQL;
  throw ConfigError("learner.algorithm", "unknown algorithm '" + std::string(name) + "'");
}

void LearnerConfig::validate() const {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("learner.gamma", "must lie in [0, 1)");
  if (!(lr > 0.0)) throw ConfigError("learner.lr", "must be > 0");
  if (batch_size < 1) throw ConfigError("learner.batch_size", "must be >= 1");
  if (replay_capacity < 1) throw ConfigError("learner.replay_capacity", "must be >= 1");
  if (static_cast<std::size_t>(batch_size) > replay_capacity) {
    throw ConfigError("learner.batch_size", "must not exceed replay_capacity");
  }
  if (!(tau > 0.0 && tau <= 1.0)) throw ConfigError("learner.tau", "must lie in (0, 1]");
  if (alpha_reward && !(*alpha_reward >= 0.0 && *alpha_reward <= 1.0)) {
    throw ConfigError("learner.alpha_reward", "must lie in [0, 1]");
  }
  if (min_buffer_before_training < 1) {
    throw ConfigError("learner.min_buffer", "must be >= 1");
  }
  if (updates_per_episode < 0) throw ConfigError("learner.updates_per_episode", "must be >= 0");
  if (!(reward_scale > 0.0)) throw ConfigError("learner.reward_scale", "must be > 0");
  for (int h : hidden) {
    if (h < 1) throw ConfigError("learner.hidden", "layer widths must be >= 1");
  }
}

FeatureEncoder::FeatureEncoder(Algorithm algorithm, int n_agents, int lane_capacity)
    : uses_shared_state_(algorithm == Algorithm::CoDQL),
      uses_mean_action_(algorithm == Algorithm::CoDQL),
      n_agents_(n_agents),
      inv_capacity_(1.0 / lane_capacity) {
  if (n_agents < 1) throw ContractError("need at least one agent");
  if (lane_capacity < 1) throw ContractError("lane capacity must be >= 1");
}

void FeatureEncoder::encode(const env::JointObs& obs, std::span<const double> mean_action,
                            int agent, double* out) const {
  if (agent < 0 || agent >= n_agents_) throw ContractError("agent index out of range");
  for (int d = 0; d < sim::kNumDirections; ++d) *out++ = obs.own[d] * inv_capacity_;
  if (uses_shared_state_) {
    for (int d = 0; d < sim::kNumDirections; ++d) *out++ = obs.neighbor_mean[d] * inv_capacity_;
  }
  if (uses_mean_action_) {
    if (static_cast<int>(mean_action.size()) != sim::kNumPhases) {
      throw ContractError("mean action has the wrong width");
    }
    for (double p : mean_action) *out++ = p;
  }
  for (int k = 0; k < n_agents_; ++k) *out++ = k == agent ? 1.0 : 0.0;
}

std::vector<double> codql_target(const Batch& batch, const nn::QNetParams& online,
                                 const nn::QNetParams& target, double gamma,
                                 const FeatureEncoder& encoder, double reward_scale) {
  return double_q(batch, online, target, gamma, encoder, reward_scale, true);
}

std::vector<double> idql_target(const Batch& batch, const nn::QNetParams& online,
                                const nn::QNetParams& target, double gamma,
                                const FeatureEncoder& encoder, double reward_scale) {
  return double_q(batch, online, target, gamma, encoder, reward_scale, false);
}

std::vector<double> iql_target(const Batch& batch, const nn::QNetParams& target, double gamma,
                               const FeatureEncoder& encoder, double reward_scale) {
  const Eigen::MatrixXd q = nn::forward_batch(target, encode_records(batch, encoder, true));
  std::vector<double> y(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    y[i] = reward_scale * batch[i]->reward + gamma * q.col(static_cast<Eigen::Index>(i)).maxCoeff();
  }
  return y;
}

Learner::Learner(const LearnerConfig& config, int n_agents, int lane_capacity,
                 std::uint64_t init_seed)
    : config_(config),
      n_agents_(n_agents),
      lane_capacity_(lane_capacity),
      encoder_(config.algorithm, n_agents, lane_capacity),
      ucb_(n_agents, sim::kNumPhases) {
  config_.validate();
  nn::NetSpec spec{encoder_.width(), config.hidden, sim::kNumPhases, config.relu_output};
  Rng rng(init_seed);
  online_ = nn::init_params(spec, rng);
  target_ = online_;
}

void Learner::load(nn::QNetParams online, nn::QNetParams target, std::optional<UcbCounts> ucb) {
  if (!(online.spec == online_.spec) || !(target.spec == online_.spec)) {
    throw FormatError("network shape does not match the learner configuration");
  }
  if (ucb && (ucb->n_agents() != n_agents_ || ucb->n_actions() != sim::kNumPhases)) {
    throw FormatError("ucb table does not match the agent count");
  }
  online_ = std::move(online);
  target_ = std::move(target);
  ucb_ = ucb ? std::move(*ucb) : UcbCounts(n_agents_, sim::kNumPhases);
}

Eigen::MatrixXd Learner::q_values(std::span<const env::JointObs> obs,
                                  std::span<const env::MeanAction> means) const {
  if (static_cast<int>(obs.size()) != n_agents_ || static_cast<int>(means.size()) != n_agents_) {
    throw ContractError("observation or mean-action count does not match agent count");
  }
  Eigen::MatrixXd x(encoder_.width(), n_agents_);
  for (int k = 0; k < n_agents_; ++k) encoder_.encode(obs[k], means[k].dist, k, x.col(k).data());
  return nn::forward_batch(online_, x);
}

std::vector<int> Learner::explore_actions(std::span<const env::JointObs> obs,
                                          std::span<const env::MeanAction> means, Rng& rng,
                                          int* exploratory) {
  const Eigen::MatrixXd q = q_values(obs, means);
  std::vector<int> actions(n_agents_);
  int off_greedy = 0;
  for (int k = 0; k < n_agents_; ++k) {
    const std::span<const double> col(q.col(k).data(), static_cast<std::size_t>(q.rows()));
    UcbEntry& e = ucb_.entry(k, ucb_state_key(obs[k].own, lane_capacity_));
    actions[k] = ucb_select(col, e, true, rng);
    if (actions[k] != argmax(col)) ++off_greedy;
  }
  if (exploratory) *exploratory = off_greedy;
  return actions;
}

std::vector<int> Learner::greedy_actions(std::span<const env::JointObs> obs,
                                         std::span<const env::MeanAction> means) const {
  const Eigen::MatrixXd q = q_values(obs, means);
  std::vector<int> actions(n_agents_);
  for (int k = 0; k < n_agents_; ++k) {
    actions[k] = argmax({q.col(k).data(), static_cast<std::size_t>(q.rows())});
  }
  return actions;
}

std::vector<double> Learner::targets(const Batch& batch) const {
  switch (config_.algorithm) {
    case Algorithm::CoDQL:
      return codql_target(batch, online_, target_, config_.gamma, encoder_, config_.reward_scale);
    case Algorithm::IDQL:
      return idql_target(batch, online_, target_, config_.gamma, encoder_, config_.reward_scale);
    case Algorithm::IQL:
      return iql_target(batch, target_, config_.gamma, encoder_, config_.reward_scale);
  }
  throw ContractError("unknown algorithm");
}

Eigen::MatrixXd Learner::encode_batch(const Batch& batch, bool next) const {
  return encode_records(batch, encoder_, next);
}

LearnStats Learner::learn_episode(const ReplayBuffer& buffer, Rng& rng) {
  LearnStats stats;
  if (buffer.size() < config_.min_buffer_before_training) {
    stats.skipped = true;
    return stats;
  }
  double loss_sum = 0.0;
  Batch batch(config_.batch_size);
  std::vector<int> actions(config_.batch_size);
  for (int u = 0; u < config_.updates_per_episode; ++u) {
    const auto idx = buffer.sample_indices(config_.batch_size, rng);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      batch[i] = &buffer[idx[i]];
      actions[i] = batch[i]->action;
    }
    const auto y = targets(batch);
    loss_sum += nn::train_step(online_, encode_batch(batch, false), actions, y, config_.lr);
    ++stats.updates;
  }
  if (stats.updates > 0) nn::soft_update(target_, online_, config_.tau);
  if (stats.updates > 0) stats.loss_mean = loss_sum / stats.updates;
  return stats;
}

}  // namespace codql::agents
