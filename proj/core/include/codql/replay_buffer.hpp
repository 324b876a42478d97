#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "codql/env.hpp"
#include "codql/rng.hpp"

namespace codql::agents {

/// One agent's stored transition. The mean actions are the neighbors'
/// actions in this transition and in the following one; at the end of an
/// episode next_mean_action repeats mean_action.
struct ReplayRecord {
  int agent = 0;
  env::JointObs obs;
  int action = 0;
  double reward = 0;
  double shared_reward = 0;
  env::JointObs next_obs;
  std::array<double, sim::kNumPhases> mean_action{};
  std::array<double, sim::kNumPhases> next_mean_action{};
};

/// Fixed-capacity ring; once full, each push overwrites the oldest record.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(const ReplayRecord& record);

  std::size_t size() const { return records_.size(); }
  std::size_t capacity() const { return capacity_; }
  /// Slot the next push writes to.
  std::size_t cursor() const { return cursor_; }
  const ReplayRecord& operator[](std::size_t slot) const { return records_[slot]; }

  /// `n` slots drawn uniformly with replacement from the current contents.
  std::vector<std::size_t> sample_indices(std::size_t n, Rng& rng) const;

 private:
  std::size_t capacity_;
  std::size_t cursor_ = 0;
  std::vector<ReplayRecord> records_;
};

}  // namespace codql::agents
