#include "codql/replay_buffer.hpp"

#include "codql/errors.hpp"

namespace codql::agents {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw ConfigError("learner.replay_capacity", "must be >= 1");
}

void ReplayBuffer::push(const ReplayRecord& record) {
  if (records_.size() < capacity_) {
    records_.push_back(record);
  } else {
    records_[cursor_] = record;
  }
  cursor_ = (cursor_ + 1) % capacity_;
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t n, Rng& rng) const {
  if (records_.empty()) throw ContractError("cannot sample from an empty replay buffer");
  std::uniform_int_distribution<std::size_t> pick(0, records_.size() - 1);
  std::vector<std::size_t> out(n);
  for (auto& i : out) i = pick(rng);
  return out;
}

}  // namespace codql::agents
