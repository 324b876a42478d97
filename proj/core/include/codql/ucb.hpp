#pragma once

#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "codql/binary_io.hpp"
#include "codql/env.hpp"
#include "codql/rng.hpp"

namespace codql::agents {

/// Visit counts for one discretized state. visits == sum(action_counts).
struct UcbEntry {
  std::int64_t visits = 0;
  std::vector<std::int64_t> action_counts;
  bool operator==(const UcbEntry&) const = default;
};

/// Per-agent visit tables keyed by discretized own observation.
class UcbCounts {
 public:
  UcbCounts() = default;
  UcbCounts(int n_agents, int n_actions);

  UcbEntry& entry(int agent, std::uint64_t key);
  const UcbEntry* find(int agent, std::uint64_t key) const;

  int n_agents() const { return static_cast<int>(tables_.size()); }
  int n_actions() const { return n_actions_; }
  std::size_t n_states(int agent) const { return tables_.at(agent).size(); }

  void write(ByteWriter& w) const;
  static UcbCounts read(ByteReader& r);

  bool operator==(const UcbCounts&) const = default;

 private:
  int n_actions_ = 0;
  std::vector<std::unordered_map<std::uint64_t, UcbEntry>> tables_;
};

/// Packs the own-queue vector, clipped to lane_capacity, into a table key.
std::uint64_t ucb_state_key(const env::Observation& own, int lane_capacity);

/// sqrt(ln(visits) / count).
double ucb_bonus(std::int64_t visits, std::int64_t count);

/// Exploring: an action never tried in this state is taken first (uniformly
/// among such actions), otherwise argmax of Q plus bonus; counts are then
/// incremented. Not exploring: argmax of Q and counts are untouched. Ties go
/// to the lowest action index.
int ucb_select(std::span<const double> q_values, UcbEntry& entry, bool explore, Rng& rng);

int argmax(std::span<const double> values);

}  // namespace codql::agents
