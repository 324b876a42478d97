#include "codql/ucb.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "codql/errors.hpp"

namespace codql::agents {

UcbCounts::UcbCounts(int n_agents, int n_actions) : n_actions_(n_actions), tables_(n_agents) {}

UcbEntry& UcbCounts::entry(int agent, std::uint64_t key) {
  auto& e = tables_.at(agent)[key];
  if (e.action_counts.empty()) e.action_counts.assign(n_actions_, 0);
  return e;
}

const UcbEntry* UcbCounts::find(int agent, std::uint64_t key) const {
  const auto& t = tables_.at(agent);
  const auto it = t.find(key);
  return it == t.end() ? nullptr : &it->second;
}

void UcbCounts::write(ByteWriter& w) const {
  w.u32(static_cast<std::uint32_t>(tables_.size()));
  w.u32(static_cast<std::uint32_t>(n_actions_));
  for (const auto& table : tables_) {
    const std::map<std::uint64_t, UcbEntry> sorted(table.begin(), table.end());
    w.u32(static_cast<std::uint32_t>(sorted.size()));
    for (const auto& [key, e] : sorted) {
      w.u64(key);
      for (auto c : e.action_counts) w.i64(c);
    }
  }
}

UcbCounts UcbCounts::read(ByteReader& r) {
  const int n_agents = static_cast<int>(r.count(4));
  const int n_actions = static_cast<int>(r.u32());
  if (n_actions < 1 || n_actions > 64) throw FormatError("ucb table: bad action count");
  UcbCounts counts(n_agents, n_actions);
  for (int k = 0; k < n_agents; ++k) {
    const std::size_t n = r.count(8 + 8 * static_cast<std::size_t>(n_actions));
    for (std::size_t i = 0; i < n; ++i) {
      const std::uint64_t key = r.u64();
      UcbEntry& e = counts.entry(k, key);
      for (auto& c : e.action_counts) {
        c = r.i64();
        if (c < 0) throw FormatError("ucb table: negative count");
        e.visits += c;
      }
    }
  }
  return counts;
}

std::uint64_t ucb_state_key(const env::Observation& own, int lane_capacity) {
  std::uint64_t key = 0;
  for (int q : own) {
    const auto clipped = static_cast<std::uint64_t>(std::clamp(q, 0, lane_capacity));
    key = (key << 16) | (clipped & 0xffff);
  }
  return key;
}

double ucb_bonus(std::int64_t visits, std::int64_t count) {
  return std::sqrt(std::log(static_cast<double>(visits)) / static_cast<double>(count));
}

int argmax(std::span<const double> values) {
  return static_cast<int>(std::max_element(values.begin(), values.end()) - values.begin());
}

int ucb_select(std::span<const double> q_values, UcbEntry& entry, bool explore, Rng& rng) {
  if (q_values.empty()) throw ContractError("no actions to select from");
  if (!explore) return argmax(q_values);
  if (entry.action_counts.size() != q_values.size()) {
    throw ContractError("count table does not match action count");
  }
  std::vector<int> untried;
  for (std::size_t c = 0; c < q_values.size(); ++c) {
    if (entry.action_counts[c] == 0) untried.push_back(static_cast<int>(c));
  }
  int chosen = 0;
  if (!untried.empty()) {
    chosen = untried.size() == 1 ? untried.front() : untried[uniform_index(rng, untried.size())];
  } else {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < q_values.size(); ++c) {
      const double score = q_values[c] + ucb_bonus(entry.visits, entry.action_counts[c]);
      if (score > best) {
        best = score;
        chosen = static_cast<int>(c);
      }
    }
  }
  ++entry.visits;
  ++entry.action_counts[chosen];
  return chosen;
}

}  // namespace codql::agents
