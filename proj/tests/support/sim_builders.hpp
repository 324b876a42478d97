#pragma once

#include <vector>

#include "codql/grid_sim.hpp"

namespace codql::test {

/// Empty network: no initial vehicles and no spawning.
inline sim::SimState empty_sim(int rows, int cols, int travel_time = 5, int capacity = 20) {
  sim::SimConfig c;
  c.grid_rows = rows;
  c.grid_cols = cols;
  c.travel_time = travel_time;
  c.lane_capacity = capacity;
  c.spawn_rate = 0;
  c.initial_vehicles = 0;
  c.rng_seed = 1;
  return sim::new_simulator(c);
}

/// Adds a vehicle on the first hop of `route`, queued at the head of the
/// lane when progress is 0, otherwise in transit.
inline std::uint64_t place_vehicle(sim::SimState& s, std::vector<int> route, int progress = 0) {
  sim::Vehicle v;
  v.id = s.next_vehicle_id++;
  v.route = std::move(route);
  v.edge_progress = progress;
  sim::Lane& lane = s.lanes.at(sim::lane_between(s, v.route[0], v.route[1]));
  if (progress == 0) {
    lane.queue.push_back(v.id);
  } else {
    lane.in_transit.push_back(v.id);
  }
  ++s.spawned_total;
  const auto id = v.id;
  s.vehicles.emplace(id, std::move(v));
  return id;
}

inline std::vector<int> uniform_phase(const sim::SimState& s, int phase) {
  return std::vector<int>(s.n_intersections(), phase);
}

}  // namespace codql::test
