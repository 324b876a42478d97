#include "codql/grid_sim.hpp"

#include <algorithm>
#include <string>

#include "codql/errors.hpp"

namespace codql::sim {

namespace {

struct Cell {
  int row;
  int col;
};

Cell cell_of(const SimConfig& c, int k) { return {k / c.grid_cols, k % c.grid_cols}; }

// Side of `to` that a vehicle arriving from `from` enters by.
Direction arrival_side(const SimConfig& c, int from, int to) {
  const Cell f = cell_of(c, from);
  const Cell t = cell_of(c, to);
  if (f.row < t.row) return Direction::North;
  if (f.row > t.row) return Direction::South;
  if (f.col < t.col) return Direction::West;
  return Direction::East;
}

std::vector<int> grid_neighbors(const SimConfig& c, int k) {
  const Cell p = cell_of(c, k);
  std::vector<int> out;
  if (p.row > 0) out.push_back(k - c.grid_cols);
  if (p.row + 1 < c.grid_rows) out.push_back(k + c.grid_cols);
  if (p.col > 0) out.push_back(k - 1);
  if (p.col + 1 < c.grid_cols) out.push_back(k + 1);
  return out;
}

bool green(int phase, Direction d) {
  const bool north_south = d == Direction::North || d == Direction::South;
  return phase == 0 ? north_south : !north_south;
}

std::vector<int> scenario_rings(Scenario s) {
  switch (s) {
    case Scenario::DoubleRing:
      return {1, 2};
    case Scenario::FourRing:
      return {1, 2, 3, 4};
    case Scenario::GlobalRandom:
      break;
  }
  return {};
}

void check_scenario(const SimConfig& c, Scenario s) {
  for (int r : scenario_rings(s)) {
    if (ring_cycle(c.grid_rows, c.grid_cols, r).empty()) {
      throw ScenarioError(std::string(to_string(s)) + " needs ring " + std::to_string(r) +
                          ", which does not exist on a " + std::to_string(c.grid_rows) + "x" +
                          std::to_string(c.grid_cols) + " grid");
    }
  }
}

std::vector<int> random_walk_route(SimState& state) {
  const SimConfig& c = state.config;
  const int len = uniform_int(state.rng, c.route_len_min, c.route_len_max);
  std::vector<int> route;
  route.reserve(len);
  route.push_back(static_cast<int>(uniform_index(state.rng, c.n_intersections())));
  int prev = -1;
  while (static_cast<int>(route.size()) < len) {
    const int here = route.back();
    auto options = grid_neighbors(c, here);
    std::erase(options, prev);  // no immediate reversal
    const int next = options[uniform_index(state.rng, options.size())];
    prev = here;
    route.push_back(next);
  }
  return route;
}

std::vector<int> ring_arc_route(SimState& state, Scenario scenario) {
  const SimConfig& c = state.config;
  const auto rings = scenario_rings(scenario);
  const int ring = rings[uniform_index(state.rng, rings.size())];
  const auto cycle = ring_cycle(c.grid_rows, c.grid_cols, ring);
  const int n = static_cast<int>(cycle.size());
  const int lo = std::min(c.route_len_min, n);
  const int hi = std::min(c.route_len_max, n);
  const int len = uniform_int(state.rng, lo, hi);
  const int start = static_cast<int>(uniform_index(state.rng, cycle.size()));
  const int stride = coin_flip(state.rng) ? 1 : n - 1;
  std::vector<int> route;
  route.reserve(len);
  for (int i = 0; i < len; ++i) route.push_back(cycle[(start + i * stride) % n]);
  return route;
}

void try_spawn(SimState& state, StepOutcome* outcome) {
  auto route = spawn_route(state, state.config.scenario);
  ++state.spawned_total;
  Lane& lane = state.lanes[lane_between(state, route[0], route[1])];
  if (static_cast<int>(lane.occupancy()) >= state.config.lane_capacity) {
    ++state.dropped_count;
    if (outcome) ++outcome->dropped;
    return;
  }
  Vehicle v;
  v.id = state.next_vehicle_id++;
  v.route = std::move(route);
  v.edge_progress = state.config.travel_time;
  lane.in_transit.push_back(v.id);
  state.vehicles.emplace(v.id, std::move(v));
  if (outcome) ++outcome->spawned;
}

}  // namespace

std::string_view to_string(Scenario s) {
  switch (s) {
    case Scenario::GlobalRandom:
      return "global_random";
    case Scenario::DoubleRing:
      return "double_ring";
    case Scenario::FourRing:
      return "four_ring";
  }
  return "unknown";
}

Scenario scenario_from_string(std::string_view name) {
  if (name == "global_random") return Scenario::GlobalRandom;
  if (name == "double_ring") return Scenario::DoubleRing;
  if (name == "four_ring") return Scenario::FourRing;
  throw ConfigError("sim.scenario", "unknown scenario '" + std::string(name) + "'");
}

void SimConfig::validate() const {
  if (grid_rows < 2) throw ConfigError("sim.grid_rows", "must be >= 2");
  if (grid_cols < 2) throw ConfigError("sim.grid_cols", "must be >= 2");
  if (travel_time < 1) throw ConfigError("sim.travel_time", "must be >= 1");
  if (spawn_rate < 0) throw ConfigError("sim.spawn_rate", "must be >= 0");
  if (route_len_min < 2) throw ConfigError("sim.route_len_min", "must be >= 2");
  if (route_len_max < route_len_min) {
    throw ConfigError("sim.route_len_max", "must be >= route_len_min");
  }
  if (lane_capacity < 1) throw ConfigError("sim.lane_capacity", "must be >= 1");
  if (initial_vehicles < 0) throw ConfigError("sim.initial_vehicles", "must be >= 0");
  if (action_interval < 1) throw ConfigError("sim.action_interval", "must be >= 1");
  const auto s = static_cast<int>(scenario);
  if (s < 0 || s > 2) throw ConfigError("sim.scenario", "unknown scenario id");
  check_scenario(*this, scenario);
}

std::vector<int> ring_cycle(int rows, int cols, int ring) {
  const int top = ring - 1;
  const int left = ring - 1;
  const int bottom = rows - ring;
  const int right = cols - ring;
  if (ring < 1 || bottom <= top || right <= left) return {};
  std::vector<int> out;
  auto at = [cols](int r, int c) { return r * cols + c; };
  for (int c = left; c <= right; ++c) out.push_back(at(top, c));
  for (int r = top + 1; r <= bottom; ++r) out.push_back(at(r, right));
  for (int c = right - 1; c >= left; --c) out.push_back(at(bottom, c));
  for (int r = bottom - 1; r > top; --r) out.push_back(at(r, left));
  return out;
}

bool grid_adjacent(const SimConfig& c, int a, int b) {
  const Cell p = cell_of(c, a);
  const Cell q = cell_of(c, b);
  return std::abs(p.row - q.row) + std::abs(p.col - q.col) == 1;
}

int lane_between(const SimState& state, int from, int to) {
  if (!grid_adjacent(state.config, from, to)) return -1;
  return state.incoming[to][static_cast<int>(arrival_side(state.config, from, to))];
}

SimState new_simulator(const SimConfig& config) {
  config.validate();
  SimState state;
  state.config = config;
  state.rng = Rng(config.rng_seed);
  const int n = config.n_intersections();
  state.phases.assign(n, 0);
  state.incoming.assign(n, {-1, -1, -1, -1});
  for (int from = 0; from < n; ++from) {
    for (int to : grid_neighbors(config, from)) {
      Lane lane;
      lane.from = from;
      lane.to = to;
      lane.direction = arrival_side(config, from, to);
      state.incoming[to][static_cast<int>(lane.direction)] = static_cast<int>(state.lanes.size());
      state.lanes.push_back(std::move(lane));
    }
  }
  for (int i = 0; i < config.initial_vehicles; ++i) try_spawn(state, nullptr);
  return state;
}

std::vector<int> spawn_route(SimState& state, Scenario scenario) {
  if (scenario == Scenario::GlobalRandom) return random_walk_route(state);
  check_scenario(state.config, scenario);
  return ring_arc_route(state, scenario);
}

StepOutcome step(SimState& state, std::span<const int> joint_phase) {
  const int n = state.n_intersections();
  if (static_cast<int>(joint_phase.size()) != n) {
    throw ContractError("joint phase has " + std::to_string(joint_phase.size()) +
                        " entries, expected " + std::to_string(n));
  }
  for (int p : joint_phase) {
    if (p < 0 || p >= kNumPhases) throw ContractError("phase must be 0 or 1");
  }
  StepOutcome out;
  const SimConfig& c = state.config;

  for (int k = 0; k < n; ++k) state.phases[k] = static_cast<std::uint8_t>(joint_phase[k]);

  // Advance. In-transit vehicles on a lane share one speed, so the ones
  // finishing the lane are always at the front.
  for (Lane& lane : state.lanes) {
    for (std::uint64_t id : lane.in_transit) --state.vehicles.at(id).edge_progress;
    while (!lane.in_transit.empty()) {
      const std::uint64_t id = lane.in_transit.front();
      Vehicle& v = state.vehicles.at(id);
      if (v.edge_progress > 0) break;
      lane.in_transit.pop_front();
      if (v.on_final_lane()) {
        state.vehicles.erase(id);
        ++state.arrived_count;
        ++out.arrivals;
      } else {
        lane.queue.push_back(id);
      }
    }
  }

  // Discharge at most one head vehicle per green approach.
  for (int k = 0; k < n; ++k) {
    for (int d = 0; d < kNumDirections; ++d) {
      const int li = state.incoming[k][d];
      if (li < 0 || !green(state.phases[k], static_cast<Direction>(d))) continue;
      Lane& lane = state.lanes[li];
      if (lane.queue.empty()) continue;
      Vehicle& v = state.vehicles.at(lane.queue.front());
      Lane& next = state.lanes[lane_between(state, k, v.route[v.route_pos + 2])];
      if (static_cast<int>(next.occupancy()) >= c.lane_capacity) continue;
      lane.queue.pop_front();
      ++v.route_pos;
      v.edge_progress = c.travel_time;
      next.in_transit.push_back(v.id);
    }
  }

  for (const Lane& lane : state.lanes) {
    for (std::uint64_t id : lane.queue) ++state.vehicles.at(id).delayed_steps;
    out.delay += static_cast<std::int64_t>(lane.queue.size());
  }
  state.total_delay += out.delay;

  for (int i = 0; i < c.spawn_rate; ++i) try_spawn(state, &out);

  ++state.time;
  out.time = state.time;
  out.queues = observe_queues(state);
  out.rewards.resize(n);
  for (int k = 0; k < n; ++k) {
    int sum = 0;
    for (int q : out.queues[k]) sum += q;
    out.rewards[k] = -static_cast<double>(sum);
  }
  return out;
}

QueueVector queue_vector(const SimState& state, int intersection) {
  QueueVector q{};
  for (int d = 0; d < kNumDirections; ++d) {
    const int li = state.incoming[intersection][d];
    q[d] = li < 0 ? 0 : static_cast<int>(state.lanes[li].queue.size());
  }
  return q;
}

std::vector<QueueVector> observe_queues(const SimState& state) {
  std::vector<QueueVector> out(state.n_intersections());
  for (int k = 0; k < state.n_intersections(); ++k) out[k] = queue_vector(state, k);
  return out;
}

void reseed(SimState& state, std::uint64_t seed) { state.rng.seed(seed); }

std::vector<SimSnapshot> gen_seed_states(const SimConfig& config, int warmup_steps, int n_seeds,
                                         int spacing) {
  if (warmup_steps < 1) throw ConfigError("seeds.warmup_steps", "must be >= 1");
  if (n_seeds < 1) throw ConfigError("seeds.count", "must be >= 1");
  if (spacing < 1) throw ConfigError("seeds.spacing", "must be >= 1");
  SimState state = new_simulator(config);
  Rng policy = make_rng(config.rng_seed, "policy");
  std::vector<int> phases(state.n_intersections(), 0);
  auto advance = [&](int steps) {
    for (int i = 0; i < steps; ++i) {
      if (state.time % config.action_interval == 0) {
        for (int& p : phases) p = uniform_int(policy, 0, kNumPhases - 1);
      }
      step(state, phases);
    }
  };
  advance(warmup_steps);
  std::vector<SimSnapshot> seeds;
  seeds.push_back(snapshot(state));
  for (int i = 1; i < n_seeds; ++i) {
    advance(spacing);
    seeds.push_back(snapshot(state));
  }
  return seeds;
}

}  // namespace codql::sim
