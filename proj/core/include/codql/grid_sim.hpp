#pragma once

// Discrete-time grid traffic simulator.
//
// Intersections form a rows x cols grid; every pair of adjacent
// intersections is joined by two one-way lanes. Vehicles follow a route of
// intersections, travel each lane in `travel_time` steps, then wait in the
// lane's FIFO queue until the signal at the lane's downstream intersection
// gives their direction green. Phase 0 serves the north and south approaches,
// phase 1 the west and east approaches.

#include <array>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <span>
#include <string_view>
#include <vector>

#include "codql/rng.hpp"

namespace codql::sim {

enum class Scenario : std::uint8_t { GlobalRandom = 0, DoubleRing = 1, FourRing = 2 };

std::string_view to_string(Scenario s);
/// Accepts "global_random", "double_ring", "four_ring". Throws ConfigError.
Scenario scenario_from_string(std::string_view name);

/// Side of an intersection a lane arrives from. Order matches the
/// observation vector [north, south, west, east].
enum class Direction : std::uint8_t { North = 0, South = 1, West = 2, East = 3 };

inline constexpr int kNumDirections = 4;
inline constexpr int kNumPhases = 2;

using QueueVector = std::array<int, kNumDirections>;

struct SimConfig {
  int grid_rows = 5;
  int grid_cols = 5;
  int travel_time = 5;
  int spawn_rate = 5;
  int route_len_min = 2;
  int route_len_max = 20;
  int lane_capacity = 20;
  int initial_vehicles = 100;
  int action_interval = 4;
  Scenario scenario = Scenario::GlobalRandom;
  std::uint64_t rng_seed = 0;

  /// Throws ConfigError naming the first invalid field.
  void validate() const;
  int n_intersections() const { return grid_rows * grid_cols; }
  bool operator==(const SimConfig&) const = default;
};

struct Vehicle {
  std::uint64_t id = 0;
  std::vector<int> route;
  // Current lane runs route[route_pos] -> route[route_pos + 1].
  int route_pos = 0;
  // Steps left on the current lane; 0 means queued at the lane head.
  int edge_progress = 0;
  std::int64_t delayed_steps = 0;

  bool on_final_lane() const { return route_pos + 2 == static_cast<int>(route.size()); }
  bool operator==(const Vehicle&) const = default;
};

struct Lane {
  int from = 0;
  int to = 0;
  Direction direction = Direction::North;
  std::deque<std::uint64_t> in_transit;  // entry order; front is closest to the head
  std::deque<std::uint64_t> queue;       // front departs first

  std::size_t occupancy() const { return in_transit.size() + queue.size(); }
  bool operator==(const Lane&) const = default;
};

struct SimState {
  SimConfig config;
  std::int64_t time = 0;
  std::vector<Lane> lanes;
  std::map<std::uint64_t, Vehicle> vehicles;
  std::vector<std::uint8_t> phases;
  std::int64_t arrived_count = 0;
  std::int64_t total_delay = 0;
  std::int64_t spawned_total = 0;  // spawn attempts, dropped ones included
  std::int64_t dropped_count = 0;
  std::uint64_t next_vehicle_id = 0;
  Rng rng;
  // incoming[k][d]: index of the lane entering intersection k from side d, or -1.
  std::vector<std::array<int, kNumDirections>> incoming;

  int n_intersections() const { return config.n_intersections(); }
  bool operator==(const SimState&) const = default;
};

struct StepOutcome {
  std::int64_t time = 0;  // simulator clock after the step
  std::vector<QueueVector> queues;
  std::vector<double> rewards;  // -(sum of the intersection's queue lengths)
  int arrivals = 0;
  int spawned = 0;  // vehicles that entered the network
  int dropped = 0;  // spawns rejected by a full entry lane
  std::int64_t delay = 0;  // queued vehicle-steps accrued this step
};

/// Builds the grid and pre-spawns `initial_vehicles` vehicles. Throws
/// ConfigError (or ScenarioError) on an invalid config.
SimState new_simulator(const SimConfig& config);

/// Draws a route for `scenario` from the state's generator.
std::vector<int> spawn_route(SimState& state, Scenario scenario);

/// Advances one simulator step under `joint_phase` (one entry in {0,1} per
/// intersection). Order: set phases, advance in-transit vehicles, discharge
/// queue heads on green approaches, accrue delay, spawn.
StepOutcome step(SimState& state, std::span<const int> joint_phase);

QueueVector queue_vector(const SimState& state, int intersection);
std::vector<QueueVector> observe_queues(const SimState& state);

/// Replaces the spawn generator; used to diversify episodes started from
/// the same seed snapshot.
void reseed(SimState& state, std::uint64_t seed);

/// Intersections of ring `ring` (1 = perimeter) in cycle order, or empty if
/// the ring degenerates on this grid.
std::vector<int> ring_cycle(int rows, int cols, int ring);
bool grid_adjacent(const SimConfig& config, int a, int b);
/// Lane index for the directed pair (from, to); -1 if not adjacent.
int lane_between(const SimState& state, int from, int to);

/// Serialized SimState. Layout (little-endian):
///   "CDQLSNAP" u32 version
///   config: i32 x9 (rows, cols, travel_time, spawn_rate, route_len_min,
///           route_len_max, lane_capacity, initial_vehicles, action_interval)
///           u8 scenario, u64 rng_seed
///   i64 time, arrived, total_delay, spawned_total, dropped; u64 next_id
///   u32 n + u8[n] phases
///   u32 len + bytes: generator state text
///   u32 n vehicles: u64 id, u32 m + i32[m] route, i32 route_pos,
///                   i32 edge_progress, i64 delayed_steps
///   u32 n lanes: i32 from, i32 to, u8 direction,
///                u32 m + u64[m] in_transit, u32 m + u64[m] queue
///   u64 FNV-1a checksum of all preceding bytes
struct SimSnapshot {
  std::vector<std::uint8_t> bytes;
  bool operator==(const SimSnapshot&) const = default;
};

inline constexpr std::uint32_t kSnapshotVersion = 1;

SimSnapshot snapshot(const SimState& state);
/// Throws FormatError on corruption or version mismatch.
SimState restore(const SimSnapshot& snap);

/// Runs the simulator under uniformly random phases (redrawn every
/// action_interval steps) for warmup_steps, then captures n_seeds snapshots
/// `spacing` steps apart.
std::vector<SimSnapshot> gen_seed_states(const SimConfig& config, int warmup_steps, int n_seeds,
                                         int spacing = 100);

/// Seed file: "CDQLSEED" u32 version, u32 count, then u64-length-prefixed
/// snapshots, then a checksum.
void save_seed_file(const std::filesystem::path& path, std::span<const SimSnapshot> seeds);
std::vector<SimSnapshot> load_seed_file(const std::filesystem::path& path);

}  // namespace codql::sim
