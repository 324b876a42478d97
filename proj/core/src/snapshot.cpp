#include <set>
#include <string>

#include "codql/binary_io.hpp"
#include "codql/errors.hpp"
#include "codql/grid_sim.hpp"

namespace codql::sim {

namespace {

constexpr std::string_view kSnapMagic = "CDQLSNAP";
constexpr std::string_view kSeedMagic = "CDQLSEED";
constexpr std::uint32_t kSeedVersion = 1;

void write_config(ByteWriter& w, const SimConfig& c) {
  for (int v : {c.grid_rows, c.grid_cols, c.travel_time, c.spawn_rate, c.route_len_min,
                c.route_len_max, c.lane_capacity, c.initial_vehicles, c.action_interval}) {
    w.i32(v);
  }
  w.u8(static_cast<std::uint8_t>(c.scenario));
  w.u64(c.rng_seed);
}

SimConfig read_config(ByteReader& r) {
  SimConfig c;
  for (int* f : {&c.grid_rows, &c.grid_cols, &c.travel_time, &c.spawn_rate, &c.route_len_min,
                 &c.route_len_max, &c.lane_capacity, &c.initial_vehicles, &c.action_interval}) {
    *f = r.i32();
  }
  const std::uint8_t s = r.u8();
  if (s > 2) throw FormatError("snapshot: bad scenario id");
  c.scenario = static_cast<Scenario>(s);
  c.rng_seed = r.u64();
  try {
    c.validate();
  } catch (const ConfigError& e) {
    throw FormatError(std::string("snapshot: invalid config: ") + e.what());
  }
  return c;
}

void write_ids(ByteWriter& w, const std::deque<std::uint64_t>& ids) {
  w.u32(static_cast<std::uint32_t>(ids.size()));
  for (auto id : ids) w.u64(id);
}

std::deque<std::uint64_t> read_ids(ByteReader& r) {
  const std::size_t n = r.count(8);
  std::deque<std::uint64_t> ids;
  for (std::size_t i = 0; i < n; ++i) ids.push_back(r.u64());
  return ids;
}

void check(bool ok, const char* what) {
  if (!ok) throw FormatError(std::string("snapshot: ") + what);
}

}  // namespace

SimSnapshot snapshot(const SimState& s) {
  ByteWriter w;
  w.tag(kSnapMagic);
  w.u32(kSnapshotVersion);
  write_config(w, s.config);
  w.i64(s.time);
  w.i64(s.arrived_count);
  w.i64(s.total_delay);
  w.i64(s.spawned_total);
  w.i64(s.dropped_count);
  w.u64(s.next_vehicle_id);
  w.u32(static_cast<std::uint32_t>(s.phases.size()));
  for (auto p : s.phases) w.u8(p);
  w.str(serialize_rng(s.rng));
  w.u32(static_cast<std::uint32_t>(s.vehicles.size()));
  for (const auto& [id, v] : s.vehicles) {
    w.u64(id);
    w.u32(static_cast<std::uint32_t>(v.route.size()));
    for (int node : v.route) w.i32(node);
    w.i32(v.route_pos);
    w.i32(v.edge_progress);
    w.i64(v.delayed_steps);
  }
  w.u32(static_cast<std::uint32_t>(s.lanes.size()));
  for (const Lane& lane : s.lanes) {
    w.i32(lane.from);
    w.i32(lane.to);
    w.u8(static_cast<std::uint8_t>(lane.direction));
    write_ids(w, lane.in_transit);
    write_ids(w, lane.queue);
  }
  seal_with_checksum(w);
  return {w.take()};
}

SimState restore(const SimSnapshot& snap) {
  ByteReader r(verify_checksum(snap.bytes, "snapshot"));
  r.expect_tag(kSnapMagic, "snapshot");
  const std::uint32_t version = r.u32();
  if (version != kSnapshotVersion) {
    throw FormatError("snapshot: version " + std::to_string(version) + " not supported (expected " +
                      std::to_string(kSnapshotVersion) + ")");
  }
  SimConfig config = read_config(r);

  // Topology is rebuilt from the config and compared with the stored lanes.
  SimConfig empty = config;
  empty.initial_vehicles = 0;
  SimState s = new_simulator(empty);
  s.config = config;

  s.time = r.i64();
  s.arrived_count = r.i64();
  s.total_delay = r.i64();
  s.spawned_total = r.i64();
  s.dropped_count = r.i64();
  s.next_vehicle_id = r.u64();
  const std::size_t n_phases = r.count(1);
  check(static_cast<int>(n_phases) == config.n_intersections(), "phase count mismatch");
  for (std::size_t k = 0; k < n_phases; ++k) {
    s.phases[k] = r.u8();
    check(s.phases[k] < kNumPhases, "bad phase");
  }
  s.rng = deserialize_rng(r.str());

  const std::size_t n_vehicles = r.count(8);
  for (std::size_t i = 0; i < n_vehicles; ++i) {
    Vehicle v;
    v.id = r.u64();
    const std::size_t len = r.count(4);
    check(len >= 2, "route too short");
    for (std::size_t j = 0; j < len; ++j) {
      const int node = r.i32();
      check(node >= 0 && node < config.n_intersections(), "route node out of range");
      if (j > 0) check(grid_adjacent(config, v.route.back(), node), "route not contiguous");
      v.route.push_back(node);
    }
    v.route_pos = r.i32();
    v.edge_progress = r.i32();
    v.delayed_steps = r.i64();
    check(v.route_pos >= 0 && v.route_pos + 1 < static_cast<int>(len), "route position");
    check(v.edge_progress >= 0 && v.edge_progress <= config.travel_time, "edge progress");
    check(v.delayed_steps >= 0, "negative delay");
    check(v.id < s.next_vehicle_id, "vehicle id beyond id counter");
    check(s.vehicles.emplace(v.id, std::move(v)).second, "duplicate vehicle id");
  }

  const std::size_t n_lanes = r.count(9);
  check(n_lanes == s.lanes.size(), "lane count mismatch");
  std::set<std::uint64_t> placed;
  for (std::size_t li = 0; li < n_lanes; ++li) {
    Lane& lane = s.lanes[li];
    check(r.i32() == lane.from && r.i32() == lane.to &&
              r.u8() == static_cast<std::uint8_t>(lane.direction),
          "lane topology mismatch");
    lane.in_transit = read_ids(r);
    lane.queue = read_ids(r);
    check(static_cast<int>(lane.occupancy()) <= config.lane_capacity, "lane over capacity");
    auto place = [&](std::uint64_t id, bool queued) {
      const auto it = s.vehicles.find(id);
      check(it != s.vehicles.end(), "lane references unknown vehicle");
      check(placed.insert(id).second, "vehicle on two lanes");
      const Vehicle& v = it->second;
      check(v.route[v.route_pos] == lane.from && v.route[v.route_pos + 1] == lane.to,
            "vehicle not on its route lane");
      check(queued == (v.edge_progress == 0), "queue state disagrees with progress");
    };
    for (auto id : lane.in_transit) place(id, false);
    for (auto id : lane.queue) place(id, true);
  }
  check(placed.size() == s.vehicles.size(), "vehicle not on any lane");
  check(r.at_end(), "trailing bytes");
  return s;
}

void save_seed_file(const std::filesystem::path& path, std::span<const SimSnapshot> seeds) {
  ByteWriter w;
  w.tag(kSeedMagic);
  w.u32(kSeedVersion);
  w.u32(static_cast<std::uint32_t>(seeds.size()));
  for (const auto& s : seeds) w.blob(s.bytes);
  seal_with_checksum(w);
  write_file(path, w.bytes());
}

std::vector<SimSnapshot> load_seed_file(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  ByteReader r(verify_checksum(bytes, "seed file"));
  r.expect_tag(kSeedMagic, "seed file");
  if (r.u32() != kSeedVersion) throw FormatError("seed file: unsupported version");
  const std::size_t n = r.count(8);
  std::vector<SimSnapshot> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back({r.blob()});
  if (!r.at_end()) throw FormatError("seed file: trailing bytes");
  if (out.empty()) throw FormatError("seed file: no snapshots");
  return out;
}

}  // namespace codql::sim
