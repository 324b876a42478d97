#include "codql/experiment_config.hpp"

#include <charconv>

#include "codql/errors.hpp"
#include "codql/rng.hpp"

namespace codql::harness {

namespace {

std::string num(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  std::string s(buf, res.ptr);
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

std::string num(std::int64_t v) { return std::to_string(v); }

std::string quoted(const std::string& s) { return "\"" + s + "\""; }

int get_i32(const KeyValueConfig& kv, const std::string& key, int fallback) {
  const auto v = kv.get_int(key, fallback);
  if (v < INT32_MIN || v > INT32_MAX) throw ConfigError(key, "out of range");
  return static_cast<int>(v);
}

std::size_t get_count(const KeyValueConfig& kv, const std::string& key, std::size_t fallback) {
  const auto v = kv.get_int(key, static_cast<std::int64_t>(fallback));
  if (v < 0) throw ConfigError(key, "must be >= 0");
  return static_cast<std::size_t>(v);
}

}  // namespace

void ExperimentConfig::validate() const {
  sim.validate();
  learner.validate();
  if (n_train_episodes < 0) throw ConfigError("train.episodes", "must be >= 0");
  if (episode_horizon < 1) throw ConfigError("train.horizon", "must be >= 1");
  if (checkpoint_every < 0) throw ConfigError("train.checkpoint_every", "must be >= 0");
  if (best_window < 1) throw ConfigError("train.best_window", "must be >= 1");
  if (n_seed_snapshots < 1) throw ConfigError("seeds.count", "must be >= 1");
  if (seed_warmup_steps < 0) throw ConfigError("seeds.warmup_steps", "must be >= 0");
  if (seed_spacing < 1) throw ConfigError("seeds.spacing", "must be >= 1");
  if (eval_episodes < 1) throw ConfigError("eval.episodes", "must be >= 1");
  if (topology == env::TopologyMode::All && sim.n_intersections() < 2) {
    throw ConfigError("env.topology", "needs at least two intersections");
  }
}

ExperimentConfig ExperimentConfig::from_kv(const KeyValueConfig& kv) {
  const auto schema = kv.get_int("schema", kConfigSchemaVersion);
  if (schema != kConfigSchemaVersion) {
    throw ConfigError("schema", "unsupported schema version " + std::to_string(schema));
  }
  ExperimentConfig c;
  const std::int64_t seed = kv.get_int("seed", 0);
  if (seed < 0) throw ConfigError("seed", "must be >= 0");
  c.rng_seed = static_cast<std::uint64_t>(seed);

  auto& s = c.sim;
  s.grid_rows = get_i32(kv, "sim.grid_rows", s.grid_rows);
  s.grid_cols = get_i32(kv, "sim.grid_cols", s.grid_cols);
  s.travel_time = get_i32(kv, "sim.travel_time", s.travel_time);
  s.spawn_rate = get_i32(kv, "sim.spawn_rate", s.spawn_rate);
  s.route_len_min = get_i32(kv, "sim.route_len_min", s.route_len_min);
  s.route_len_max = get_i32(kv, "sim.route_len_max", s.route_len_max);
  s.lane_capacity = get_i32(kv, "sim.lane_capacity", s.lane_capacity);
  s.initial_vehicles = get_i32(kv, "sim.initial_vehicles", s.initial_vehicles);
  s.action_interval = get_i32(kv, "sim.action_interval", s.action_interval);
  s.scenario = sim::scenario_from_string(
      kv.get_string("sim.scenario", std::string(sim::to_string(s.scenario))));
  s.rng_seed = c.rng_seed;

  c.topology = env::topology_mode_from_string(
      kv.get_string("env.topology", std::string(env::to_string(c.topology))));

  auto& l = c.learner;
  l.algorithm = agents::algorithm_from_string(
      kv.get_string("learner.algorithm", std::string(agents::to_string(l.algorithm))));
  l.gamma = kv.get_double("learner.gamma", l.gamma);
  l.lr = kv.get_double("learner.lr", l.lr);
  l.batch_size = get_i32(kv, "learner.batch_size", l.batch_size);
  l.tau = kv.get_double("learner.tau", l.tau);
  if (kv.has("learner.alpha_reward")) l.alpha_reward = kv.get_double("learner.alpha_reward", 0.0);
  l.replay_capacity = get_count(kv, "learner.replay_capacity", l.replay_capacity);
  l.min_buffer_before_training = get_count(kv, "learner.min_buffer", l.min_buffer_before_training);
  l.updates_per_episode = get_i32(kv, "learner.updates_per_episode", l.updates_per_episode);
  l.reward_scale = kv.get_double("learner.reward_scale", l.reward_scale);
  {
    std::vector<std::int64_t> fallback(l.hidden.begin(), l.hidden.end());
    const auto hidden = kv.get_int_list("learner.hidden", fallback);
    l.hidden.clear();
    for (auto h : hidden) {
      if (h < 1 || h > 1 << 16) throw ConfigError("learner.hidden", "widths must lie in [1, 65536]");
      l.hidden.push_back(static_cast<int>(h));
    }
  }
  l.relu_output = kv.get_bool("learner.relu_output", l.relu_output);

  c.n_train_episodes = get_i32(kv, "train.episodes", c.n_train_episodes);
  c.episode_horizon = get_i32(kv, "train.horizon", c.episode_horizon);
  c.checkpoint_every = get_i32(kv, "train.checkpoint_every", c.checkpoint_every);
  c.best_window = get_i32(kv, "train.best_window", c.best_window);
  c.seed_snapshots = kv.get_string("seeds.path", c.seed_snapshots);
  c.n_seed_snapshots = get_i32(kv, "seeds.count", c.n_seed_snapshots);
  c.seed_warmup_steps = get_i32(kv, "seeds.warmup_steps", c.seed_warmup_steps);
  c.seed_spacing = get_i32(kv, "seeds.spacing", c.seed_spacing);
  c.eval_episodes = get_i32(kv, "eval.episodes", c.eval_episodes);

  kv.require_all_used();
  c.validate();
  return c;
}

KeyValueConfig ExperimentConfig::to_kv() const {
  KeyValueConfig kv;
  kv.set("schema", num(std::int64_t{kConfigSchemaVersion}));
  kv.set("seed", num(static_cast<std::int64_t>(rng_seed)));
  kv.set("sim.grid_rows", num(std::int64_t{sim.grid_rows}));
  kv.set("sim.grid_cols", num(std::int64_t{sim.grid_cols}));
  kv.set("sim.travel_time", num(std::int64_t{sim.travel_time}));
  kv.set("sim.spawn_rate", num(std::int64_t{sim.spawn_rate}));
  kv.set("sim.route_len_min", num(std::int64_t{sim.route_len_min}));
  kv.set("sim.route_len_max", num(std::int64_t{sim.route_len_max}));
  kv.set("sim.lane_capacity", num(std::int64_t{sim.lane_capacity}));
  kv.set("sim.initial_vehicles", num(std::int64_t{sim.initial_vehicles}));
  kv.set("sim.action_interval", num(std::int64_t{sim.action_interval}));
  kv.set("sim.scenario", quoted(std::string(sim::to_string(sim.scenario))));
  kv.set("env.topology", quoted(std::string(env::to_string(topology))));
  kv.set("learner.algorithm", quoted(std::string(agents::to_string(learner.algorithm))));
  kv.set("learner.gamma", num(learner.gamma));
  kv.set("learner.lr", num(learner.lr));
  kv.set("learner.batch_size", num(std::int64_t{learner.batch_size}));
  kv.set("learner.tau", num(learner.tau));
  if (learner.alpha_reward) kv.set("learner.alpha_reward", num(*learner.alpha_reward));
  kv.set("learner.replay_capacity", num(static_cast<std::int64_t>(learner.replay_capacity)));
  kv.set("learner.min_buffer", num(static_cast<std::int64_t>(learner.min_buffer_before_training)));
  kv.set("learner.updates_per_episode", num(std::int64_t{learner.updates_per_episode}));
  kv.set("learner.reward_scale", num(learner.reward_scale));
  std::string hidden = "[";
  for (std::size_t i = 0; i < learner.hidden.size(); ++i) {
    if (i) hidden += ", ";
    hidden += std::to_string(learner.hidden[i]);
  }
  kv.set("learner.hidden", hidden + "]");
  kv.set("learner.relu_output", learner.relu_output ? "true" : "false");
  kv.set("train.episodes", num(std::int64_t{n_train_episodes}));
  kv.set("train.horizon", num(std::int64_t{episode_horizon}));
  kv.set("train.checkpoint_every", num(std::int64_t{checkpoint_every}));
  kv.set("train.best_window", num(std::int64_t{best_window}));
  kv.set("seeds.path", quoted(seed_snapshots));
  kv.set("seeds.count", num(std::int64_t{n_seed_snapshots}));
  kv.set("seeds.warmup_steps", num(std::int64_t{seed_warmup_steps}));
  kv.set("seeds.spacing", num(std::int64_t{seed_spacing}));
  kv.set("eval.episodes", num(std::int64_t{eval_episodes}));
  return kv;
}

std::uint64_t ExperimentConfig::digest() const { return fnv1a(to_text()); }

ExperimentConfig load_experiment_config(const std::filesystem::path& path,
                                        const std::vector<std::string>& overrides) {
  KeyValueConfig kv = path.empty() ? KeyValueConfig{} : KeyValueConfig::load(path);
  for (const auto& o : overrides) kv.apply_override(o);
  return ExperimentConfig::from_kv(kv);
}

}  // namespace codql::harness
