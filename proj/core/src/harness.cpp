#include "codql/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <ostream>
#include <thread>

#include "codql/binary_io.hpp"
#include "codql/csv.hpp"
#include "codql/errors.hpp"
#include "codql/replay_buffer.hpp"

namespace codql::harness {

namespace {

env::RewardShare reward_share(const ExperimentConfig& config) {
  return env::RewardShare{config.learner.alpha_reward};
}

sim::SimState start_state(const sim::SimSnapshot& snap, std::uint64_t sim_seed) {
  sim::SimState state = sim::restore(snap);
  sim::reseed(state, sim_seed);
  return state;
}

// The training schedule: which snapshot each episode starts from and how
// the simulator is reseeded. Drawn from the "sim" stream only, so it does
// not depend on the actions taken.
struct EpisodeStart {
  std::size_t snapshot = 0;
  std::uint64_t sim_seed = 0;
};

class TrainingSchedule {
 public:
  TrainingSchedule(std::uint64_t root, std::size_t n_snapshots)
      : rng_(make_rng(root, "sim")), n_(n_snapshots) {}
  EpisodeStart next() {
    EpisodeStart s;
    s.snapshot = uniform_index(rng_, n_);
    s.sim_seed = rng_();
    return s;
  }

 private:
  Rng rng_;
  std::size_t n_;
};

double sample_std(std::span<const double> xs, double mean) {
  if (xs.size() < 2) return 0.0;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

}  // namespace

std::vector<sim::SimSnapshot> seed_snapshots(const ExperimentConfig& config) {
  if (!config.seed_snapshots.empty()) {
    auto seeds = sim::load_seed_file(config.seed_snapshots);
    if (seeds.empty()) throw ConfigError("seeds.path", "seed file holds no snapshots");
    const sim::SimState probe = sim::restore(seeds.front());
    sim::SimConfig a = probe.config, b = config.sim;
    a.rng_seed = b.rng_seed = 0;
    a.initial_vehicles = b.initial_vehicles = 0;
    if (!(a == b)) {
      throw ConfigError("seeds.path", "seed snapshots were generated for a different sim config");
    }
    return seeds;
  }
  return sim::gen_seed_states(config.sim, config.seed_warmup_steps, config.n_seed_snapshots,
                              config.seed_spacing);
}

std::vector<int> GreedyPolicy::act(std::span<const env::JointObs> obs,
                                   std::span<const env::MeanAction> means, Rng&) const {
  return learner_.greedy_actions(obs, means);
}

std::vector<int> RandomPolicy::act(std::span<const env::JointObs> obs,
                                   std::span<const env::MeanAction>, Rng& rng) const {
  std::vector<int> actions(obs.size());
  for (int& a : actions) a = uniform_int(rng, 0, sim::kNumPhases - 1);
  return actions;
}

EpisodeStats run_episode(sim::SimState state, const ExperimentConfig& config,
                         const env::Topology& topology, const Policy& policy, Rng& policy_rng) {
  const int n = topology.n_agents;
  const int dt = config.sim.action_interval;
  const auto share = reward_share(config);
  EpisodeStats stats;
  stats.vehicles = static_cast<std::int64_t>(state.vehicles.size());
  std::vector<env::JointObs> obs = env::shared_states(sim::observe_queues(state), topology);
  std::vector<env::MeanAction> means(n, env::uniform_mean_action());
  double reward_sum = 0.0;
  stats.step_rewards.reserve(static_cast<std::size_t>(config.episode_horizon) * dt);
  for (int t = 0; t < config.episode_horizon; ++t) {
    const auto actions = policy.act(obs, means, policy_rng);
    auto out = env::markov_step(state, actions, dt, topology, share);
    for (const auto& tr : out.transitions) reward_sum += tr.reward;
    stats.step_rewards.insert(stats.step_rewards.end(), out.step_reward_totals.begin(),
                              out.step_reward_totals.end());
    stats.arrived += out.arrivals;
    stats.dropped += out.dropped;
    stats.delay += out.delay;
    stats.vehicles += out.spawned;
    for (int k = 0; k < n; ++k) means[k] = out.transitions[k].mean_action;
    obs = env::shared_states(out.next_observations, topology);
  }
  stats.mean_reward = reward_sum / (static_cast<double>(n) * config.episode_horizon * dt);
  stats.average_delay =
      stats.vehicles > 0 ? static_cast<double>(stats.delay) / static_cast<double>(stats.vehicles) : 0.0;
  return stats;
}

Metrics aggregate(std::span<const EpisodeStats> episodes) {
  Metrics m;
  m.episodes = static_cast<int>(episodes.size());
  if (episodes.empty()) return m;
  std::vector<double> rewards, delays;
  for (const auto& e : episodes) {
    rewards.push_back(e.mean_reward);
    delays.push_back(e.average_delay);
    m.arrived += e.arrived;
    m.dropped += e.dropped;
  }
  const double count = static_cast<double>(episodes.size());
  for (double r : rewards) m.mean_episode_reward += r;
  for (double d : delays) m.average_delay_time += d;
  m.mean_episode_reward /= count;
  m.average_delay_time /= count;
  m.mean_episode_reward_std = sample_std(rewards, m.mean_episode_reward);
  m.average_delay_time_std = sample_std(delays, m.average_delay_time);
  return m;
}

std::vector<EpisodeStats> evaluate_episodes(const Policy& policy, const ExperimentConfig& config,
                                            std::span<const sim::SimSnapshot> seeds, int jobs) {
  if (seeds.empty()) throw ConfigError("seeds.count", "no seed snapshots to evaluate on");
  const env::Topology topology = env::Topology::build(config.topology, config.sim);
  const int n = config.eval_episodes;
  std::vector<EpisodeStats> results(n);
  auto run_one = [&](int i) {
    Rng policy_rng = make_rng(config.rng_seed, "policy", static_cast<std::uint64_t>(i));
    sim::SimState state = start_state(seeds[static_cast<std::size_t>(i) % seeds.size()],
                                      derive_seed(config.rng_seed, "eval", i));
    results[i] = run_episode(std::move(state), config, topology, policy, policy_rng);
  };
  jobs = std::clamp(jobs, 1, n);
  if (jobs == 1) {
    for (int i = 0; i < n; ++i) run_one(i);
    return results;
  }
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  std::vector<std::thread> workers;
  for (int w = 0; w < jobs; ++w) {
    workers.emplace_back([&] {
      for (int i = next++; i < n && !failed; i = next++) {
        try {
          run_one(i);
        } catch (...) {
          if (!failed.exchange(true)) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : workers) t.join();
  if (failure) std::rethrow_exception(failure);
  return results;
}

Metrics evaluate(const agents::Learner& learner, const ExperimentConfig& config,
                 std::span<const sim::SimSnapshot> seeds, int jobs) {
  const GreedyPolicy policy(learner);
  return aggregate(evaluate_episodes(policy, config, seeds, jobs));
}

Metrics evaluate_random(const ExperimentConfig& config, std::span<const sim::SimSnapshot> seeds,
                        int jobs) {
  const RandomPolicy policy;
  return aggregate(evaluate_episodes(policy, config, seeds, jobs));
}

double trailing_mean(std::span<const double> values, std::size_t end, int window) {
  if (end >= values.size() || window < 1) throw ContractError("trailing window out of range");
  const std::size_t begin = end + 1 >= static_cast<std::size_t>(window) ? end + 1 - window : 0;
  double sum = 0.0;
  for (std::size_t i = begin; i <= end; ++i) sum += values[i];
  return sum / static_cast<double>(end + 1 - begin);
}

TrainResult train(const ExperimentConfig& config, const std::filesystem::path& out_dir,
                  std::ostream* log) {
  config.validate();
  const bool write = !out_dir.empty();
  if (write) {
    write_text_file(out_dir / "config.toml", config.to_text());
    write_text_file(out_dir / "training.csv", training_csv({}));
  }
  TrainResult result;
  if (config.n_train_episodes == 0) return result;

  const auto seeds = seed_snapshots(config);
  const env::Topology topology = env::Topology::build(config.topology, config.sim);
  const auto share = reward_share(config);
  const int n = topology.n_agents;
  const int dt = config.sim.action_interval;
  const std::uint64_t digest = config.digest();

  agents::Learner learner(config.learner, n, config.sim.lane_capacity,
                          derive_seed(config.rng_seed, "init", 0));
  agents::ReplayBuffer buffer(config.learner.replay_capacity);
  TrainingSchedule schedule(config.rng_seed, seeds.size());
  Rng explore_rng = make_rng(config.rng_seed, "exploration");
  Rng replay_rng = make_rng(config.rng_seed, "replay");

  std::vector<double> episode_rewards;
  bool have_best = false;
  std::vector<agents::ReplayRecord> pending(n);

  for (int episode = 1; episode <= config.n_train_episodes; ++episode) {
    const EpisodeStart start = schedule.next();
    sim::SimState state = start_state(seeds[start.snapshot], start.sim_seed);
    std::vector<env::JointObs> obs = env::shared_states(sim::observe_queues(state), topology);
    std::vector<env::MeanAction> means(n, env::uniform_mean_action());
    double reward_sum = 0.0;
    std::int64_t off_greedy = 0;

    for (int t = 0; t < config.episode_horizon; ++t) {
      int exploratory = 0;
      const auto actions = learner.explore_actions(obs, means, explore_rng, &exploratory);
      off_greedy += exploratory;
      auto out = env::markov_step(state, actions, dt, topology, share);
      for (int k = 0; k < n; ++k) {
        const auto& tr = out.transitions[k];
        reward_sum += tr.reward;
        std::array<double, sim::kNumPhases> mean{};
        std::copy(tr.mean_action.dist.begin(), tr.mean_action.dist.end(), mean.begin());
        // The previous transition's next-step mean action is this one's.
        if (t > 0) {
          pending[k].next_mean_action = mean;
          buffer.push(pending[k]);
        }
        pending[k] = agents::ReplayRecord{k, tr.obs, tr.action, tr.reward, tr.shared_reward,
                                          tr.next_obs, mean, mean};
        means[k] = tr.mean_action;
      }
      obs = env::shared_states(out.next_observations, topology);
    }
    for (const auto& rec : pending) buffer.push(rec);

    agents::LearnStats stats;
    try {
      stats = learner.learn_episode(buffer, replay_rng);
    } catch (const NumericError& e) {
      throw NumericError("training episode " + std::to_string(episode) + ": " + e.what());
    }
    if (!std::isfinite(stats.loss_mean)) {
      throw NumericError("training episode " + std::to_string(episode) + ": non-finite loss");
    }

    TrainingRow row;
    row.episode = episode;
    row.mean_episode_reward = reward_sum / (static_cast<double>(n) * config.episode_horizon * dt);
    row.loss = stats.loss_mean;
    row.buffer_fill = buffer.size();
    row.updates = stats.updates;
    row.explore_fraction =
        static_cast<double>(off_greedy) / (static_cast<double>(n) * config.episode_horizon);
    result.rows.push_back(row);
    episode_rewards.push_back(row.mean_episode_reward);

    const double window =
        trailing_mean(episode_rewards, episode_rewards.size() - 1, config.best_window);
    const bool improved = !have_best || window > result.best_window_mean;
    if (improved) {
      have_best = true;
      result.best_window_mean = window;
      result.best_episode = episode;
      result.best = make_checkpoint(learner, digest, episode);
      if (write) save_checkpoint(out_dir / "best.ckpt", *result.best);
    }
    if (write && config.checkpoint_every > 0 && episode % config.checkpoint_every == 0) {
      char name[64];
      std::snprintf(name, sizeof name, "episode_%06d.ckpt", episode);
      save_checkpoint(out_dir / "checkpoints" / name, make_checkpoint(learner, digest, episode));
    }
    if (log) {
      *log << "episode " << episode << "/" << config.n_train_episodes
           << " reward " << row.mean_episode_reward << " loss " << row.loss << " window "
           << window << '\n';
    }
  }

  result.final = make_checkpoint(learner, digest, config.n_train_episodes);
  if (write) {
    save_checkpoint(out_dir / "final.ckpt", *result.final);
    write_text_file(out_dir / "training.csv", training_csv(result.rows));
  }
  return result;
}

std::vector<double> random_training_baseline(const ExperimentConfig& config) {
  const auto seeds = seed_snapshots(config);
  const env::Topology topology = env::Topology::build(config.topology, config.sim);
  TrainingSchedule schedule(config.rng_seed, seeds.size());
  const RandomPolicy policy;
  Rng policy_rng = make_rng(config.rng_seed, "policy");
  std::vector<double> rewards;
  for (int episode = 1; episode <= config.n_train_episodes; ++episode) {
    const EpisodeStart start = schedule.next();
    rewards.push_back(run_episode(start_state(seeds[start.snapshot], start.sim_seed), config,
                                  topology, policy, policy_rng)
                          .mean_reward);
  }
  return rewards;
}

std::string training_csv(std::span<const TrainingRow> rows) {
  CsvWriter csv({"episode", "mean_episode_reward", "loss", "buffer_fill", "updates",
                 "explore_fraction"});
  for (const auto& r : rows) {
    csv.row({std::to_string(r.episode), format_double(r.mean_episode_reward),
             format_double(r.loss), std::to_string(r.buffer_fill), std::to_string(r.updates),
             format_double(r.explore_fraction)});
  }
  return csv.str();
}

std::string metrics_csv_header() {
  return "method,average_delay_time,average_delay_time_std,mean_episode_reward,"
         "mean_episode_reward_std,arrived,dropped,episodes\n";
}

std::string metrics_csv_row(const std::string& label, const Metrics& m) {
  return label + ',' + format_double(m.average_delay_time) + ',' +
         format_double(m.average_delay_time_std) + ',' + format_double(m.mean_episode_reward) +
         ',' + format_double(m.mean_episode_reward_std) + ',' + std::to_string(m.arrived) + ',' +
         std::to_string(m.dropped) + ',' + std::to_string(m.episodes) + '\n';
}

std::string episodes_csv(std::span<const EpisodeStats> episodes) {
  CsvWriter csv({"episode", "mean_episode_reward", "average_delay_time", "arrived", "dropped"});
  for (std::size_t i = 0; i < episodes.size(); ++i) {
    const auto& e = episodes[i];
    csv.row({std::to_string(i), format_double(e.mean_reward), format_double(e.average_delay),
             std::to_string(e.arrived), std::to_string(e.dropped)});
  }
  return csv.str();
}

std::vector<CompareRow> compare(std::span<const CompareEntry> entries,
                                const ExperimentConfig& config,
                                std::span<const sim::SimSnapshot> seeds, int jobs) {
  if (entries.empty()) throw ConfigError("compare", "no checkpoints given");
  std::vector<CompareRow> rows;
  for (const auto& entry : entries) {
    const agents::Learner learner = restore_learner(entry.checkpoint, config.learner,
                                                    config.sim.n_intersections(),
                                                    config.sim.lane_capacity);
    CompareRow row;
    row.label = entry.label;
    row.algorithm = std::string(agents::to_string(entry.checkpoint.algorithm));
    row.metrics = evaluate(learner, config, seeds, jobs);
    rows.push_back(std::move(row));
  }
  std::vector<std::size_t> order(rows.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& ma = rows[a].metrics;
    const auto& mb = rows[b].metrics;
    if (ma.average_delay_time != mb.average_delay_time) {
      return ma.average_delay_time < mb.average_delay_time;
    }
    if (ma.mean_episode_reward != mb.mean_episode_reward) {
      return ma.mean_episode_reward > mb.mean_episode_reward;
    }
    return rows[a].label < rows[b].label;
  });
  std::vector<CompareRow> ranked;
  ranked.reserve(rows.size());
  for (std::size_t r = 0; r < order.size(); ++r) {
    ranked.push_back(std::move(rows[order[r]]));
    ranked.back().rank = static_cast<int>(r) + 1;
  }
  return ranked;
}

std::string compare_csv(std::span<const CompareRow> rows) {
  std::string out = "rank,algorithm," + metrics_csv_header();
  for (const auto& r : rows) {
    out += std::to_string(r.rank) + ',' + r.algorithm + ',' + metrics_csv_row(r.label, r.metrics);
  }
  return out;
}

}  // namespace codql::harness
