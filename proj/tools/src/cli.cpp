#include "codql/cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <optional>
#include <ostream>
#include <sstream>

#include "codql/binary_io.hpp"
#include "codql/checkpoint.hpp"
#include "codql/csv.hpp"
#include "codql/errors.hpp"
#include "codql/harness.hpp"
#include "codql/nn.hpp"
#include "codql/tabular.hpp"

namespace codql::cli {

namespace {

namespace fs = std::filesystem;

struct Options {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  std::vector<std::string> overrides;

  // evaluate / compare
  std::vector<std::string> checkpoints;
  bool random_policy = false;

  // tabular-converge
  std::string game = "small3";
  std::int64_t updates = 200000;
  std::int64_t trace_every = 1000;
  std::string bootstrap = "stage_optimum";
  int bins = 5;
  double epsilon_exponent = 0.1;

  // grad-check
  int batch = 8;
  double tolerance = 1e-4;
};

void add_common(CLI::App* cmd, Options& o, bool with_config) {
  if (with_config) {
    cmd->add_option("--config", o.config, "Experiment config file (TOML subset)");
    cmd->add_option("--override", o.overrides, "Dotted key=value applied after the config file")
        ->allow_extra_args(false);
    cmd->add_option("--jobs", o.jobs, "Worker threads for evaluation")->check(CLI::Range(1, 256));
  }
  cmd->add_option("--out", o.out, "Output directory");
  cmd->add_option("--seed", o.seed, "Root seed (overrides the config)");
}

fs::path output_dir(const Options& o, const std::string& command) {
  if (!o.out.empty()) return o.out;
  const char* root = std::getenv(kOutRootEnv);
  return fs::path(root && *root ? root : "runs") / command;
}

harness::ExperimentConfig experiment(const Options& o) {
  auto overrides = o.overrides;
  if (o.seed) overrides.push_back("seed=" + std::to_string(*o.seed));
  return harness::load_experiment_config(o.config, overrides);
}

int gen_seeds(const Options& o, std::ostream& err) {
  const auto config = experiment(o);
  const fs::path dir = output_dir(o, "gen-seeds");
  const auto seeds = sim::gen_seed_states(config.sim, config.seed_warmup_steps,
                                          config.n_seed_snapshots, config.seed_spacing);
  sim::save_seed_file(dir / "seeds.bin", seeds);
  write_text_file(dir / "config.toml", config.to_text());
  err << "wrote " << seeds.size() << " seed snapshots to " << (dir / "seeds.bin").string() << '\n';
  return kExitOk;
}

int train(const Options& o, std::ostream& err) {
  const auto config = experiment(o);
  const fs::path dir = output_dir(o, "train");
  const auto result = harness::train(config, dir, &err);
  if (result.best_episode > 0) {
    err << "best trailing-window reward " << result.best_window_mean << " at episode "
        << result.best_episode << '\n';
  }
  err << "artifacts in " << dir.string() << '\n';
  return kExitOk;
}

int evaluate(const Options& o, std::ostream& err) {
  const auto config = experiment(o);
  const fs::path dir = output_dir(o, "evaluate");
  if (o.random_policy == !o.checkpoints.empty()) {
    throw ConfigError("evaluate", "give exactly one of --checkpoint or --random");
  }
  const auto seeds = harness::seed_snapshots(config);
  std::vector<harness::EpisodeStats> episodes;
  std::string label = "random";
  if (o.random_policy) {
    episodes = harness::evaluate_episodes(harness::RandomPolicy{}, config, seeds, o.jobs);
  } else {
    if (o.checkpoints.size() != 1) throw ConfigError("evaluate", "exactly one --checkpoint");
    const auto ckpt = harness::load_checkpoint(o.checkpoints.front());
    const auto learner = harness::restore_learner(ckpt, config.learner,
                                                  config.sim.n_intersections(),
                                                  config.sim.lane_capacity);
    label = std::string(agents::to_string(ckpt.algorithm));
    episodes = harness::evaluate_episodes(harness::GreedyPolicy(learner), config, seeds, o.jobs);
  }
  const auto metrics = harness::aggregate(episodes);
  write_text_file(dir / "eval.csv", harness::metrics_csv_header() + harness::metrics_csv_row(label, metrics));
  write_text_file(dir / "eval_episodes.csv", harness::episodes_csv(episodes));
  err << label << ": average delay " << metrics.average_delay_time << " (+-"
      << metrics.average_delay_time_std << "), mean episode reward " << metrics.mean_episode_reward
      << " (+-" << metrics.mean_episode_reward_std << ") over " << metrics.episodes
      << " episodes\n";
  return kExitOk;
}

int compare(const Options& o, std::ostream& err) {
  const auto config = experiment(o);
  const fs::path dir = output_dir(o, "compare");
  if (o.checkpoints.empty()) throw ConfigError("compare", "at least one --checkpoint required");
  std::vector<harness::CompareEntry> entries;
  for (const auto& spec : o.checkpoints) {
    const auto eq = spec.find('=');
    harness::CompareEntry e;
    e.checkpoint = harness::load_checkpoint(eq == std::string::npos ? spec : spec.substr(eq + 1));
    e.label = eq == std::string::npos ? std::string(agents::to_string(e.checkpoint.algorithm))
                                      : spec.substr(0, eq);
    entries.push_back(std::move(e));
  }
  const auto rows = harness::compare(entries, config, harness::seed_snapshots(config), o.jobs);
  write_text_file(dir / "compare.csv", harness::compare_csv(rows));
  for (const auto& r : rows) {
    err << r.rank << ". " << r.label << " (" << r.algorithm << "): average delay "
        << r.metrics.average_delay_time << ", mean episode reward "
        << r.metrics.mean_episode_reward << '\n';
  }
  return kExitOk;
}

int tabular_converge(const Options& o, std::ostream& err) {
  const auto game = tabular::make_game(o.game);
  tabular::ConvergenceConfig c;
  c.n_updates = o.updates;
  c.trace_every = o.trace_every;
  c.bootstrap = tabular::bootstrap_from_string(o.bootstrap);
  c.mean_bins = o.bins;
  c.exploration.exponent = o.epsilon_exponent;
  c.seed = o.seed.value_or(0);
  if (c.mean_bins < 2) throw ConfigError("bins", "must be >= 2");
  const auto result = tabular::run_convergence_experiment(game, c);
  for (const auto& w : result.warnings) err << "warning: " << w << '\n';
  const fs::path dir = output_dir(o, "tabular-converge");
  write_text_file(dir / "trace.csv", tabular::trace_csv(result.trace));
  if (!result.trace.empty()) {
    const auto& last = result.trace.back();
    err << o.game << " after " << last.update << " updates: err_a " << last.err_a << ", err_b "
        << last.err_b << ", gap " << last.gap_ab << '\n';
  }
  return kExitOk;
}

int grad_check(const Options& o, std::ostream& err) {
  const fs::path dir = output_dir(o, "grad-check");
  std::ostringstream csv;
  csv << "input_dim,hidden,relu_output,n_checked,n_skipped,max_rel_error\n";
  double worst = 0.0;
  for (const auto& spec : nn::grad_check_shapes()) {
    const auto r = nn::gradient_check(spec, o.seed.value_or(0), o.batch);
    std::string hidden;
    for (std::size_t i = 0; i < spec.hidden.size(); ++i) {
      if (i) hidden += 'x';
      hidden += std::to_string(spec.hidden[i]);
    }
    csv << spec.input_dim << ',' << (hidden.empty() ? "none" : hidden) << ','
        << (spec.relu_output ? 1 : 0) << ',' << r.n_checked << ','
        << r.n_skipped << ','
        << format_double(r.max_rel_error) << '\n';
    worst = std::max(worst, r.max_rel_error);
  }
  write_text_file(dir / "grad_check.csv", csv.str());
  err << "worst relative error " << worst << " (tolerance " << o.tolerance << ")\n";
  return worst < o.tolerance ? kExitOk : kExitRuntime;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& err) {
  CLI::App app{"Cooperative double Q-learning for grid traffic signal control", "codql"};
  app.require_subcommand(1);
  Options o;

  auto* gen = app.add_subcommand("gen-seeds", "Generate warm-up seed snapshots");
  add_common(gen, o, true);

  auto* tr = app.add_subcommand("train", "Train one learner");
  add_common(tr, o, true);

  auto* ev = app.add_subcommand("evaluate", "Evaluate a checkpoint or the random policy");
  add_common(ev, o, true);
  ev->add_option("--checkpoint", o.checkpoints, "Checkpoint file");
  ev->add_flag("--random", o.random_policy, "Evaluate the uniformly random policy");

  auto* cmp = app.add_subcommand("compare", "Evaluate several checkpoints on the same seeds");
  add_common(cmp, o, true);
  cmp->add_option("--checkpoint", o.checkpoints, "[label=]path, repeatable")->required();

  auto* tab = app.add_subcommand("tabular-converge", "Tabular double-Q convergence trace");
  add_common(tab, o, false);
  tab->add_option("--game", o.game, "bandit, mdp2 or small3");
  tab->add_option("--updates", o.updates, "Number of updates")->check(CLI::NonNegativeNumber);
  tab->add_option("--trace-every", o.trace_every, "Trace interval")->check(CLI::PositiveNumber);
  tab->add_option("--bootstrap", o.bootstrap, "current, next or stage_optimum");
  tab->add_option("--bins", o.bins, "Mean-action bins per coordinate");
  tab->add_option("--epsilon-exponent", o.epsilon_exponent, "Exploration decay exponent");

  auto* gc = app.add_subcommand("grad-check", "Compare backprop with finite differences");
  add_common(gc, o, false);
  gc->add_option("--batch", o.batch, "Batch size")->check(CLI::PositiveNumber);
  gc->add_option("--tolerance", o.tolerance, "Largest accepted relative error");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    err << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    err << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitConfig;
  }

  try {
    if (gen->parsed()) return gen_seeds(o, err);
    if (tr->parsed()) return train(o, err);
    if (ev->parsed()) return evaluate(o, err);
    if (cmp->parsed()) return compare(o, err);
    if (tab->parsed()) return tabular_converge(o, err);
    if (gc->parsed()) return grad_check(o, err);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitConfig;
}

}  // namespace codql::cli
