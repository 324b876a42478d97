#include <gtest/gtest.h>

#include <fstream>

#include "codql/errors.hpp"
#include "codql/experiment_config.hpp"
#include "tiny_config.hpp"

using namespace codql;
using namespace codql::harness;

TEST(ExperimentConfig, DefaultsMatchLearnerAndSim) {
  const auto c = load_experiment_config("", {});
  EXPECT_EQ(c.sim, sim::SimConfig{});
  EXPECT_EQ(c.learner.batch_size, 1024);
  EXPECT_DOUBLE_EQ(c.learner.gamma, 0.95);
  EXPECT_DOUBLE_EQ(c.learner.lr, 1e-4);
  EXPECT_EQ(c.n_train_episodes, 200);
}

TEST(ExperimentConfig, EchoRoundTrips) {
  auto c = test::tiny_config(17);
  c.learner.alpha_reward = 0.25;
  c.topology = env::TopologyMode::Adjacent4;
  const auto back = ExperimentConfig::from_kv(KeyValueConfig::parse(c.to_text()));
  EXPECT_EQ(back.to_text(), c.to_text());
  EXPECT_EQ(back.digest(), c.digest());
  EXPECT_EQ(back.rng_seed, 17u);
  EXPECT_EQ(back.learner.hidden, std::vector<int>{8});
  ASSERT_TRUE(back.learner.alpha_reward);
  EXPECT_DOUBLE_EQ(*back.learner.alpha_reward, 0.25);
}

TEST(ExperimentConfig, OverrideEqualsFileEdit) {
  const auto dir = test::scratch_dir("cfg");
  std::ofstream(dir / "a.toml") << "seed = 3\n[sim]\nspawn_rate = 2\n[learner]\nlr = 0.001\n";
  std::ofstream(dir / "b.toml") << "seed = 3\n[sim]\nspawn_rate = 4\n[learner]\nlr = 0.001\n";
  const auto a = load_experiment_config(dir / "a.toml", {"sim.spawn_rate=4"});
  const auto b = load_experiment_config(dir / "b.toml", {});
  EXPECT_EQ(a.to_text(), b.to_text());
  EXPECT_EQ(a.sim.spawn_rate, 4);
  EXPECT_EQ(a.sim.rng_seed, 3u);
  std::filesystem::remove_all(dir);
}

TEST(ExperimentConfig, DigestTracksChanges) {
  const auto a = test::tiny_config();
  auto b = a;
  b.learner.tau = 0.02;
  EXPECT_NE(a.digest(), b.digest());
}

TEST(ExperimentConfig, RejectsBadInput) {
  EXPECT_THROW(load_experiment_config("", {"learner.gama=0.9"}), ConfigError);
  EXPECT_THROW(load_experiment_config("", {"schema=2"}), ConfigError);
  EXPECT_THROW(load_experiment_config("", {"learner.algorithm=sarsa"}), ConfigError);
  EXPECT_THROW(load_experiment_config("", {"train.episodes=-1"}), ConfigError);
  EXPECT_THROW(load_experiment_config("", {"sim.grid_rows=0"}), ConfigError);
  EXPECT_THROW(load_experiment_config("/nonexistent/x.toml", {}), ConfigError);
  try {
    load_experiment_config("", {"env.topology=ring"});
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("env.topology"), std::string::npos);
  }
}
