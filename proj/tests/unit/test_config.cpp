#include <gtest/gtest.h>

#include "codql/config.hpp"
#include "codql/errors.hpp"

using namespace codql;

TEST(KeyValueConfig, ParsesTablesAndValues) {
  const auto kv = KeyValueConfig::parse(R"(
seed = 3   # root seed
[sim]
grid_rows = 4
scenario = "double_ring"
[learner]
gamma = 0.9
hidden = [64, 32]
relu_output = true
)");
  EXPECT_EQ(kv.get_int("seed", 0), 3);
  EXPECT_EQ(kv.get_int("sim.grid_rows", 0), 4);
  EXPECT_EQ(kv.get_string("sim.scenario", ""), "double_ring");
  EXPECT_DOUBLE_EQ(kv.get_double("learner.gamma", 0), 0.9);
  EXPECT_EQ(kv.get_int_list("learner.hidden", {}), (std::vector<std::int64_t>{64, 32}));
  EXPECT_TRUE(kv.get_bool("learner.relu_output", false));
  EXPECT_EQ(kv.get_int("missing.key", 11), 11);
}

TEST(KeyValueConfig, TypeMismatchNamesTheKey) {
  const auto kv = KeyValueConfig::parse("[sim]\ngrid_rows = \"five\"\n");
  try {
    kv.get_int("sim.grid_rows", 0);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "sim.grid_rows");
  }
}

TEST(KeyValueConfig, UnknownKeysAreRejected) {
  const auto kv = KeyValueConfig::parse("[sim]\ngrid_rows = 3\ngird_cols = 3\n");
  kv.get_int("sim.grid_rows", 0);
  EXPECT_THROW(kv.require_all_used(), ConfigError);
}

TEST(KeyValueConfig, OverrideReplacesFileValue) {
  auto kv = KeyValueConfig::parse("[sim]\nspawn_rate = 5\n");
  kv.apply_override("sim.spawn_rate=3");
  kv.apply_override("sim.scenario=four_ring");
  EXPECT_EQ(kv.get_int("sim.spawn_rate", 0), 3);
  EXPECT_EQ(kv.get_string("sim.scenario", ""), "four_ring");
  EXPECT_THROW(kv.apply_override("no_equals_sign"), ConfigError);
}

TEST(KeyValueConfig, MalformedLinesThrow) {
  EXPECT_THROW(KeyValueConfig::parse("[sim\n"), ConfigError);
  EXPECT_THROW(KeyValueConfig::parse("just words\n"), ConfigError);
}

TEST(KeyValueConfig, CanonicalTextRoundTrips) {
  const auto kv = KeyValueConfig::parse("b = 2\n[z]\nx = \"s\"\n[a]\ny = [1, 2]\n");
  const auto again = KeyValueConfig::parse(kv.to_text());
  EXPECT_EQ(again.to_text(), kv.to_text());
  EXPECT_EQ(again.get_string("z.x", ""), "s");
}
