#include "via/config.hpp"

#include <gtest/gtest.h>

namespace {

using via::Config;
using via::ConfigError;

TEST(Config, ParsesSectionsCommentsAndTypes) {
  auto cfg = Config::from_string(
      "top = 3\n"
      "# a comment line\n"
      "[plant]\n"
      "mass = 1.5   # trailing comment\n"
      "name = pendulum\n"
      "enabled = true\n"
      "values = 1, 2.5, -3\n");
  EXPECT_EQ(cfg.get_int("top"), 3);
  EXPECT_DOUBLE_EQ(cfg.get_double("plant.mass"), 1.5);
  EXPECT_EQ(cfg.get_string("plant.name"), "pendulum");
  EXPECT_TRUE(cfg.get_bool("plant.enabled", false));
  const auto values = cfg.get_double_list("plant.values");
  ASSERT_EQ(values.size(), 3u);
  EXPECT_DOUBLE_EQ(values[1], 2.5);
  cfg.require_all_consumed();
}

TEST(Config, FallbacksAndMissingKeys) {
  auto cfg = Config::from_string("a = 1\n");
  EXPECT_DOUBLE_EQ(cfg.get_double("missing", 7.5), 7.5);
  EXPECT_THROW(cfg.get_double("missing"), ConfigError);
  EXPECT_THROW(cfg.get_string("nope"), ConfigError);
}

TEST(Config, RejectsMalformedInput) {
  EXPECT_THROW(Config::from_string("just a line\n"), ConfigError);
  EXPECT_THROW(Config::from_string("[unclosed\nkey = 1\n"), ConfigError);
  EXPECT_THROW(Config::from_string("a = 1\na = 2\n"), ConfigError);
  auto cfg = Config::from_string("x = notanumber\n");
  EXPECT_THROW(cfg.get_double("x"), ConfigError);
  auto cfg2 = Config::from_string("n = 1.5\n");
  EXPECT_THROW(cfg2.get_int("n"), ConfigError);
}

TEST(Config, UnknownKeysAreRejected) {
  auto cfg = Config::from_string("known = 1\n[extra]\nmystery = 2\n");
  EXPECT_EQ(cfg.get_int("known"), 1);
  try {
    cfg.require_all_consumed();
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("extra.mystery"), std::string::npos);
  }
}

}  // namespace
