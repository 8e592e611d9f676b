#include "travplant/config.hpp"

#include <doctest.h>

#include <sstream>

using namespace travplant;

TEST_SUITE("config") {
  TEST_CASE("defaults are complete and resolved text round trips") {
    const RunConfig d;
    const auto keys = RunConfig::knownKeys();
    CHECK(std::is_sorted(keys.begin(), keys.end()));
    std::istringstream in(d.resolved());
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) ++n;
    CHECK(n == keys.size());
    CHECK(RunConfig::parse(d.resolved()) == d);
  }

  TEST_CASE("parse applies assignments and ignores comments") {
    const RunConfig c = RunConfig::parse("# header\n\nseed = 42  # trailing\nnav.mode=proposed\n");
    CHECK(c.getSeed() == 42);
    CHECK(c.get("nav.mode") == "proposed");
    CHECK(RunConfig::parse(c.resolved()) == c);
  }

  TEST_CASE("unknown keys and bad values are config errors") {
    CHECK_THROWS_AS(RunConfig::parse("no.such.key = 1\n"), ConfigError);
    CHECK_THROWS_AS(RunConfig::parse("seed\n"), ConfigError);
    RunConfig c;
    CHECK_THROWS_AS(c.set("world.num_rows", "2.5"), ConfigError);
    CHECK_THROWS_AS(c.set("world.row_length", "abc"), ConfigError);
    CHECK_THROWS_AS(c.set("world.row_length", "nan"), ConfigError);
    CHECK_THROWS_AS(c.set("nav.mode", "sideways"), ConfigError);
    CHECK_THROWS_AS(c.set("nav.reset_on_stuck", "yes"), ConfigError);
    CHECK_THROWS_AS(c.set("seed", "-1"), ConfigError);
    CHECK_THROWS_AS(c.get("missing"), ConfigError);
    CHECK(c == RunConfig{});
  }

  TEST_CASE("typed views reflect the keys") {
    RunConfig c;
    c.apply("world.num_rows=4");
    c.apply("nav.dt=0.2");
    c.apply("fusion.trav_bins=12");
    CHECK(c.scenario().num_rows == 4);
    CHECK(c.navParams().dt == 0.2);
    CHECK(c.travBins() == 12);
    CHECK(c.fusion().eviction_frames == 10);
    c.apply("fusion.trav_bins=0");
    CHECK_THROWS_AS(c.travBins(), ConfigError);
    c.apply("nav.dt=0");
    CHECK_THROWS_AS(c.navParams(), ConfigError);
  }

  TEST_CASE("missing config file is an input error") {
    CHECK_THROWS_AS(RunConfig::load("/nonexistent/run.cfg"), InvalidInput);
  }
}
