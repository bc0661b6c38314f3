#include <catch2/catch_amalgamated.hpp>

#include "dial/config.hpp"
#include "dial/scenario.hpp"

using namespace dial;

TEST_CASE("config space defaults cover the 42-point grid") {
  ConfigSpace theta = ConfigSpace::defaults();
  REQUIRE(theta.size() == 42);
  REQUIRE(theta.contains({256, 8}));
  REQUIRE(theta.contains({16, 1}));
  REQUIRE(theta.contains({1024, 32}));
  REQUIRE_FALSE(theta.contains({100, 8}));
  REQUIRE_FALSE(theta.contains({256, 3}));
}

TEST_CASE("config space iteration is ascending window then inflight") {
  ConfigSpace theta({64, 16}, {2, 1});
  auto all = theta.all();
  REQUIRE(all.size() == 4);
  CHECK(all[0] == Configuration{16, 1});
  CHECK(all[1] == Configuration{16, 2});
  CHECK(all[2] == Configuration{64, 1});
  CHECK(all[3] == Configuration{64, 2});
}

TEST_CASE("config space rejects empty or zero dimensions") {
  CHECK_THROWS_AS(ConfigSpace({}, {1}), std::invalid_argument);
  CHECK_THROWS_AS(ConfigSpace({16}, {0}), std::invalid_argument);
}

TEST_CASE("scenario json round-trips and hashes stably") {
  Scenario s;
  s.seed = 7;
  s.per_rpc_overhead = 0.001;
  auto j = to_json(s);
  Scenario back = scenario_from_json(j);
  CHECK(back.seed == 7);
  CHECK(back.per_rpc_overhead == 0.001);
  CHECK(scenario_hash(back) == scenario_hash(s));
  Scenario other = s;
  other.disk_bandwidth *= 2;
  CHECK(scenario_hash(other) != scenario_hash(s));
}

TEST_CASE("scenario validation rejects bad values") {
  Scenario s;
  s.dirty_high_watermark = 1.5;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  Scenario s2;
  s2.default_config = {100, 8};
  CHECK_THROWS_AS(s2.validate(), std::invalid_argument);
}
