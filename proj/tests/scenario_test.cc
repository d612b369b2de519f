#include "ecolane/scenario.h"

#include <gtest/gtest.h>

#include <string>

namespace ecolane {
namespace {

constexpr const char* kMinimal = R"({
  "schema_version": 1,
  "name": "minimal",
  "seed": 42,
  "road": {"route_length": 800, "speed_limits": [{"s_start": 0, "speed": 13.4}]},
  "lights": [{"stop_line_s": 300, "green": 30, "yellow": 4, "red": 26, "lanes": [0, 1]}],
  "ego": {"s": 0, "v": 10, "lane": 0},
  "npcs": [{"s": 80, "v": 8, "lane": 0, "idm": {"desired_speed": 8}},
           {"s": 120, "v": 12, "lane": 1}]
})";

std::string with(std::string text, const std::string& from, const std::string& to) {
  const auto at = text.find(from);
  EXPECT_NE(at, std::string::npos) << from;
  return text.replace(at, from.size(), to);
}

std::string error_field(const std::string& text) {
  try {
    parse_scenario(text);
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "<no error>";
}

TEST(ScenarioTest, ParsesMinimalDocumentWithDefaults) {
  const ScenarioConfig c = parse_scenario(kMinimal);
  EXPECT_EQ(c.name, "minimal");
  EXPECT_EQ(c.seed, 42u);
  EXPECT_EQ(c.road.lane_count, 2);
  EXPECT_DOUBLE_EQ(c.road.lane_width, 3.5);
  ASSERT_EQ(c.lights.size(), 1u);
  EXPECT_DOUBLE_EQ(c.lights[0].cycle_offset, 0.0);
  ASSERT_EQ(c.npcs.size(), 2u);
  ASSERT_TRUE(c.npcs[0].idm.has_value());
  EXPECT_DOUBLE_EQ(c.npcs[0].idm->desired_speed, 8.0);
  EXPECT_FALSE(c.npcs[1].idm.has_value());
  // Agents sit on their lane centers.
  EXPECT_DOUBLE_EQ(c.npcs[1].state.e_y, 3.5);
  EXPECT_DOUBLE_EQ(c.ego.e_y, 0.0);
  // Lane-change bounds follow the road.
  EXPECT_DOUBLE_EQ(c.lc.bounds.e_y_min, -1.75);
  EXPECT_DOUBLE_EQ(c.lc.bounds.e_y_max, 5.25);
}

TEST(ScenarioTest, RoundTripPreservesEverything) {
  const ScenarioConfig a = parse_scenario(kMinimal);
  const std::string text = to_json(a);
  const ScenarioConfig b = parse_scenario(text);
  EXPECT_EQ(to_json(b), text);
  EXPECT_EQ(config_hash(a), config_hash(b));
}

TEST(ScenarioTest, HashIsStableAndSensitive) {
  const ScenarioConfig a = parse_scenario(kMinimal);
  EXPECT_EQ(config_hash(a).size(), 16u);
  EXPECT_EQ(config_hash(a), config_hash(parse_scenario(kMinimal)));
  ScenarioConfig b = a;
  b.lights[0].green += 1.0;
  EXPECT_NE(config_hash(a), config_hash(b));
  b = a;
  b.seed += 1;
  EXPECT_NE(config_hash(a), config_hash(b));
}

TEST(ScenarioTest, Fnv1aKnownValues) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ull);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cull);
}

TEST(ScenarioTest, ErrorsNameTheField) {
  const std::string base = kMinimal;
  EXPECT_EQ(error_field(with(base, R"("route_length": 800)",
                             R"("route_length": 800, "lane_width": -1)")),
            "road.lane_width");
  EXPECT_EQ(error_field(with(base, R"("schema_version": 1)", R"("schema_version": 2)")),
            "schema_version");
  EXPECT_EQ(error_field(with(base, R"("name": "minimal")", R"("name": "minimal", "sede": 1)")),
            "sede");
  EXPECT_EQ(error_field(with(base, R"("s": 120, "v": 12, "lane": 1)",
                             R"("s": 120, "v": 12, "lane": 5)")),
            "npcs[1].lane");
  EXPECT_EQ(error_field(with(base, R"("desired_speed": 8)", R"("desired_speed": 0)")),
            "npcs[0].idm.desired_speed");
  EXPECT_EQ(error_field(with(base, R"("green": 30)", R"("green": "long")")), "lights[0].green");
  EXPECT_EQ(error_field(with(base, R"("s": 120, "v": 12, "lane": 1)",
                             R"("s": 2, "v": 12, "lane": 0)")),
            "npcs[1].s");
  EXPECT_EQ(error_field(with(base, R"("seed": 42)", R"("seed": -3)")), "seed");
  EXPECT_EQ(error_field("{not json"), "$");
}

TEST(ScenarioTest, MissingFileIsReported) {
  try {
    load_scenario("/nonexistent/scenario.json");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "file");
  }
}

TEST(ScenarioTest, TrafficBlockIsChecked) {
  const std::string base = kMinimal;
  const std::string ok = with(base, R"("ego":)",
                              R"("traffic": {"count_per_lane": [2, 3], "s_range": [100, 700]},
  "ego":)");
  const ScenarioConfig c = parse_scenario(ok);
  ASSERT_TRUE(c.traffic.has_value());
  EXPECT_EQ(c.traffic->count_per_lane, (std::vector<int>{2, 3}));
  EXPECT_EQ(error_field(with(ok, "[2, 3]", "[2]")), "traffic.count_per_lane");
  EXPECT_EQ(error_field(with(ok, "[100, 700]", "[700, 100]")), "traffic.s_range");
}

}  // namespace
}  // namespace ecolane
