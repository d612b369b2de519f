// Scenario configuration: road, lights, ego, traffic and planner settings.
//
// Scenarios are JSON documents (see docs/scenario_schema.md). Loading
// validates every field and reports the first problem as a ConfigError whose
// field() is a dotted path such as "road.lane_width" or "npcs[2].lane".

#ifndef ECOLANE_SCENARIO_H_
#define ECOLANE_SCENARIO_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ecolane/dynamics.h"
#include "ecolane/energy.h"
#include "ecolane/planner_lc.h"
#include "ecolane/planner_lk.h"
#include "ecolane/world.h"

namespace ecolane {

inline constexpr int kScenarioSchemaVersion = 1;

/// Intelligent-driver car-following parameters of one NPC.
struct IdmParams {
  double desired_speed = 13.0;  // m/s
  double time_headway = 1.5;    // s
  double min_gap = 2.0;         // m, bumper to bumper at standstill
  double max_accel = 1.5;       // m/s^2
  double comfort_decel = 2.0;   // m/s^2
  double exponent = 4.0;
};

void validate(const IdmParams& idm, std::string_view path = "idm");

/// Uniform ranges the per-vehicle IDM parameters are drawn from. The desired
/// speed is a factor of the legal speed at the spawn point.
struct IdmRanges {
  double desired_speed_factor_min = 0.9;
  double desired_speed_factor_max = 1.05;
  double time_headway_min = 1.0;
  double time_headway_max = 1.8;
  double max_accel_min = 1.0;
  double max_accel_max = 2.0;
  double comfort_decel = 2.0;
  double min_gap = 2.0;
  double exponent = 4.0;
};

struct NpcSpawn {
  AgentState state;  // e_y and e_psi are derived from the lane
  /// Explicit parameters; drawn from the scenario RNG when absent.
  std::optional<IdmParams> idm;
};

/// Random NPCs added on top of the explicit spawns, drawn from the seed.
struct RandomTraffic {
  std::vector<int> count_per_lane;
  double s_min = 0.0;  // m
  double s_max = 0.0;  // m
  /// Overrides the desired-speed factor range of IdmRanges when set.
  std::optional<std::pair<double, double>> desired_speed_factor;
};

struct ScenarioConfig {
  int schema_version = kScenarioSchemaVersion;
  std::string name;
  std::uint64_t seed = 0;
  double run_duration = 900.0;  // s
  /// Speed floor used when estimating arrival times, so a stopped ego can
  /// still be judged able to clear a green light.
  double eta_min_speed = 2.0;  // m/s

  RoadNetwork road;
  std::vector<TrafficLightSchedule> lights;
  AgentState ego;  // e_y and e_psi are derived from the lane
  std::vector<NpcSpawn> npcs;
  std::optional<RandomTraffic> traffic;
  IdmRanges npc_behavior;

  VehicleParams vehicle;
  EnergyModelParams energy;
  LkConfig lk;
  LcConfig lc;
};

/// Throws ConfigError on the first broken invariant.
void validate(const ScenarioConfig& config);

/// Parses and validates a scenario. Unknown keys are rejected so that typos
/// do not silently fall back to defaults.
ScenarioConfig parse_scenario(std::string_view json_text);

/// Throws ConfigError with field "file" if the file cannot be read.
ScenarioConfig load_scenario(const std::filesystem::path& path);

/// Canonical JSON serialization (sorted keys, every field explicit).
std::string to_json(const ScenarioConfig& config);

/// 64-bit FNV-1a of the canonical serialization, as 16 hex digits.
std::string config_hash(const ScenarioConfig& config);

std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace ecolane

#endif  // ECOLANE_SCENARIO_H_
