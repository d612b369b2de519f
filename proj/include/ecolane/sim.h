// Deterministic closed-loop simulation of one ego vehicle among IDM traffic.
//
// The world advances in 0.1 s ticks. Every second the ego decides on a lane
// and plans a 5 s trajectory; between plans it executes the planned
// waypoints exactly. NPCs follow the intelligent driver model, stop for red
// and yellow lights and never change lanes.

#ifndef ECOLANE_SIM_H_
#define ECOLANE_SIM_H_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ecolane/lane_selector.h"
#include "ecolane/scenario.h"

namespace ecolane {

inline constexpr double kSimStep = 0.1;    // s
inline constexpr double kReplanPeriod = 1.0;  // s

enum class Policy { kBaseline, kProposed };

std::string_view to_string(Policy policy);

/// Accepts "baseline" or "proposed"; throws std::invalid_argument otherwise.
Policy parse_policy(std::string_view text);

/// What a car-following vehicle reacts to: a bumper-to-bumper gap and the
/// speed of whatever closes it (0 for a stop line).
struct Obstacle {
  double gap = 0.0;  // m
  double v = 0.0;    // m/s
};

/// IDM acceleration, floored at -9 m/s^2.
double idm_acceleration(const IdmParams& idm, double v, std::optional<Obstacle> obstacle);

/// One tick of an NPC: IDM acceleration, speed clamped at zero, trapezoidal
/// position update. Lateral state is untouched.
AgentState step_npc(const AgentState& npc, const IdmParams& idm,
                    std::optional<Obstacle> obstacle, double dt = kSimStep);

/// The stop line an NPC reacts to: the nearest light ahead in its lane if it
/// is red, or yellow and the NPC can still stop at its comfortable
/// deceleration.
std::optional<Obstacle> npc_light_obstacle(const AgentState& npc, const IdmParams& idm,
                                           std::span<const TrafficLightSchedule> lights,
                                           double t);

struct Npc {
  AgentState state;
  IdmParams idm;
};

/// Explicit spawns plus random traffic, with IDM parameters drawn from `rng`.
/// Random vehicles are placed by rejection sampling so nothing overlaps.
std::vector<Npc> spawn_npcs(const ScenarioConfig& config, std::mt19937_64& rng);

/// A stop is a maximal run of samples with v < 0.1 m/s lasting >= 0.5 s.
int count_stops(std::span<const double> speeds, double dt = kSimStep);

struct TraceRow {
  double t = 0.0;
  double s = 0.0;
  double v = 0.0;
  double e_y = 0.0;
  double e_psi = 0.0;
  int lane = 0;
  double wheel_torque = 0.0;
  double curvature = 0.0;
  double power = 0.0;  // W, clamped stage cost
  std::string maneuver;  // LK, LC or EM
  int target_lane = 0;
  std::vector<Phase> phases;  // one per light
  std::vector<PassDecision> decisions;  // one per lane; empty without a light
};

struct RunMetrics {
  std::string policy;
  std::uint64_t seed = 0;
  std::string config_hash;
  bool completed = false;       // reached the end of the route
  double energy_j = 0.0;
  double mpge = 0.0;            // 0 if nothing was driven
  int stops = 0;
  double travel_time = 0.0;     // s
  double distance = 0.0;        // m
  int plans = 0;
  int lane_changes = 0;         // accepted lane-change plans
  int lc_fallbacks = 0;
  int softened_plans = 0;       // lane keeping with headway slack
  int emergency_plans = 0;
  int red_light_violations = 0;
  /// Largest violation of the headway rule against the real leader at any
  /// tick (0 if never violated).
  double max_headway_violation = 0.0;
  /// Smallest bumper gap to any vehicle sharing the ego's lane.
  double min_bumper_gap = 0.0;
  /// Smallest certified clearance over accepted lane changes (0 if none).
  double min_lc_clearance = 0.0;
  double max_plan_seconds = 0.0;
};

struct RunResult {
  RunMetrics metrics;
  std::vector<TraceRow> trace;
};

/// Thrown when the run cannot continue, with the trace so far.
class RunAborted : public std::runtime_error {
 public:
  RunAborted(const std::string& what, std::vector<TraceRow> trace)
      : std::runtime_error(what), trace_(std::move(trace)) {}
  const std::vector<TraceRow>& trace() const { return trace_; }

 private:
  std::vector<TraceRow> trace_;
};

/// Baseline: lane keeping with no energy term, no lane changes; the own-lane
/// PASS/NONPASS rule decides red-light stops. Proposed: the lane selector
/// runs every second, lane changes are planned on request and latched until
/// the ego settles in the target lane, and lane keeping includes the energy
/// cost. Validates the scenario first (ConfigError).
RunResult run(const ScenarioConfig& config, Policy policy);

/// Delimited per-tick trace, headed by provenance comments.
void write_trace(std::ostream& out, const RunResult& result, std::size_t light_count);

/// Metrics as a JSON object.
std::string metrics_json(const RunMetrics& metrics);

}  // namespace ecolane

#endif  // ECOLANE_SIM_H_
