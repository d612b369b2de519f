// SPaT-informed lane selection.
//
// Each lane gets a PASS/NONPASS verdict for the nearest traffic light from
// the light's phase, its remaining time and an estimate of when the ego
// would reach the stop line. The target lane is then picked from the
// per-lane verdicts.

#ifndef ECOLANE_LANE_SELECTOR_H_
#define ECOLANE_LANE_SELECTOR_H_

#include <limits>
#include <optional>
#include <span>
#include <string_view>

#include "ecolane/world.h"

namespace ecolane {

/// Returned by eta_to_light when the ego would never reach the light.
inline constexpr double kInfiniteEta = std::numeric_limits<double>::infinity();

enum class PassVerdict { kPass, kNonPass };

std::string_view to_string(PassVerdict verdict);

struct PassDecision {
  PassVerdict value = PassVerdict::kNonPass;
  double eta = kInfiniteEta;  // s
};

struct LaneDecision {
  int target_lane = 0;
  bool change_requested = false;
};

struct FrontVehicle {
  double s = 0.0;  // m
  double v = 0.0;  // m/s
};

/// Estimated time for the ego to reach the stop line at `stop_line_s`.
///
/// Both vehicles keep constant speed, except that an ego faster than its
/// leader drops to the leader's speed on catching up (positions coincide).
/// Returns 0 if the ego is already at or past the line and kInfiniteEta if
/// it can never get there (stopped ego, or queued behind a stopped leader).
/// Throws std::invalid_argument if the leader is not ahead of the ego.
double eta_to_light(double s, double v, std::optional<FrontVehicle> front,
                    double stop_line_s);

/// GREEN passes iff the remaining green exceeds the ETA; RED passes iff it
/// will have turned green by arrival; YELLOW never passes.
PassDecision pass_decision(const SpatSnapshot& spat, double eta);

/// One decision per lane, indexed by lane. Exactly one PASS lane wins; no
/// PASS keeps the current lane; several PASS lanes go to the smallest ETA,
/// ties broken toward the current lane and then the lowest index.
LaneDecision select_lane(std::span<const PassDecision> per_lane, int current_lane);

}  // namespace ecolane

#endif  // ECOLANE_LANE_SELECTOR_H_
