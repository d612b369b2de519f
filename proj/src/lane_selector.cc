#include "ecolane/lane_selector.h"

#include <cmath>
#include <stdexcept>

namespace ecolane {

std::string_view to_string(PassVerdict verdict) {
  return verdict == PassVerdict::kPass ? "PASS" : "NONPASS";
}

double eta_to_light(double s, double v, std::optional<FrontVehicle> front,
                    double stop_line_s) {
  const double distance = stop_line_s - s;
  if (distance <= 0.0) return 0.0;
  if (!(v > 0.0)) return kInfiniteEta;
  if (front && !(front->s > s)) {
    throw std::invalid_argument("preceding vehicle must be ahead of the ego");
  }
  if (!front || v <= front->v) return distance / v;

  const double catch_up_time = (front->s - s) / (v - front->v);
  const double catch_up_distance = v * catch_up_time;
  if (catch_up_distance >= distance) return distance / v;
  if (!(front->v > 0.0)) return kInfiniteEta;
  return catch_up_time + (distance - catch_up_distance) / front->v;
}

PassDecision pass_decision(const SpatSnapshot& spat, double eta) {
  PassDecision decision;
  decision.eta = eta;
  if (std::isinf(eta)) {
    decision.value = PassVerdict::kNonPass;
    return decision;
  }
  switch (spat.phase) {
    case Phase::kGreen:
      decision.value = spat.remaining_time > eta ? PassVerdict::kPass : PassVerdict::kNonPass;
      break;
    case Phase::kRed:
      decision.value = spat.remaining_time > eta ? PassVerdict::kNonPass : PassVerdict::kPass;
      break;
    case Phase::kYellow:
      decision.value = PassVerdict::kNonPass;
      break;
  }
  return decision;
}

LaneDecision select_lane(std::span<const PassDecision> per_lane, int current_lane) {
  int best = -1;
  for (int lane = 0; lane < static_cast<int>(per_lane.size()); ++lane) {
    if (per_lane[lane].value != PassVerdict::kPass) continue;
    if (best < 0) {
      best = lane;
      continue;
    }
    const double eta = per_lane[lane].eta;
    const double best_eta = per_lane[best].eta;
    if (eta < best_eta || (eta == best_eta && lane == current_lane)) best = lane;
  }
  LaneDecision decision;
  decision.target_lane = best < 0 ? current_lane : best;
  decision.change_requested = decision.target_lane != current_lane;
  return decision;
}

}  // namespace ecolane
