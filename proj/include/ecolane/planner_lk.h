// Lane-keeping trajectory planner.
//
// Plans a 5 s speed profile along the current lane center by solving
//
//   min  w_e * sum max(P(T_i, v_i), 0) * scale             energy
//      + w_j * sum (v_i - 2 v_{i+1} + v_{i+2})^2            jerk
//      + w_a * sum (v_i - v_{i+1})^2                         acceleration
//      + w_t * sum (v_i - v_ref,i)^2                         tracking
//   s.t. longitudinal forward-Euler dynamics, pinned first input,
//        0 <= v <= v_max,  T_brake <= T <= T_motor,
//        s_front,i - s_i >= d_safe + (v_i - v_front) t_gap
//
// The clamp max(P, 0) is written as an epigraph slack per stage. The
// headway constraint carries an l1-penalized slack so that a plan is always
// returned, even when a cut-in makes it infeasible at the start; the slack is
// zero whenever the hard constraint can be met.

#ifndef ECOLANE_PLANNER_LK_H_
#define ECOLANE_PLANNER_LK_H_

#include <optional>
#include <vector>

#include "ecolane/dynamics.h"
#include "ecolane/energy.h"
#include "ecolane/nlp.h"
#include "ecolane/world.h"

namespace ecolane {

struct Waypoint {
  double t = 0.0;          // s, relative to the plan start
  double s = 0.0;          // m
  double v = 0.0;          // m/s
  double e_y = 0.0;        // m
  double e_psi = 0.0;      // rad
  double heading = 0.0;    // rad, road heading + e_psi
  double curvature = 0.0;  // 1/m
  double accel = 0.0;      // m/s^2
};

enum class PlanKind { kLaneKeeping, kLaneChange, kEmergency };

struct PlannedTrajectory {
  PlanKind kind = PlanKind::kLaneKeeping;
  std::vector<Waypoint> waypoints;    // steps() + 1 entries, 0.1 s apart
  std::vector<ControlInput> inputs;   // steps() entries
  int steps() const { return static_cast<int>(inputs.size()); }
};

struct LkWeights {
  double w_energy = 1.0;
  double w_smooth_accel = 1.0;
  double w_smooth_jerk = 1.0;
  double w_track = 1.0;
  /// Multiplies stage power (W) inside the cost. Unset means 1 / c2.
  std::optional<double> energy_scale;
};

struct LkConfig {
  LkWeights weights;
  double d_safe = 10.0;           // m
  double t_gap = 1.0;             // s
  double headway_penalty = 1e4;   // cost per meter of headway slack
  double comfort_decel = 2.0;     // m/s^2, shapes the speed reference
  nlp::Settings solver{1e-6, 300};
};

void validate(const LkConfig& config, std::string_view path = "planner.lk");

/// Constant-speed prediction of the preceding vehicle (or a virtual stopped
/// vehicle standing at a stop line).
struct FrontVehiclePrediction {
  double s0 = 0.0;  // m at plan start
  double v = 0.0;   // m/s
  double s_at(int step, double dt = kPlanningStep) const { return s0 + v * step * dt; }
};

/// Per-step speed reference for steps 0..N-1.
///
/// Starts from the legal speed and, when a leader is known, caps it by the
/// speed from which the leader's constant-speed track can be joined at a
/// comfortable deceleration: v_front + sqrt(2 b (gap - d_safe - v_front t_gap)).
/// The cap equals v_front once the gap has shrunk to its headway value. A
/// stop line is passed in as a stopped leader.
std::vector<double> build_reference(double s0, double legal_speed,
                                    const std::optional<FrontVehiclePrediction>& front,
                                    const LkConfig& config, int steps = kHorizonSteps);

struct LkRequest {
  double s0 = 0.0;
  double v0 = 0.0;
  double u0 = 0.0;         // N m, input currently applied; pinned
  double lane_offset = 0.0;
  std::optional<FrontVehiclePrediction> front;
  std::vector<double> v_ref;  // steps entries
  const RoadNetwork* road = nullptr;  // curvature lookup; straight if null
  int steps = kHorizonSteps;
};

enum class LkStatus {
  kOptimal,    // all constraints hard
  kSoftened,   // headway slack was needed
  kEmergency,  // solver failed; maximum braking profile
};

struct LkResult {
  PlannedTrajectory plan;
  LkStatus status = LkStatus::kOptimal;
  nlp::Status solver_status = nlp::Status::kOptimal;
  int iterations = 0;
  double solve_seconds = 0.0;
  double max_headway_slack = 0.0;  // m
  double pinned_input = 0.0;       // N m after clamping to what is feasible
  std::vector<double> epigraph;    // W, per stage; empty without energy cost
};

LkResult plan_lk(const LkRequest& request, const LkConfig& config,
                 const VehicleParams& vehicle, const EnergyModelParams& energy);

/// Maximum braking from the pinned input onward, down to standstill.
PlannedTrajectory emergency_profile(const LkRequest& request, double pinned_input,
                                    const VehicleParams& vehicle);

/// Model energy (J) of a plan: clamped stage power integrated over its inputs.
double planned_energy(const PlannedTrajectory& plan, const EnergyModelParams& energy);

/// Fills heading, curvature and acceleration of each waypoint from the
/// states and inputs.
void annotate_waypoints(PlannedTrajectory& plan, const RoadNetwork* road,
                        const VehicleParams& vehicle);

}  // namespace ecolane

#endif  // ECOLANE_PLANNER_LK_H_
