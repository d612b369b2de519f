// Lane-change trajectory planner.
//
// Solves one nonlinear program per maneuver over the full Frenet model:
//
//   min  sum (dv)^2 + (d2v)^2 + rho_k1 sum (dkappa)^2 + rho_k2 sum (d2kappa)^2
//        + rho_y (e_y,N - y_target)^2 + rho_psi e_psi,N^2
//   s.t. forward-Euler dynamics, pinned first input,
//        speed, torque, lateral, heading, curvature and |v^2 kappa| bounds,
//        dual collision-avoidance constraints against every surrounding
//        vehicle at every step,
//        |e_y,N - y_target| <= 0.1, |e_psi,N| <= 0.1, s_N inside a free gap.
//
// Surrounding vehicles (SVs) are axis-aligned rectangles in the (s, e_y)
// plane, enlarged by the ego footprint so the ego can be treated as a point.
// Collision avoidance uses the dual form of the point-to-polytope distance:
// with A p <= b describing the rectangle, any lambda >= 0 with
// |A' lambda| <= 1 gives (A p - b)' lambda <= dist(p, rectangle), so
// requiring (A p - b)' lambda >= d_min certifies a clearance of d_min.

#ifndef ECOLANE_PLANNER_LC_H_
#define ECOLANE_PLANNER_LC_H_

#include <Eigen/Core>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ecolane/dynamics.h"
#include "ecolane/nlp.h"
#include "ecolane/planner_lk.h"
#include "ecolane/world.h"

namespace ecolane {

struct LcWeights {
  double rho_k1 = 1.0;
  double rho_k2 = 10.0;
  double rho_y = 10.0;
  double rho_psi = 10.0;
};

struct LcBounds {
  double e_y_min = -1.75;  // m, outer road edges
  double e_y_max = 5.25;
  double e_psi_bnd = 0.5 * 3.14159265358979323846;  // rad
  double kappa_bnd = 0.1;  // 1/m
  double a_y_bnd = 3.0;    // m/s^2
  double terminal_e_y = 0.1;    // m
  double terminal_e_psi = 0.1;  // rad

  static LcBounds for_road(const RoadNetwork& road);
};

/// Enlarged footprint of one SV: {p : A p <= b} in the (s, e_y) plane, with
/// rows of A equal to +s, -s, +e_y, -e_y. The SV moves at constant speed
/// along s, so b depends on the prediction step.
struct SvPolytope {
  double s = 0.0;  // m, center at step 0
  double e_y = 0.0;
  double v = 0.0;  // m/s
  double half_length = 0.0;
  double half_width = 0.0;

  static Eigen::Matrix<double, 4, 2> a();
  Eigen::Vector4d b_at(int step, double dt = kPlanningStep) const;
  double center_s_at(int step, double dt = kPlanningStep) const { return s + v * step * dt; }
};

/// Minkowski sum of the SV and ego rectangles, centered on the SV.
SvPolytope enlarge_sv(const AgentState& sv, double ego_length, double ego_width);

/// Euclidean distance from (s, e_y) to the rectangle at a prediction step;
/// zero inside.
double point_to_rectangle_distance(const SvPolytope& poly, int step, double s, double e_y);

struct FreeSpaceGap {
  double s_min_free = 0.0;  // m, bounds on the terminal ego position
  double s_max_free = 0.0;
  int lane = 0;
};

/// Raised when no gap in the target lane is long enough to enter.
class NoFreeSpaceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Gap selection rule for the terminal set.
///
/// Gaps lie between consecutive target-lane SVs at the end of the horizon
/// (constant-speed rollout), each SV keeping a clearance of
/// max(d_safe, (L_sv + L_ego) / 2 + d_min) on both sides, and are clipped to
/// the terminal positions the ego can reach within its acceleration limits.
/// The gap containing the ego's constant-speed projection is preferred; if it
/// is shorter than max(2 d_safe, L_ego + 2 d_min), the longest gap wins,
/// ties going to the one whose midpoint needs the smaller speed change.
struct FreeSpacePolicy {
  double d_safe = 10.0;  // m
  double d_min = 0.5;    // m
  double horizon = kHorizonSteps * kPlanningStep;  // s

  FreeSpaceGap select(std::span<const AgentState> target_lane_svs, const AgentState& ego,
                      int target_lane, const VehicleParams& vehicle) const;
};

inline FreeSpaceGap select_free_space(std::span<const AgentState> target_lane_svs,
                                      const AgentState& ego, int target_lane,
                                      const VehicleParams& vehicle,
                                      const FreeSpacePolicy& policy = {}) {
  return policy.select(target_lane_svs, ego, target_lane, vehicle);
}

struct ClearanceReport {
  bool ok = true;
  double min_distance = 0.0;
  /// distances[m][i]: ego point to SV m at step i.
  std::vector<std::vector<double>> distances;
};

/// Exact geometric check of the plan against every SV rollout, steps 0..N.
/// ok iff every distance is at least d_min - 1e-4.
ClearanceReport verify_clearance(const PlannedTrajectory& plan,
                                 std::span<const SvPolytope> svs, double d_min);

struct LcConfig {
  LcWeights weights;
  LcBounds bounds;
  double d_min = 0.5;  // m
  FreeSpacePolicy free_space;
  /// SVs farther than this from the ego (along s, at every step) are left
  /// out of the program.
  double sv_range = 120.0;  // m
  nlp::Settings solver{1e-6, 400};
};

void validate(const LcConfig& config, std::string_view path = "planner.lc");

struct LcRequest {
  AgentState ego;  // s, v, e_y, e_psi, length, width
  ControlInput u0;  // pinned first input
  std::vector<AgentState> svs;  // every surrounding vehicle, any lane
  int target_lane = 1;
  const RoadNetwork* road = nullptr;  // required
  int steps = kHorizonSteps;
};

enum class LcStatus { kAccepted, kFallback };

struct LcResult {
  LcStatus status = LcStatus::kFallback;
  std::string reason;  // why the plan fell back; empty when accepted
  PlannedTrajectory plan;
  FreeSpaceGap gap;
  std::vector<SvPolytope> polytopes;  // SVs included in the program
  /// Dual certificates: lambdas[m][i - 1] for SV m at step i = 1..N.
  std::vector<std::vector<Eigen::Vector4d>> lambdas;
  ClearanceReport clearance;
  nlp::Status solver_status = nlp::Status::kMaxIter;
  int iterations = 0;
  double solve_seconds = 0.0;
};

/// Never throws for planning failures: any infeasibility, solver failure or
/// failed post-check yields kFallback with a reason. Throws
/// std::invalid_argument for malformed requests (missing road, bad lane).
LcResult plan_lc(const LcRequest& request, const LcConfig& config,
                 const VehicleParams& vehicle);

/// The transcribed program for a request, gap and SV set, before solving.
/// Exposed so tests can check its derivatives against finite differences.
nlp::Problem lc_program(const LcRequest& request, const LcConfig& config,
                        const VehicleParams& vehicle, const FreeSpaceGap& gap,
                        std::span<const SvPolytope> svs);

/// Largest violation of the bound, lateral-acceleration and terminal
/// constraints on a plan (0 when all hold).
double lc_bound_violation(const PlannedTrajectory& plan, const LcBounds& bounds,
                          double y_target, const VehicleParams& vehicle);

}  // namespace ecolane

#endif  // ECOLANE_PLANNER_LC_H_
