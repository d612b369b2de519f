// Point-mass vehicle model in the Frenet frame.
//
//   state  x = [s, v, e_y, e_psi]
//   input  u = [wheel torque, vehicle curvature]
//
//   s'     = v cos(e_psi)
//   v'     = T / (m r_eff)
//   e_y'   = v sin(e_psi)
//   e_psi' = (kappa - kappa_road) v cos(e_psi)

#ifndef ECOLANE_DYNAMICS_H_
#define ECOLANE_DYNAMICS_H_

#include <Eigen/Core>
#include <string_view>

#include "ecolane/world.h"

namespace ecolane {

inline constexpr double kPlanningStep = 0.1;  // s between waypoints
inline constexpr int kHorizonSteps = 50;

using State4 = Eigen::Vector4d;

enum StateIndex { kS = 0, kV = 1, kEy = 2, kEpsi = 3 };

struct ControlInput {
  double wheel_torque = 0.0;  // N m, total over all wheels
  double curvature = 0.0;     // 1/m
};

struct VehicleParams {
  double mass = 1600.0;           // kg
  double wheel_radius = 0.30;     // m, effective
  double brake_torque = -3000.0;  // N m, strongest braking (negative)
  double motor_torque = 1500.0;   // N m, strongest traction
  double max_speed = 20.0;        // m/s

  /// Longitudinal acceleration produced by a wheel torque.
  double accel_from_torque(double torque) const {
    return torque / (mass * wheel_radius);
  }
  double torque_from_accel(double accel) const {
    return accel * mass * wheel_radius;
  }
};

void validate(const VehicleParams& params, std::string_view path = "vehicle");

State4 to_state(const AgentState& agent);

/// Time derivative of the continuous model.
State4 continuous_derivative(const State4& x, const ControlInput& u,
                             double road_curvature, const VehicleParams& params);

/// One forward-Euler step. Speed is clamped at zero: standstill absorbs.
State4 step_discrete(const State4& x, const ControlInput& u, double road_curvature,
                     const VehicleParams& params, double dt = kPlanningStep);

/// Forward-Euler matrices of the longitudinal (s, v) model used for lane
/// keeping: x+ = A x + B T.
struct LkMatrices {
  Eigen::Matrix2d a;
  Eigen::Vector2d b;
};

LkMatrices lk_matrices(const VehicleParams& params, double dt = kPlanningStep);

}  // namespace ecolane

#endif  // ECOLANE_DYNAMICS_H_
