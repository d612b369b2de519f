#include "ecolane/dynamics.h"

#include <cmath>

namespace ecolane {

void validate(const VehicleParams& params, std::string_view path) {
  const std::string p(path);
  if (!(params.mass > 0.0)) throw ConfigError(p + ".mass", "must be > 0");
  if (!(params.wheel_radius > 0.0)) throw ConfigError(p + ".r_eff", "must be > 0");
  if (!(params.brake_torque < 0.0)) throw ConfigError(p + ".t_brake", "must be < 0");
  if (!(params.motor_torque > 0.0)) throw ConfigError(p + ".t_motor", "must be > 0");
  if (!(params.max_speed > 0.0)) throw ConfigError(p + ".v_max", "must be > 0");
}

State4 to_state(const AgentState& agent) {
  return State4(agent.s, agent.v, agent.e_y, agent.e_psi);
}

State4 continuous_derivative(const State4& x, const ControlInput& u,
                             double road_curvature, const VehicleParams& params) {
  const double v = x[kV];
  const double c = std::cos(x[kEpsi]);
  State4 dx;
  dx[kS] = v * c;
  dx[kV] = params.accel_from_torque(u.wheel_torque);
  dx[kEy] = v * std::sin(x[kEpsi]);
  dx[kEpsi] = -road_curvature * v * c + u.curvature * v * c;
  return dx;
}

State4 step_discrete(const State4& x, const ControlInput& u, double road_curvature,
                     const VehicleParams& params, double dt) {
  State4 next = x + dt * continuous_derivative(x, u, road_curvature, params);
  if (next[kV] < 0.0) next[kV] = 0.0;
  return next;
}

LkMatrices lk_matrices(const VehicleParams& params, double dt) {
  LkMatrices m;
  m.a << 1.0, dt, 0.0, 1.0;
  m.b << 0.0, dt / (params.mass * params.wheel_radius);
  return m;
}

}  // namespace ecolane
