#include "ecolane/planner_lk.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace ecolane {
namespace {

constexpr double kTorqueUnit = 1000.0;  // solver torque variables are in kN m
constexpr double kInf = std::numeric_limits<double>::infinity();

// Decision vector layout:  [s_0..s_N | v_0..v_N | tau_0..tau_{N-1} |
//                           sigma_0..sigma_{N-1} | zeta_1..zeta_N]
// s is relative to the plan start, tau is torque in kN m, sigma is the scaled
// epigraph of the clamped stage power and zeta the headway slack. The last
// two blocks exist only when the energy cost or a leader is present.
struct Layout {
  int n = 0;
  bool energy = false;
  bool front = false;

  int s(int i) const { return i; }
  int v(int i) const { return n + 1 + i; }
  int tau(int i) const { return 2 * (n + 1) + i; }
  int sigma(int i) const { return 3 * n + 2 + i; }
  int zeta(int i) const { return 3 * n + 2 + (energy ? n : 0) + (i - 1); }
  int size() const { return 3 * n + 2 + (energy ? n : 0) + (front ? n : 0); }

  int num_eq() const { return 2 * n; }
  int epi_row(int i) const { return 2 * n + i; }
  int headway_row(int i) const { return 2 * n + (energy ? n : 0) + (i - 1); }
  int num_ineq() const { return (energy ? n : 0) + (front ? n : 0); }
};

// Quadratic speed terms of the cost: jerk, acceleration and tracking.
struct SpeedCost {
  double w_jerk, w_accel, w_track;
  const std::vector<double>* v_ref;

  double value(const Layout& l, const nlp::Vector& x) const {
    double f = 0.0;
    for (int i = 0; i + 2 <= l.n; ++i) {
      const double d2 = x[l.v(i)] - 2.0 * x[l.v(i + 1)] + x[l.v(i + 2)];
      f += w_jerk * d2 * d2;
    }
    for (int i = 0; i < l.n; ++i) {
      const double d1 = x[l.v(i + 1)] - x[l.v(i)];
      const double e = x[l.v(i)] - (*v_ref)[i];
      f += w_accel * d1 * d1 + w_track * e * e;
    }
    return f;
  }

  void gradient(const Layout& l, const nlp::Vector& x, nlp::Vector& g) const {
    for (int i = 0; i + 2 <= l.n; ++i) {
      const double d2 = x[l.v(i)] - 2.0 * x[l.v(i + 1)] + x[l.v(i + 2)];
      g[l.v(i)] += 2.0 * w_jerk * d2;
      g[l.v(i + 1)] -= 4.0 * w_jerk * d2;
      g[l.v(i + 2)] += 2.0 * w_jerk * d2;
    }
    for (int i = 0; i < l.n; ++i) {
      const double d1 = x[l.v(i + 1)] - x[l.v(i)];
      g[l.v(i)] += -2.0 * w_accel * d1 + 2.0 * w_track * (x[l.v(i)] - (*v_ref)[i]);
      g[l.v(i + 1)] += 2.0 * w_accel * d1;
    }
  }

  // Lower triangle of the constant Hessian, scaled by `factor`.
  void hessian(const Layout& l, double factor, std::vector<nlp::Triplet>& t) const {
    for (int i = 0; i + 2 <= l.n; ++i) {
      const int idx[3] = {l.v(i), l.v(i + 1), l.v(i + 2)};
      const double c[3] = {1.0, -2.0, 1.0};
      for (int p = 0; p < 3; ++p)
        for (int q = p; q < 3; ++q)
          t.emplace_back(idx[q], idx[p], factor * 2.0 * w_jerk * c[p] * c[q]);
    }
    for (int i = 0; i < l.n; ++i) {
      t.emplace_back(l.v(i), l.v(i), factor * 2.0 * (w_accel + w_track));
      t.emplace_back(l.v(i + 1), l.v(i + 1), factor * 2.0 * w_accel);
      t.emplace_back(l.v(i + 1), l.v(i), -factor * 2.0 * w_accel);
    }
  }
};

double pinned_torque(double u0, double v0, const VehicleParams& vehicle, double dt) {
  // Keep v_1 inside [0, v_max]; otherwise the pinned input alone would make
  // the speed bounds infeasible.
  const double lo = std::max(vehicle.brake_torque, vehicle.torque_from_accel(-v0 / dt));
  const double hi = std::min(vehicle.motor_torque,
                             vehicle.torque_from_accel((vehicle.max_speed - v0) / dt));
  return std::clamp(u0, lo, std::max(lo, hi));
}

// Rollout that tracks the reference with bounded torque; used as the initial
// guess.
void nominal_rollout(const Layout& l, const LkRequest& req, double u0,
                     const VehicleParams& vehicle, nlp::Vector& x) {
  const double dt = kPlanningStep;
  double s = 0.0, v = req.v0;
  for (int i = 0; i < l.n; ++i) {
    x[l.s(i)] = s;
    x[l.v(i)] = v;
    double torque = u0;
    if (i > 0) {
      const double target = std::clamp(req.v_ref[i], 0.0, vehicle.max_speed);
      torque = vehicle.torque_from_accel((target - v) / 1.0);
      torque = std::clamp(torque, vehicle.brake_torque, vehicle.motor_torque);
      torque = std::clamp(torque, vehicle.torque_from_accel(-v / dt),
                          vehicle.torque_from_accel((vehicle.max_speed - v) / dt));
    }
    x[l.tau(i)] = torque / kTorqueUnit;
    s += dt * v;
    v += dt * vehicle.accel_from_torque(torque);
  }
  x[l.s(l.n)] = s;
  x[l.v(l.n)] = v;
}

PlannedTrajectory rollout_plan(const LkRequest& req, const std::vector<double>& torques,
                               const VehicleParams& vehicle) {
  const LkMatrices m = lk_matrices(vehicle);
  PlannedTrajectory plan;
  plan.kind = PlanKind::kLaneKeeping;
  Eigen::Vector2d x(req.s0, req.v0);
  for (int i = 0; i <= static_cast<int>(torques.size()); ++i) {
    Waypoint w;
    w.t = i * kPlanningStep;
    w.s = x[0];
    w.v = x[1];
    w.e_y = req.lane_offset;
    plan.waypoints.push_back(w);
    if (i == static_cast<int>(torques.size())) break;
    const double kappa = req.road ? req.road->curvature_at(x[0]) : 0.0;
    plan.inputs.push_back({torques[i], kappa});
    x = m.a * x + m.b * torques[i];
  }
  annotate_waypoints(plan, req.road, vehicle);
  return plan;
}

}  // namespace

void validate(const LkConfig& config, std::string_view path) {
  const std::string p(path);
  const LkWeights& w = config.weights;
  if (!(w.w_energy >= 0.0)) throw ConfigError(p + ".w_energy", "must be >= 0");
  if (!(w.w_smooth_accel >= 0.0)) throw ConfigError(p + ".w_smooth_accel", "must be >= 0");
  if (!(w.w_smooth_jerk >= 0.0)) throw ConfigError(p + ".w_smooth_jerk", "must be >= 0");
  if (!(w.w_track >= 0.0)) throw ConfigError(p + ".w_track", "must be >= 0");
  if (w.energy_scale && !(*w.energy_scale > 0.0)) {
    throw ConfigError(p + ".energy_scale", "must be > 0");
  }
  if (!(config.d_safe >= 0.0)) throw ConfigError(p + ".d_safe", "must be >= 0");
  if (!(config.t_gap >= 0.0)) throw ConfigError(p + ".t_gap", "must be >= 0");
  if (!(config.headway_penalty > 0.0)) {
    throw ConfigError(p + ".headway_penalty", "must be > 0");
  }
  if (!(config.comfort_decel > 0.0)) {
    throw ConfigError(p + ".comfort_decel", "must be > 0");
  }
}

std::vector<double> build_reference(double s0, double legal_speed,
                                    const std::optional<FrontVehiclePrediction>& front,
                                    const LkConfig& config, int steps) {
  std::vector<double> ref(steps, legal_speed);
  if (!front) return ref;
  double s = s0;
  for (int i = 0; i < steps; ++i) {
    const double v_front = std::max(front->v, 0.0);
    const double room = front->s_at(i) - s - config.d_safe - v_front * config.t_gap;
    double cap = v_front + std::sqrt(2.0 * config.comfort_decel * std::max(room, 0.0));
    // Never step past the headway point of the next sample.
    cap = std::min(cap, std::max(room / kPlanningStep + v_front, 0.0));
    ref[i] = std::min(legal_speed, cap);
    s += kPlanningStep * ref[i];
  }
  return ref;
}

void annotate_waypoints(PlannedTrajectory& plan, const RoadNetwork* road,
                        const VehicleParams& vehicle) {
  const int n = plan.steps();
  for (int i = 0; i <= n && i < static_cast<int>(plan.waypoints.size()); ++i) {
    Waypoint& w = plan.waypoints[i];
    const ControlInput& u = plan.inputs[std::min(i, n - 1)];
    w.curvature = u.curvature;
    w.accel = vehicle.accel_from_torque(u.wheel_torque);
    w.heading = (road ? road->heading_at(w.s) : 0.0) + w.e_psi;
  }
}

PlannedTrajectory emergency_profile(const LkRequest& request, double pinned_input,
                                    const VehicleParams& vehicle) {
  std::vector<double> torques(request.steps, 0.0);
  double v = request.v0;
  for (int i = 0; i < request.steps; ++i) {
    double torque = i == 0 ? pinned_input : vehicle.brake_torque;
    // Land exactly on standstill instead of overshooting into negative speed.
    torque = std::max(torque, vehicle.torque_from_accel(-v / kPlanningStep));
    torques[i] = torque;
    v += kPlanningStep * vehicle.accel_from_torque(torque);
  }
  PlannedTrajectory plan = rollout_plan(request, torques, vehicle);
  plan.kind = PlanKind::kEmergency;
  return plan;
}

double planned_energy(const PlannedTrajectory& plan, const EnergyModelParams& energy) {
  double total = 0.0;
  for (int i = 0; i < plan.steps(); ++i) {
    total += clamped_stage_cost(energy, plan.inputs[i].wheel_torque, plan.waypoints[i].v) *
             kPlanningStep;
  }
  return total;
}

LkResult plan_lk(const LkRequest& req, const LkConfig& config,
                 const VehicleParams& vehicle, const EnergyModelParams& energy) {
  const auto started = std::chrono::steady_clock::now();
  const int n = req.steps;
  if (n < 2) throw std::invalid_argument("plan_lk: horizon must have at least 2 steps");
  if (static_cast<int>(req.v_ref.size()) != n) {
    throw std::invalid_argument("plan_lk: v_ref must have one entry per step");
  }
  if (!(req.v0 >= 0.0 && req.v0 <= vehicle.max_speed + 1e-9)) {
    throw std::invalid_argument("plan_lk: initial speed outside [0, v_max]");
  }
  if (req.front && !(req.front->v >= 0.0)) {
    throw std::invalid_argument("plan_lk: leader speed must be >= 0");
  }

  const double dt = kPlanningStep;
  const LkWeights& w = config.weights;
  const double scale = w.energy_scale.value_or(1.0 / energy.c2);
  const double u0 = pinned_torque(req.u0, req.v0, vehicle, dt);
  const double k_accel = kTorqueUnit / (vehicle.mass * vehicle.wheel_radius);
  const double front_s0 = req.front ? req.front->s0 - req.s0 : 0.0;
  const double front_v = req.front ? req.front->v : 0.0;

  Layout l;
  l.n = n;
  l.energy = w.w_energy > 0.0;
  l.front = req.front.has_value();
  const SpeedCost speed{w.w_smooth_jerk, w.w_smooth_accel, w.w_track, &req.v_ref};
  // Power = a_tv * tau * v + a_v * v in scaled units.
  const double a_tv = scale * energy.c1 * kTorqueUnit;
  const double a_v = scale * energy.c2;
  // Headway:  s_i + t_gap v_i - zeta_i <= s_front,i - d_safe + v_front t_gap.
  auto headway_rhs = [&](int i) {
    return front_s0 + front_v * i * dt - config.d_safe + front_v * config.t_gap;
  };

  nlp::Problem p;
  p.num_variables = l.size();
  p.num_equalities = l.num_eq();
  p.num_inequalities = l.num_ineq();

  p.objective = [=, &l, &config](const nlp::Vector& x) {
    double f = speed.value(l, x);
    if (l.energy)
      for (int i = 0; i < n; ++i) f += w.w_energy * x[l.sigma(i)];
    if (l.front)
      for (int i = 1; i <= n; ++i) f += config.headway_penalty * x[l.zeta(i)];
    return f;
  };
  p.gradient = [=, &l, &config](const nlp::Vector& x, nlp::Vector& g) {
    g.setZero(x.size());
    speed.gradient(l, x, g);
    if (l.energy)
      for (int i = 0; i < n; ++i) g[l.sigma(i)] = w.w_energy;
    if (l.front)
      for (int i = 1; i <= n; ++i) g[l.zeta(i)] = config.headway_penalty;
  };
  p.constraints = [=, &l, &config](const nlp::Vector& x, nlp::Vector& c) {
    c.resize(l.num_eq() + l.num_ineq());
    for (int i = 0; i < n; ++i) {
      c[2 * i] = x[l.s(i + 1)] - x[l.s(i)] - dt * x[l.v(i)];
      c[2 * i + 1] = x[l.v(i + 1)] - x[l.v(i)] - dt * k_accel * x[l.tau(i)];
    }
    if (l.energy) {
      for (int i = 0; i < n; ++i) {
        const double v = x[l.v(i)];
        c[l.epi_row(i)] = a_tv * x[l.tau(i)] * v + a_v * v - x[l.sigma(i)];
      }
    }
    if (l.front) {
      for (int i = 1; i <= n; ++i) {
        c[l.headway_row(i)] = x[l.s(i)] + config.t_gap * x[l.v(i)] - x[l.zeta(i)] -
                              headway_rhs(i);
      }
    }
  };
  p.jacobian = [=, &l, &config](const nlp::Vector& x, std::vector<nlp::Triplet>& t) {
    for (int i = 0; i < n; ++i) {
      t.emplace_back(2 * i, l.s(i + 1), 1.0);
      t.emplace_back(2 * i, l.s(i), -1.0);
      t.emplace_back(2 * i, l.v(i), -dt);
      t.emplace_back(2 * i + 1, l.v(i + 1), 1.0);
      t.emplace_back(2 * i + 1, l.v(i), -1.0);
      t.emplace_back(2 * i + 1, l.tau(i), -dt * k_accel);
    }
    if (l.energy) {
      for (int i = 0; i < n; ++i) {
        t.emplace_back(l.epi_row(i), l.tau(i), a_tv * x[l.v(i)]);
        t.emplace_back(l.epi_row(i), l.v(i), a_tv * x[l.tau(i)] + a_v);
        t.emplace_back(l.epi_row(i), l.sigma(i), -1.0);
      }
    }
    if (l.front) {
      for (int i = 1; i <= n; ++i) {
        t.emplace_back(l.headway_row(i), l.s(i), 1.0);
        t.emplace_back(l.headway_row(i), l.v(i), config.t_gap);
        t.emplace_back(l.headway_row(i), l.zeta(i), -1.0);
      }
    }
  };
  p.hessian = [=, &l](const nlp::Vector&, double factor, const nlp::Vector& y,
                      std::vector<nlp::Triplet>& t) {
    speed.hessian(l, factor, t);
    if (l.energy)
      for (int i = 0; i < n; ++i)
        t.emplace_back(l.tau(i), l.v(i), a_tv * y[l.epi_row(i)]);
  };

  p.lower = nlp::Vector::Constant(l.size(), -kInf);
  p.upper = nlp::Vector::Constant(l.size(), kInf);
  p.lower[l.s(0)] = p.upper[l.s(0)] = 0.0;
  p.lower[l.v(0)] = p.upper[l.v(0)] = req.v0;
  for (int i = 1; i <= n; ++i) {
    p.lower[l.v(i)] = 0.0;
    p.upper[l.v(i)] = vehicle.max_speed;
  }
  for (int i = 0; i < n; ++i) {
    p.lower[l.tau(i)] = vehicle.brake_torque / kTorqueUnit;
    p.upper[l.tau(i)] = vehicle.motor_torque / kTorqueUnit;
  }
  p.lower[l.tau(0)] = p.upper[l.tau(0)] = u0 / kTorqueUnit;
  if (l.energy)
    for (int i = 0; i < n; ++i) p.lower[l.sigma(i)] = 0.0;
  if (l.front)
    for (int i = 1; i <= n; ++i) p.lower[l.zeta(i)] = 0.0;

  p.initial_guess = nlp::Vector::Zero(l.size());
  nominal_rollout(l, req, u0, vehicle, p.initial_guess);
  if (l.energy) {
    for (int i = 0; i < n; ++i) {
      const double v = p.initial_guess[l.v(i)];
      p.initial_guess[l.sigma(i)] =
          std::max(a_tv * p.initial_guess[l.tau(i)] * v + a_v * v, 0.0) + 0.1;
    }
  }
  if (l.front) {
    for (int i = 1; i <= n; ++i) {
      const double lhs = p.initial_guess[l.s(i)] + config.t_gap * p.initial_guess[l.v(i)];
      p.initial_guess[l.zeta(i)] = std::max(lhs - headway_rhs(i), 0.0) + 0.1;
    }
  }

  LkResult result;
  result.pinned_input = u0;
  const nlp::Solution sol = nlp::solve(p, config.solver);
  result.solver_status = sol.status;
  result.iterations = sol.iterations;

  if (sol.status != nlp::Status::kOptimal) {
    result.status = LkStatus::kEmergency;
    result.plan = emergency_profile(req, u0, vehicle);
  } else {
    // States are re-derived from the optimal inputs so the plan is exactly
    // consistent with the lane-keeping step map.
    std::vector<double> torques(n);
    for (int i = 0; i < n; ++i) torques[i] = sol.x[l.tau(i)] * kTorqueUnit;
    torques[0] = u0;
    result.plan = rollout_plan(req, torques, vehicle);
    if (l.energy) {
      result.epigraph.resize(n);
      for (int i = 0; i < n; ++i) result.epigraph[i] = sol.x[l.sigma(i)] / scale;
    }
    if (l.front) {
      for (int i = 1; i <= n; ++i) {
        result.max_headway_slack = std::max(result.max_headway_slack, sol.x[l.zeta(i)]);
      }
    }
    result.status = result.max_headway_slack > 1e-6 ? LkStatus::kSoftened
                                                    : LkStatus::kOptimal;
  }
  result.solve_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

}  // namespace ecolane
