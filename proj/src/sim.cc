#include "ecolane/sim.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include "json.hpp"

namespace ecolane {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kStopSpeed = 0.1;   // m/s
constexpr double kStopDwell = 0.5;   // s
constexpr double kMaxNpcDecel = 9.0;  // m/s^2
constexpr double kSettleTolerance = 0.1;  // m and rad
constexpr double kSpawnMargin = 10.0;     // m of free bumper gap around spawns
constexpr int kSpawnAttempts = 2000;
// A stopped ego this close to its standstill point stays put instead of
// inching forward in a series of short stops.
constexpr double kCreepDeadband = 3.0;  // m

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo == hi ? lo : std::uniform_real_distribution<double>(lo, hi)(rng);
}

IdmParams draw_idm(const IdmRanges& r, double legal_speed, std::pair<double, double> factor,
                   std::mt19937_64& rng) {
  IdmParams idm;
  idm.desired_speed = legal_speed * uniform(rng, factor.first, factor.second);
  idm.time_headway = uniform(rng, r.time_headway_min, r.time_headway_max);
  idm.max_accel = uniform(rng, r.max_accel_min, r.max_accel_max);
  idm.comfort_decel = r.comfort_decel;
  idm.min_gap = r.min_gap;
  idm.exponent = r.exponent;
  return idm;
}

bool overlaps(const AgentState& a, const AgentState& b, double margin) {
  return a.lane == b.lane && std::abs(a.s - b.s) < 0.5 * (a.length + b.length) + margin;
}

// Lanes the ego body touches, so NPCs in either lane react to it mid-change.
bool ego_occupies(const AgentState& ego, const RoadNetwork& road, int lane) {
  return std::abs(ego.e_y - lane_center_offset(road, lane)) <
         0.5 * (road.lane_width + ego.width);
}

double bumper_gap(const AgentState& rear, const AgentState& front) {
  return front.s - rear.s - 0.5 * (front.length + rear.length);
}

std::optional<Obstacle> tighter(const IdmParams& idm, double v, std::optional<Obstacle> a,
                                std::optional<Obstacle> b) {
  if (!a) return b;
  if (!b) return a;
  return idm_acceleration(idm, v, a) <= idm_acceleration(idm, v, b) ? a : b;
}

std::vector<AgentState> states_of(const std::vector<Npc>& npcs) {
  std::vector<AgentState> out;
  out.reserve(npcs.size());
  for (const Npc& n : npcs) out.push_back(n.state);
  return out;
}

// Light handling for one lane, as seen from the ego.
struct LaneOutlook {
  const TrafficLightSchedule* light = nullptr;
  SpatSnapshot spat;
  PassDecision decision;
};

LaneOutlook outlook(const ScenarioConfig& cfg, const std::vector<AgentState>& npcs,
                    const AgentState& ego, int lane, double t) {
  LaneOutlook out;
  out.light = nearest_light(cfg.lights, ego.s, lane);
  if (out.light == nullptr) {
    out.decision = {PassVerdict::kPass, kInfiniteEta};
    return out;
  }
  out.spat = spat_at(*out.light, t);
  std::optional<FrontVehicle> front;
  if (auto lead = preceding_vehicle(npcs, ego.s, lane)) front = FrontVehicle{lead->s, lead->v};
  const double v_eta = std::max(ego.v, cfg.eta_min_speed);
  out.decision = pass_decision(out.spat, eta_to_light(ego.s, v_eta, front, out.light->stop_line_s));
  return out;
}

// The planner takes a single leader, so a leader and a stop line are merged
// into the constant-speed track that stays behind both over the horizon.
FrontVehiclePrediction lower_envelope(FrontVehiclePrediction a, FrontVehiclePrediction b,
                                      double horizon) {
  if (b.s0 < a.s0) std::swap(a, b);
  const double a_end = a.s0 + a.v * horizon;
  const double b_end = b.s0 + b.v * horizon;
  if (a_end <= b_end) return a;
  return {a.s0, (b_end - a.s0) / horizon};
}

// Whether executing `plan` from time t would run a red light. Lane changes
// are planned without regard to signals, so this vets them before use.
bool runs_red(const PlannedTrajectory& plan, std::span<const TrafficLightSchedule> lights,
              const RoadNetwork& road, double t) {
  for (std::size_t k = 0; k + 1 < plan.waypoints.size(); ++k) {
    const Waypoint& a = plan.waypoints[k];
    const Waypoint& b = plan.waypoints[k + 1];
    for (const TrafficLightSchedule& light : lights) {
      if (a.s < light.stop_line_s && b.s >= light.stop_line_s &&
          light.applies_to(lane_from_offset(road, a.e_y)) &&
          spat_at(light, t + a.t).phase == Phase::kRed) {
        return true;
      }
    }
  }
  return false;
}

class Simulation {
 public:
  Simulation(const ScenarioConfig& config, Policy policy)
      : cfg_(config), policy_(policy), rng_(config.seed) {
    validate(cfg_);
    npcs_ = spawn_npcs(cfg_, rng_);
    lk_ = cfg_.lk;
    if (policy_ == Policy::kBaseline) lk_.weights.w_energy = 0.0;
    ego_ = cfg_.ego;
    metrics_.policy = std::string(to_string(policy_));
    metrics_.seed = cfg_.seed;
    metrics_.config_hash = config_hash(cfg_);
    metrics_.min_bumper_gap = kInf;
    metrics_.min_lc_clearance = kInf;
  }

  RunResult run() {
    const RoadNetwork& road = cfg_.road;
    const int max_ticks = static_cast<int>(std::ceil(cfg_.run_duration / kSimStep - 1e-9));
    const int ticks_per_plan = static_cast<int>(std::lround(kReplanPeriod / kSimStep));
    const double start_s = ego_.s;
    double finish_time = -1.0;
    int tick = 0;
    try {
      for (; tick < max_ticks && finish_time < 0.0; ++tick) {
        const double t = tick * kSimStep;
        ego_.lane = lane_from_offset(road, ego_.e_y);
        if (latched_ && settled()) release_latch();
        const bool exhausted = cursor_ >= plan_.steps();
        if (exhausted && latched_) release_latch();
        if (!have_plan_ || exhausted || (!latched_ && since_plan_ >= ticks_per_plan)) {
          replan(t);
        }
        const double prev_s = execute(t);
        step_npcs(t);
        check_safety(prev_s, t);
        if (ego_.s >= road.route_length) {
          finish_time = t + kSimStep * (road.route_length - prev_s) / (ego_.s - prev_s);
        }
      }
    } catch (const std::exception& e) {
      throw RunAborted(std::string("run aborted at t=") + std::to_string(tick * kSimStep) +
                           ": " + e.what(),
                       std::move(trace_));
    }

    RunMetrics& m = metrics_;
    m.completed = finish_time >= 0.0;
    m.travel_time = m.completed ? finish_time : tick * kSimStep;
    m.distance = std::min(ego_.s, road.route_length) - start_s;
    m.energy_j = meter_trajectory(cfg_.energy, torques_, speeds_, kSimStep);
    m.mpge = m.energy_j > 0.0 && m.distance > 0.0 ? mpge(m.energy_j, m.distance) : 0.0;
    m.stops = count_stops(speeds_);
    if (std::isinf(m.min_bumper_gap)) m.min_bumper_gap = 0.0;
    if (std::isinf(m.min_lc_clearance)) m.min_lc_clearance = 0.0;
    return {metrics_, std::move(trace_)};
  }

 private:
  bool settled() const {
    return std::abs(ego_.e_y - y_target_) <= kSettleTolerance &&
           std::abs(ego_.e_psi) <= kSettleTolerance;
  }

  // Hands over to lane keeping, which tracks the lane center exactly.
  void release_latch() {
    latched_ = false;
    ego_.lane = target_lane_;
    ego_.e_y = y_target_;
    ego_.e_psi = 0.0;
    have_plan_ = false;
  }

  ControlInput pinned_input() const {
    if (have_plan_ && cursor_ < plan_.steps()) return plan_.inputs[cursor_];
    return {0.0, cfg_.road.curvature_at(ego_.s)};
  }

  void replan(double t) {
    const std::vector<AgentState> npcs = states_of(npcs_);
    const int lane = ego_.lane;
    const ControlInput u0 = pinned_input();

    decisions_.clear();
    bool any_light = false;
    std::vector<LaneOutlook> lanes;
    for (int l = 0; l < cfg_.road.lane_count; ++l) {
      lanes.push_back(outlook(cfg_, npcs, ego_, l, t));
      any_light = any_light || lanes.back().light != nullptr;
    }
    if (any_light) {
      for (const LaneOutlook& o : lanes) decisions_.push_back(o.decision);
    }

    target_lane_ = lane;
    bool planned = false;
    if (policy_ == Policy::kProposed && any_light) {
      const LaneDecision choice = select_lane(decisions_, lane);
      if (choice.change_requested) planned = try_lane_change(choice.target_lane, u0, npcs, t);
    }
    if (!planned) plan_lane_keeping(lanes[lane], u0, npcs, t);
    ++metrics_.plans;
    cursor_ = 0;
    since_plan_ = 0;
    have_plan_ = true;
  }

  bool try_lane_change(int target, const ControlInput& u0, const std::vector<AgentState>& npcs,
                       double t) {
    LcRequest req;
    req.ego = ego_;
    req.u0 = u0;
    req.svs = npcs;
    req.target_lane = target;
    req.road = &cfg_.road;
    const LcResult res = plan_lc(req, cfg_.lc, cfg_.vehicle);
    metrics_.max_plan_seconds = std::max(metrics_.max_plan_seconds, res.solve_seconds);
    if (res.status != LcStatus::kAccepted || runs_red(res.plan, cfg_.lights, cfg_.road, t)) {
      ++metrics_.lc_fallbacks;
      return false;
    }
    ++metrics_.lane_changes;
    if (!res.polytopes.empty()) {
      metrics_.min_lc_clearance = std::min(metrics_.min_lc_clearance, res.clearance.min_distance);
    }
    plan_ = res.plan;
    latched_ = true;
    target_lane_ = target;
    y_target_ = lane_center_offset(cfg_.road, target);
    maneuver_ = "LC";
    return true;
  }

  void plan_lane_keeping(const LaneOutlook& own, const ControlInput& u0,
                         const std::vector<AgentState>& npcs, double t) {
    const RoadNetwork& road = cfg_.road;
    const double horizon = kHorizonSteps * kPlanningStep;
    std::optional<FrontVehiclePrediction> front;
    if (auto lead = preceding_vehicle(npcs, ego_.s, ego_.lane)) {
      front = FrontVehiclePrediction{lead->s, lead->v};
    }
    double legal = road.legal_speed_at(ego_.s);
    if (own.light != nullptr) {
      const double to_line = own.light->stop_line_s - ego_.s;
      const bool nonpass = own.decision.value == PassVerdict::kNonPass;
      // Past the point where a comfortable stop short of the headway point
      // is possible, an amber or late green is cleared rather than braked for.
      const bool committed =
          own.spat.phase != Phase::kRed &&
          ego_.v * ego_.v / (2.0 * lk_.comfort_decel) > to_line - lk_.d_safe;
      bool stop = nonpass && !committed;
      if (nonpass && holding_ == own.light) {
        // A stop already under way is only abandoned when even full braking
        // cannot make the line; otherwise the rule above could flip back to
        // proceeding halfway through the approach.
        const double hardest = -cfg_.vehicle.accel_from_torque(cfg_.vehicle.brake_torque);
        stop = own.spat.phase == Phase::kRed || ego_.v * ego_.v / (2.0 * hardest) <= to_line;
      }
      holding_ = stop ? own.light : nullptr;
      if (stop) {
        const FrontVehiclePrediction line{own.light->stop_line_s, 0.0};
        front = front ? lower_envelope(*front, line, horizon) : line;
      }
      if (!nonpass && own.spat.phase == Phase::kRed && own.spat.remaining_time > 0.0) {
        // Passing on the next green: do not arrive before it.
        legal = std::min(legal, std::max(to_line, 0.0) / own.spat.remaining_time);
      }
    }

    LkRequest req;
    req.s0 = ego_.s;
    req.v0 = ego_.v;
    req.u0 = u0.wheel_torque;
    req.lane_offset = lane_center_offset(road, ego_.lane);
    req.front = front;
    req.v_ref = build_reference(ego_.s, legal, front, lk_);
    if (front && ego_.v < kStopSpeed && front->v < kStopSpeed &&
        front->s0 - ego_.s - lk_.d_safe < kCreepDeadband) {
      std::fill(req.v_ref.begin(), req.v_ref.end(), 0.0);
    }
    req.road = &road;
    const LkResult res = plan_lk(req, lk_, cfg_.vehicle, cfg_.energy);
    metrics_.max_plan_seconds = std::max(metrics_.max_plan_seconds, res.solve_seconds);
    if (res.status == LkStatus::kSoftened) ++metrics_.softened_plans;
    if (res.status == LkStatus::kEmergency) ++metrics_.emergency_plans;
    plan_ = res.plan;
    maneuver_ = res.status == LkStatus::kEmergency ? "EM" : "LK";
    (void)t;
  }

  // Applies the next planned input; returns the previous arc position.
  double execute(double t) {
    const ControlInput u = plan_.inputs[cursor_];
    const Waypoint& next = plan_.waypoints[cursor_ + 1];

    TraceRow row;
    row.t = t;
    row.s = ego_.s;
    row.v = ego_.v;
    row.e_y = ego_.e_y;
    row.e_psi = ego_.e_psi;
    row.lane = ego_.lane;
    row.wheel_torque = u.wheel_torque;
    row.curvature = u.curvature;
    row.power = clamped_stage_cost(cfg_.energy, u.wheel_torque, ego_.v);
    row.maneuver = maneuver_;
    row.target_lane = target_lane_;
    for (const TrafficLightSchedule& light : cfg_.lights) row.phases.push_back(spat_at(light, t).phase);
    row.decisions = decisions_;
    trace_.push_back(std::move(row));

    torques_.push_back(u.wheel_torque);
    speeds_.push_back(ego_.v);

    const double prev_s = ego_.s;
    ego_.s = next.s;
    // Solver tolerances can leave the speed a hair outside its bounds.
    ego_.v = std::clamp(next.v, 0.0, cfg_.vehicle.max_speed);
    ego_.e_y = next.e_y;
    ego_.e_psi = next.e_psi;
    ego_.lane = lane_from_offset(cfg_.road, ego_.e_y);
    ++cursor_;
    ++since_plan_;
    return prev_s;
  }

  // Synchronous update: every NPC reacts to the state at the start of the tick.
  void step_npcs(double t) {
    const RoadNetwork& road = cfg_.road;
    std::vector<AgentState> next(npcs_.size());
    for (std::size_t i = 0; i < npcs_.size(); ++i) {
      const AgentState& me = npcs_[i].state;
      std::optional<Obstacle> lead;
      double best = kInf;
      for (std::size_t j = 0; j < npcs_.size(); ++j) {
        const AgentState& other = npcs_[j].state;
        if (j == i || other.lane != me.lane || other.s <= me.s || other.s >= best) continue;
        best = other.s;
        lead = Obstacle{bumper_gap(me, other), other.v};
      }
      if (ego_occupies(ego_, road, me.lane) && ego_.s > me.s && ego_.s < best) {
        lead = Obstacle{bumper_gap(me, ego_), ego_.v};
      }
      const std::optional<Obstacle> light = npc_light_obstacle(me, npcs_[i].idm, cfg_.lights, t);
      next[i] = step_npc(me, npcs_[i].idm, tighter(npcs_[i].idm, me.v, lead, light));
    }
    for (std::size_t i = 0; i < npcs_.size(); ++i) npcs_[i].state = next[i];
  }

  void check_safety(double prev_s, double t) {
    const RoadNetwork& road = cfg_.road;
    for (const TrafficLightSchedule& light : cfg_.lights) {
      if (!light.applies_to(ego_.lane)) continue;
      if (prev_s < light.stop_line_s && ego_.s >= light.stop_line_s &&
          spat_at(light, t).phase == Phase::kRed) {
        ++metrics_.red_light_violations;
      }
    }
    const std::vector<AgentState> npcs = states_of(npcs_);
    if (auto lead = preceding_vehicle(npcs, ego_.s, ego_.lane); lead && !latched_) {
      const double need = lk_.d_safe + (ego_.v - lead->v) * lk_.t_gap;
      metrics_.max_headway_violation =
          std::max(metrics_.max_headway_violation, need - (lead->s - ego_.s));
    }
    for (const AgentState& n : npcs) {
      if (!ego_occupies(ego_, road, n.lane)) continue;
      const double gap = std::abs(n.s - ego_.s) - 0.5 * (n.length + ego_.length);
      metrics_.min_bumper_gap = std::min(metrics_.min_bumper_gap, gap);
    }
  }

  const ScenarioConfig& cfg_;
  Policy policy_;
  std::mt19937_64 rng_;
  std::vector<Npc> npcs_;
  LkConfig lk_;
  AgentState ego_;

  PlannedTrajectory plan_;
  bool have_plan_ = false;
  int cursor_ = 0;
  int since_plan_ = 0;
  std::string maneuver_ = "LK";
  bool latched_ = false;
  int target_lane_ = 0;
  double y_target_ = 0.0;
  std::vector<PassDecision> decisions_;
  const TrafficLightSchedule* holding_ = nullptr;  // light being stopped for

  std::vector<double> torques_, speeds_;
  std::vector<TraceRow> trace_;
  RunMetrics metrics_;
};

std::string fmt(double x, int precision = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, x);
  return buf;
}

}  // namespace

std::string_view to_string(Policy policy) {
  return policy == Policy::kBaseline ? "baseline" : "proposed";
}

Policy parse_policy(std::string_view text) {
  if (text == "baseline") return Policy::kBaseline;
  if (text == "proposed") return Policy::kProposed;
  throw std::invalid_argument("unknown policy '" + std::string(text) +
                              "' (expected baseline or proposed)");
}

double idm_acceleration(const IdmParams& idm, double v, std::optional<Obstacle> obstacle) {
  double a = 1.0 - std::pow(std::max(v, 0.0) / idm.desired_speed, idm.exponent);
  if (obstacle) {
    const double dv = v - obstacle->v;
    const double desired_gap =
        idm.min_gap + std::max(0.0, v * idm.time_headway +
                                        v * dv / (2.0 * std::sqrt(idm.max_accel * idm.comfort_decel)));
    const double gap = std::max(obstacle->gap, 0.01);
    a -= (desired_gap / gap) * (desired_gap / gap);
  }
  return std::max(idm.max_accel * a, -kMaxNpcDecel);
}

AgentState step_npc(const AgentState& npc, const IdmParams& idm,
                    std::optional<Obstacle> obstacle, double dt) {
  AgentState next = npc;
  next.v = std::max(0.0, npc.v + dt * idm_acceleration(idm, npc.v, obstacle));
  next.s = npc.s + 0.5 * dt * (npc.v + next.v);
  return next;
}

std::optional<Obstacle> npc_light_obstacle(const AgentState& npc, const IdmParams& idm,
                                           std::span<const TrafficLightSchedule> lights,
                                           double t) {
  const double front = npc.s + 0.5 * npc.length;
  const TrafficLightSchedule* light = nearest_light(lights, front, npc.lane);
  if (light == nullptr) return std::nullopt;
  const SpatSnapshot spat = spat_at(*light, t);
  if (spat.phase == Phase::kGreen) return std::nullopt;
  const double gap = light->stop_line_s - front;
  if (spat.phase == Phase::kYellow && npc.v * npc.v / (2.0 * idm.comfort_decel) > gap) {
    return std::nullopt;  // too close to stop comfortably: clear the junction
  }
  return Obstacle{gap, 0.0};
}

std::vector<Npc> spawn_npcs(const ScenarioConfig& config, std::mt19937_64& rng) {
  const IdmRanges& ranges = config.npc_behavior;
  const std::pair<double, double> factor{ranges.desired_speed_factor_min,
                                         ranges.desired_speed_factor_max};
  std::vector<Npc> out;
  for (const NpcSpawn& spawn : config.npcs) {
    Npc npc{spawn.state, spawn.idm.value_or(IdmParams{})};
    if (!spawn.idm) {
      npc.idm = draw_idm(ranges, config.road.legal_speed_at(spawn.state.s), factor, rng);
    }
    out.push_back(npc);
  }
  if (!config.traffic) return out;

  const RandomTraffic& traffic = *config.traffic;
  const auto traffic_factor = traffic.desired_speed_factor.value_or(factor);
  for (int lane = 0; lane < static_cast<int>(traffic.count_per_lane.size()); ++lane) {
    for (int k = 0; k < traffic.count_per_lane[lane]; ++k) {
      AgentState a;
      a.lane = lane;
      a.e_y = lane_center_offset(config.road, lane);
      bool placed = false;
      for (int attempt = 0; attempt < kSpawnAttempts && !placed; ++attempt) {
        a.s = uniform(rng, traffic.s_min, traffic.s_max);
        placed = !overlaps(a, config.ego, kSpawnMargin) &&
                 std::none_of(out.begin(), out.end(), [&](const Npc& n) {
                   return overlaps(a, n.state, kSpawnMargin);
                 });
      }
      if (!placed) {
        throw ConfigError("traffic.count_per_lane[" + std::to_string(lane) + "]",
                          "cannot place that many vehicles without overlap");
      }
      const double legal = config.road.legal_speed_at(a.s);
      Npc npc{a, draw_idm(ranges, legal, traffic_factor, rng)};
      npc.state.v = std::min(npc.idm.desired_speed, legal);
      out.push_back(npc);
    }
  }
  return out;
}

int count_stops(std::span<const double> speeds, double dt) {
  const int dwell = static_cast<int>(std::ceil(kStopDwell / dt - 1e-9));
  int stops = 0, run = 0;
  for (double v : speeds) {
    if (v < kStopSpeed) {
      if (++run == dwell) ++stops;
    } else {
      run = 0;
    }
  }
  return stops;
}

RunResult run(const ScenarioConfig& config, Policy policy) {
  return Simulation(config, policy).run();
}

void write_trace(std::ostream& out, const RunResult& result, std::size_t light_count) {
  const RunMetrics& m = result.metrics;
  out << "# config_hash=" << m.config_hash << " seed=" << m.seed << " policy=" << m.policy
      << "\n";
  out << "t,s,v,e_y,e_psi,lane,T_whl,kappa,power,maneuver,target_lane";
  for (std::size_t i = 0; i < light_count; ++i) out << ",light" << i << "_phase";
  std::size_t lanes = 0;
  for (const TraceRow& r : result.trace) lanes = std::max(lanes, r.decisions.size());
  for (std::size_t l = 0; l < lanes; ++l) out << ",lane" << l << "_pass,lane" << l << "_eta";
  out << "\n";
  for (const TraceRow& r : result.trace) {
    out << fmt(r.t, 1) << ',' << fmt(r.s, 4) << ',' << fmt(r.v, 4) << ',' << fmt(r.e_y, 4) << ','
        << fmt(r.e_psi, 5) << ',' << r.lane << ',' << fmt(r.wheel_torque, 2) << ','
        << fmt(r.curvature, 6) << ',' << fmt(r.power, 2) << ',' << r.maneuver << ','
        << r.target_lane;
    for (std::size_t i = 0; i < light_count; ++i) {
      out << ',' << (i < r.phases.size() ? to_string(r.phases[i]) : "");
    }
    for (std::size_t l = 0; l < lanes; ++l) {
      if (l < r.decisions.size()) {
        const PassDecision& d = r.decisions[l];
        out << ',' << to_string(d.value) << ','
            << (std::isinf(d.eta) ? std::string("inf") : fmt(d.eta, 3));
      } else {
        out << ",,";
      }
    }
    out << "\n";
  }
}

std::string metrics_json(const RunMetrics& m) {
  const nlohmann::json j = {{"policy", m.policy},
                            {"seed", m.seed},
                            {"config_hash", m.config_hash},
                            {"completed", m.completed},
                            {"energy_j", m.energy_j},
                            {"mpge", m.mpge},
                            {"stops", m.stops},
                            {"travel_time_s", m.travel_time},
                            {"distance_m", m.distance},
                            {"plans", m.plans},
                            {"lane_changes", m.lane_changes},
                            {"lc_fallbacks", m.lc_fallbacks},
                            {"softened_plans", m.softened_plans},
                            {"emergency_plans", m.emergency_plans},
                            {"red_light_violations", m.red_light_violations},
                            {"max_headway_violation_m", m.max_headway_violation},
                            {"min_bumper_gap_m", m.min_bumper_gap},
                            {"min_lc_clearance_m", m.min_lc_clearance}};
  return j.dump(2);
}

}  // namespace ecolane
