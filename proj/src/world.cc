#include "ecolane/world.h"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ecolane {
namespace {

double lookup(const std::vector<Segment>& segments, double s, double fallback) {
  double value = fallback;
  for (const Segment& seg : segments) {
    if (seg.s_start > s) break;
    value = seg.value;
  }
  return value;
}

void validate_segments(const std::vector<Segment>& segments,
                       std::string_view path) {
  for (std::size_t i = 1; i < segments.size(); ++i) {
    if (!(segments[i].s_start > segments[i - 1].s_start)) {
      throw ConfigError(std::string(path) + "[" + std::to_string(i) + "].s_start",
                        "segments must be strictly increasing in s_start");
    }
  }
}

}  // namespace

double RoadNetwork::curvature_at(double s) const {
  return lookup(curvature, s, 0.0);
}

double RoadNetwork::legal_speed_at(double s) const {
  return lookup(legal_speed, s, legal_speed.empty() ? 0.0 : legal_speed.front().value);
}

double RoadNetwork::heading_at(double s) const {
  double heading = 0.0;
  double from = 0.0;
  double kappa = 0.0;
  for (const Segment& seg : curvature) {
    if (seg.s_start >= s) break;
    if (seg.s_start > from) heading += kappa * (seg.s_start - from);
    from = std::max(from, seg.s_start);
    kappa = seg.value;
  }
  return heading + kappa * (s - from);
}

std::pair<double, double> RoadNetwork::to_cartesian(double s, double e_y) const {
  // Exact integration of circular arcs and straights, segment by segment.
  double x = 0.0, y = 0.0, heading = 0.0;
  double from = 0.0;
  double kappa = 0.0;
  auto advance = [&](double length) {
    if (length <= 0.0) return;
    if (std::abs(kappa) < 1e-12) {
      x += length * std::cos(heading);
      y += length * std::sin(heading);
    } else {
      const double next = heading + kappa * length;
      x += (std::sin(next) - std::sin(heading)) / kappa;
      y -= (std::cos(next) - std::cos(heading)) / kappa;
      heading = next;
    }
  };
  for (const Segment& seg : curvature) {
    if (seg.s_start >= s) break;
    if (seg.s_start > from) {
      advance(seg.s_start - from);
      from = seg.s_start;
    }
    kappa = seg.value;
  }
  advance(s - from);
  return {x - e_y * std::sin(heading), y + e_y * std::cos(heading)};
}

void validate(const RoadNetwork& road, std::string_view path) {
  const std::string p(path);
  if (road.lane_count < 2) throw ConfigError(p + ".lane_count", "must be >= 2");
  if (!(road.lane_width > 0.0)) throw ConfigError(p + ".lane_width", "must be > 0");
  if (!(road.route_length > 0.0)) {
    throw ConfigError(p + ".route_length", "must be > 0");
  }
  validate_segments(road.curvature, p + ".curvature");
  for (std::size_t i = 0; i < road.curvature.size(); ++i) {
    if (!(std::abs(road.curvature[i].value) <= kMaxRoadCurvature)) {
      throw ConfigError(p + ".curvature[" + std::to_string(i) + "].kappa",
                        "|kappa| must be <= 0.1 1/m");
    }
  }
  if (road.legal_speed.empty()) {
    throw ConfigError(p + ".speed_limits", "at least one segment is required");
  }
  validate_segments(road.legal_speed, p + ".speed_limits");
  for (std::size_t i = 0; i < road.legal_speed.size(); ++i) {
    if (!(road.legal_speed[i].value > 0.0)) {
      throw ConfigError(p + ".speed_limits[" + std::to_string(i) + "].speed",
                        "must be > 0");
    }
  }
}

double lane_center_offset(const RoadNetwork& road, int lane) {
  if (lane < 0 || lane >= road.lane_count) {
    throw std::out_of_range("lane index " + std::to_string(lane) +
                            " outside [0, " + std::to_string(road.lane_count) + ")");
  }
  return lane * road.lane_width;
}

int lane_from_offset(const RoadNetwork& road, double e_y) {
  const long nearest = std::lround(e_y / road.lane_width);
  return static_cast<int>(std::clamp<long>(nearest, 0, road.lane_count - 1));
}

std::string_view to_string(Phase phase) {
  switch (phase) {
    case Phase::kGreen: return "GREEN";
    case Phase::kYellow: return "YELLOW";
    case Phase::kRed: return "RED";
  }
  return "?";
}

bool TrafficLightSchedule::applies_to(int lane) const {
  return std::find(lanes.begin(), lanes.end(), lane) != lanes.end();
}

void validate(const TrafficLightSchedule& light, const RoadNetwork& road,
              std::string_view path) {
  const std::string p(path);
  if (!(light.green > 0.0)) throw ConfigError(p + ".green", "must be > 0");
  if (!(light.yellow > 0.0)) throw ConfigError(p + ".yellow", "must be > 0");
  if (!(light.red > 0.0)) throw ConfigError(p + ".red", "must be > 0");
  if (!std::isfinite(light.cycle_offset)) {
    throw ConfigError(p + ".offset", "must be finite");
  }
  if (!(light.stop_line_s > 0.0 && light.stop_line_s < road.route_length)) {
    throw ConfigError(p + ".stop_line_s", "must lie inside the route");
  }
  if (light.lanes.empty()) throw ConfigError(p + ".lanes", "must not be empty");
  for (int lane : light.lanes) {
    if (lane < 0 || lane >= road.lane_count) {
      throw ConfigError(p + ".lanes", "lane " + std::to_string(lane) + " out of range");
    }
  }
}

SpatSnapshot spat_at(const TrafficLightSchedule& schedule, double t) {
  const double period = schedule.period();
  double tau = std::fmod(t + schedule.cycle_offset, period);
  if (tau < 0.0) tau += period;

  SpatSnapshot snap;
  snap.stop_line_s = schedule.stop_line_s;
  if (tau < schedule.green) {
    snap.phase = Phase::kGreen;
    snap.remaining_time = schedule.green - tau;
  } else if (tau < schedule.green + schedule.yellow) {
    snap.phase = Phase::kYellow;
    snap.remaining_time = schedule.green + schedule.yellow - tau;
  } else {
    snap.phase = Phase::kRed;
    snap.remaining_time = period - tau;
  }
  return snap;
}

const TrafficLightSchedule* nearest_light(
    std::span<const TrafficLightSchedule> lights, double s, int lane) {
  const TrafficLightSchedule* best = nullptr;
  for (const TrafficLightSchedule& light : lights) {
    if (light.stop_line_s <= s || !light.applies_to(lane)) continue;
    if (best == nullptr || light.stop_line_s < best->stop_line_s) best = &light;
  }
  return best;
}

std::optional<AgentState> preceding_vehicle(std::span<const AgentState> agents,
                                            double ego_s, int lane) {
  std::optional<AgentState> best;
  for (const AgentState& agent : agents) {
    if (agent.lane != lane || !(agent.s > ego_s)) continue;
    if (!best || agent.s < best->s) best = agent;
  }
  return best;
}

}  // namespace ecolane
