// Road geometry, traffic-light schedules and agent containers.
//
// Everything lives in the Frenet frame of the reference centerline: `s` is
// the traveled distance along the centerline and `e_y` the signed lateral
// offset from it. Lane 0 hosts the reference centerline; lane k is centered
// at k * lane_width.

#ifndef ECOLANE_WORLD_H_
#define ECOLANE_WORLD_H_

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ecolane {

/// Raised for any scenario or road definition that breaks an invariant.
/// `field()` names the offending entry using a JSON-pointer-like path.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& reason)
      : std::runtime_error(field + ": " + reason), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

/// A value that holds from `s_start` until the next segment begins.
struct Segment {
  double s_start = 0.0;
  double value = 0.0;
};

struct RoadNetwork {
  int lane_count = 2;
  double lane_width = 3.5;    // m
  double route_length = 0.0;  // m
  std::vector<Segment> curvature;    // 1/m, sorted by s_start
  std::vector<Segment> legal_speed;  // m/s, sorted by s_start

  double curvature_at(double s) const;
  double legal_speed_at(double s) const;

  /// Heading of the centerline at s, integrated from zero heading at s = 0.
  double heading_at(double s) const;

  /// Cartesian position of (s, e_y), with the route starting at the origin
  /// heading along +x. Used for plotting only.
  std::pair<double, double> to_cartesian(double s, double e_y) const;

  /// Lateral limits of the drivable surface (outer lane edges).
  double min_lateral() const { return -0.5 * lane_width; }
  double max_lateral() const { return (lane_count - 0.5) * lane_width; }
};

inline constexpr double kMaxRoadCurvature = 0.1;

/// Throws ConfigError if the road breaks one of its invariants.
void validate(const RoadNetwork& road, std::string_view path = "road");

/// Lateral offset of a lane center from the reference centerline.
/// Throws std::out_of_range for an invalid lane index.
double lane_center_offset(const RoadNetwork& road, int lane);

/// Lane whose center is nearest to the lateral offset (clamped to the road).
int lane_from_offset(const RoadNetwork& road, double e_y);

enum class Phase { kGreen, kYellow, kRed };

std::string_view to_string(Phase phase);

struct TrafficLightSchedule {
  double stop_line_s = 0.0;  // m
  double green = 30.0;       // s
  double yellow = 4.0;       // s
  double red = 26.0;         // s
  double cycle_offset = 0.0; // s; the cycle position at t = 0
  std::vector<int> lanes;    // lanes this head controls

  double period() const { return green + yellow + red; }
  bool applies_to(int lane) const;
};

void validate(const TrafficLightSchedule& light, const RoadNetwork& road,
              std::string_view path = "light");

struct SpatSnapshot {
  Phase phase = Phase::kGreen;
  double remaining_time = 0.0;  // s
  double stop_line_s = 0.0;     // m
};

/// Phase and remaining time of a deterministic cyclic schedule at time t.
SpatSnapshot spat_at(const TrafficLightSchedule& schedule, double t);

/// The first light controlling `lane` whose stop line lies strictly ahead of s.
const TrafficLightSchedule* nearest_light(
    std::span<const TrafficLightSchedule> lights, double s, int lane);

struct AgentState {
  double s = 0.0;      // m along the centerline
  double v = 0.0;      // m/s
  double e_y = 0.0;    // m
  double e_psi = 0.0;  // rad
  int lane = 0;
  double length = 4.8; // m
  double width = 1.9;  // m
};

/// Agent in `lane` with the smallest s strictly greater than ego_s.
std::optional<AgentState> preceding_vehicle(std::span<const AgentState> agents,
                                            double ego_s, int lane);

}  // namespace ecolane

#endif  // ECOLANE_WORLD_H_
