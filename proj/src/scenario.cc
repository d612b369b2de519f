#include "ecolane/scenario.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>
#include <tuple>

#include "json.hpp"

namespace ecolane {
namespace {

using Json = nlohmann::json;

std::string child(const std::string& path, std::string_view key) {
  return path.empty() ? std::string(key) : path + "." + std::string(key);
}

std::string element(const std::string& path, std::size_t i) {
  return path + "[" + std::to_string(i) + "]";
}

// Typed access to one JSON object with path-qualified errors.
class Reader {
 public:
  Reader(const Json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw ConfigError(path_.empty() ? "$" : path_, "must be an object");
  }

  void allow(std::initializer_list<std::string_view> keys) const {
    const std::set<std::string_view> known(keys);
    for (auto it = node_.begin(); it != node_.end(); ++it) {
      if (!known.contains(it.key())) throw ConfigError(child(path_, it.key()), "unknown field");
    }
  }

  bool has(std::string_view key) const { return node_.contains(key); }

  const Json& at(std::string_view key) const {
    if (!node_.contains(key)) throw ConfigError(child(path_, key), "missing required field");
    return node_.at(std::string(key));
  }

  double number(std::string_view key) const { return as_number(at(key), child(path_, key)); }

  double number(std::string_view key, double fallback) const {
    return has(key) ? number(key) : fallback;
  }

  int integer(std::string_view key) const { return as_int(at(key), child(path_, key)); }

  int integer(std::string_view key, int fallback) const {
    return has(key) ? integer(key) : fallback;
  }

  std::string text(std::string_view key, std::string fallback) const {
    if (!has(key)) return fallback;
    const Json& v = at(key);
    if (!v.is_string()) throw ConfigError(child(path_, key), "must be a string");
    return v.get<std::string>();
  }

  Reader object(std::string_view key) const { return Reader(at(key), child(path_, key)); }

  const Json& array(std::string_view key) const {
    const Json& v = at(key);
    if (!v.is_array()) throw ConfigError(child(path_, key), "must be an array");
    return v;
  }

  std::string path(std::string_view key) const { return child(path_, key); }

  static double as_number(const Json& v, const std::string& path) {
    if (!v.is_number()) throw ConfigError(path, "must be a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError(path, "must be finite");
    return x;
  }

  static int as_int(const Json& v, const std::string& path) {
    if (!v.is_number_integer()) throw ConfigError(path, "must be an integer");
    return v.get<int>();
  }

 private:
  const Json& node_;
  std::string path_;
};

std::vector<Segment> read_segments(const Json& list, const std::string& path,
                                   std::string_view value_key) {
  if (!list.is_array()) throw ConfigError(path, "must be an array");
  std::vector<Segment> out;
  for (std::size_t i = 0; i < list.size(); ++i) {
    const Reader r(list[i], element(path, i));
    r.allow({"s_start", value_key});
    out.push_back({r.number("s_start"), r.number(value_key)});
  }
  return out;
}

std::pair<double, double> read_range(const Json& v, const std::string& path) {
  if (!v.is_array() || v.size() != 2) throw ConfigError(path, "must be a [min, max] pair");
  const double lo = Reader::as_number(v[0], path + "[0]");
  const double hi = Reader::as_number(v[1], path + "[1]");
  if (!(lo <= hi)) throw ConfigError(path, "min must not exceed max");
  return {lo, hi};
}

RoadNetwork read_road(const Reader& r) {
  r.allow({"lane_count", "lane_width", "route_length", "curvature", "speed_limits"});
  RoadNetwork road;
  road.lane_count = r.integer("lane_count", road.lane_count);
  road.lane_width = r.number("lane_width", road.lane_width);
  road.route_length = r.number("route_length");
  if (r.has("curvature")) {
    road.curvature = read_segments(r.at("curvature"), r.path("curvature"), "kappa");
  }
  road.legal_speed = read_segments(r.array("speed_limits"), r.path("speed_limits"), "speed");
  return road;
}

TrafficLightSchedule read_light(const Reader& r) {
  r.allow({"stop_line_s", "green", "yellow", "red", "offset", "lanes"});
  TrafficLightSchedule light;
  light.stop_line_s = r.number("stop_line_s");
  light.green = r.number("green");
  light.yellow = r.number("yellow");
  light.red = r.number("red");
  light.cycle_offset = r.number("offset", 0.0);
  const Json& lanes = r.array("lanes");
  for (std::size_t i = 0; i < lanes.size(); ++i) {
    light.lanes.push_back(Reader::as_int(lanes[i], element(r.path("lanes"), i)));
  }
  return light;
}

AgentState read_agent(const Reader& r) {
  AgentState a;
  a.s = r.number("s");
  a.v = r.number("v");
  a.lane = r.integer("lane");
  a.length = r.number("length", a.length);
  a.width = r.number("width", a.width);
  return a;
}

IdmParams read_idm(const Reader& r) {
  r.allow({"desired_speed", "time_headway", "min_gap", "max_accel", "comfort_decel",
           "exponent"});
  IdmParams idm;
  idm.desired_speed = r.number("desired_speed");
  idm.time_headway = r.number("time_headway", idm.time_headway);
  idm.min_gap = r.number("min_gap", idm.min_gap);
  idm.max_accel = r.number("max_accel", idm.max_accel);
  idm.comfort_decel = r.number("comfort_decel", idm.comfort_decel);
  idm.exponent = r.number("exponent", idm.exponent);
  return idm;
}

IdmRanges read_idm_ranges(const Reader& r) {
  r.allow({"desired_speed_factor", "time_headway", "max_accel", "comfort_decel", "min_gap",
           "exponent"});
  IdmRanges out;
  if (r.has("desired_speed_factor")) {
    std::tie(out.desired_speed_factor_min, out.desired_speed_factor_max) =
        read_range(r.at("desired_speed_factor"), r.path("desired_speed_factor"));
  }
  if (r.has("time_headway")) {
    std::tie(out.time_headway_min, out.time_headway_max) =
        read_range(r.at("time_headway"), r.path("time_headway"));
  }
  if (r.has("max_accel")) {
    std::tie(out.max_accel_min, out.max_accel_max) =
        read_range(r.at("max_accel"), r.path("max_accel"));
  }
  out.comfort_decel = r.number("comfort_decel", out.comfort_decel);
  out.min_gap = r.number("min_gap", out.min_gap);
  out.exponent = r.number("exponent", out.exponent);
  return out;
}

RandomTraffic read_traffic(const Reader& r) {
  r.allow({"count_per_lane", "s_range", "desired_speed_factor"});
  RandomTraffic t;
  const Json& counts = r.array("count_per_lane");
  for (std::size_t i = 0; i < counts.size(); ++i) {
    t.count_per_lane.push_back(Reader::as_int(counts[i], element(r.path("count_per_lane"), i)));
  }
  std::tie(t.s_min, t.s_max) = read_range(r.at("s_range"), r.path("s_range"));
  if (r.has("desired_speed_factor")) {
    t.desired_speed_factor =
        read_range(r.at("desired_speed_factor"), r.path("desired_speed_factor"));
  }
  return t;
}

VehicleParams read_vehicle(const Reader& r) {
  r.allow({"mass", "r_eff", "t_brake", "t_motor", "v_max"});
  VehicleParams v;
  v.mass = r.number("mass", v.mass);
  v.wheel_radius = r.number("r_eff", v.wheel_radius);
  v.brake_torque = r.number("t_brake", v.brake_torque);
  v.motor_torque = r.number("t_motor", v.motor_torque);
  v.max_speed = r.number("v_max", v.max_speed);
  return v;
}

LkConfig read_lk(const Reader& r) {
  r.allow({"w_energy", "w_smooth_accel", "w_smooth_jerk", "w_track", "energy_scale", "d_safe",
           "t_gap", "headway_penalty", "comfort_decel"});
  LkConfig c;
  LkWeights& w = c.weights;
  w.w_energy = r.number("w_energy", w.w_energy);
  w.w_smooth_accel = r.number("w_smooth_accel", w.w_smooth_accel);
  w.w_smooth_jerk = r.number("w_smooth_jerk", w.w_smooth_jerk);
  w.w_track = r.number("w_track", w.w_track);
  if (r.has("energy_scale")) w.energy_scale = r.number("energy_scale");
  c.d_safe = r.number("d_safe", c.d_safe);
  c.t_gap = r.number("t_gap", c.t_gap);
  c.headway_penalty = r.number("headway_penalty", c.headway_penalty);
  c.comfort_decel = r.number("comfort_decel", c.comfort_decel);
  return c;
}

LcConfig read_lc(const Reader& r) {
  r.allow({"rho_k1", "rho_k2", "rho_y", "rho_psi", "d_min", "sv_range"});
  LcConfig c;
  c.weights.rho_k1 = r.number("rho_k1", c.weights.rho_k1);
  c.weights.rho_k2 = r.number("rho_k2", c.weights.rho_k2);
  c.weights.rho_y = r.number("rho_y", c.weights.rho_y);
  c.weights.rho_psi = r.number("rho_psi", c.weights.rho_psi);
  c.d_min = r.number("d_min", c.d_min);
  c.sv_range = r.number("sv_range", c.sv_range);
  return c;
}

// Agents are placed on their lane center, aligned with the road.
void place_on_lane(AgentState& a, const RoadNetwork& road) {
  if (a.lane >= 0 && a.lane < road.lane_count) a.e_y = lane_center_offset(road, a.lane);
  a.e_psi = 0.0;
}

void validate_agent(const AgentState& a, const RoadNetwork& road, const std::string& p) {
  if (!(a.s >= 0.0 && a.s < road.route_length)) {
    throw ConfigError(p + ".s", "must lie inside the route");
  }
  if (!(a.v >= 0.0)) throw ConfigError(p + ".v", "must be >= 0");
  if (a.lane < 0 || a.lane >= road.lane_count) throw ConfigError(p + ".lane", "out of range");
  if (!(a.length > 0.0)) throw ConfigError(p + ".length", "must be > 0");
  if (!(a.width > 0.0 && a.width < road.lane_width)) {
    throw ConfigError(p + ".width", "must be > 0 and narrower than a lane");
  }
}

Json segments_json(const std::vector<Segment>& segs, const char* value_key) {
  Json out = Json::array();
  for (const Segment& s : segs) out.push_back({{"s_start", s.s_start}, {value_key, s.value}});
  return out;
}

Json idm_json(const IdmParams& idm) {
  return {{"desired_speed", idm.desired_speed}, {"time_headway", idm.time_headway},
          {"min_gap", idm.min_gap},             {"max_accel", idm.max_accel},
          {"comfort_decel", idm.comfort_decel}, {"exponent", idm.exponent}};
}

Json agent_json(const AgentState& a) {
  return {{"s", a.s}, {"v", a.v}, {"lane", a.lane}, {"length", a.length}, {"width", a.width}};
}

}  // namespace

void validate(const IdmParams& idm, std::string_view path) {
  const std::string p(path);
  if (!(idm.desired_speed > 0.0)) throw ConfigError(p + ".desired_speed", "must be > 0");
  if (!(idm.time_headway >= 0.0)) throw ConfigError(p + ".time_headway", "must be >= 0");
  if (!(idm.min_gap >= 0.0)) throw ConfigError(p + ".min_gap", "must be >= 0");
  if (!(idm.max_accel > 0.0)) throw ConfigError(p + ".max_accel", "must be > 0");
  if (!(idm.comfort_decel > 0.0)) throw ConfigError(p + ".comfort_decel", "must be > 0");
  if (!(idm.exponent > 0.0)) throw ConfigError(p + ".exponent", "must be > 0");
}

void validate(const ScenarioConfig& config) {
  if (config.schema_version != kScenarioSchemaVersion) {
    throw ConfigError("schema_version",
                      "unsupported version " + std::to_string(config.schema_version) +
                          " (expected " + std::to_string(kScenarioSchemaVersion) + ")");
  }
  if (!(config.run_duration > 0.0)) throw ConfigError("run_duration", "must be > 0");
  if (!(config.eta_min_speed > 0.0)) throw ConfigError("eta_min_speed", "must be > 0");
  validate(config.road, "road");
  for (std::size_t i = 0; i < config.lights.size(); ++i) {
    validate(config.lights[i], config.road, element("lights", i));
  }
  validate_agent(config.ego, config.road, "ego");
  validate(config.vehicle, "vehicle");
  if (!(config.ego.v <= config.vehicle.max_speed)) {
    throw ConfigError("ego.v", "must not exceed vehicle.v_max");
  }
  if (!(config.energy.c1 >= 0.0)) throw ConfigError("energy.c1", "must be >= 0");
  if (!(config.energy.c2 >= 0.0)) throw ConfigError("energy.c2", "must be >= 0");
  validate(config.lk, "planner.lk");
  validate(config.lc, "planner.lc");

  const IdmRanges& b = config.npc_behavior;
  if (!(b.desired_speed_factor_min > 0.0)) {
    throw ConfigError("npc_behavior.desired_speed_factor", "must be > 0");
  }
  if (!(b.time_headway_min >= 0.0)) throw ConfigError("npc_behavior.time_headway", "must be >= 0");
  if (!(b.max_accel_min > 0.0)) throw ConfigError("npc_behavior.max_accel", "must be > 0");
  if (!(b.comfort_decel > 0.0)) throw ConfigError("npc_behavior.comfort_decel", "must be > 0");
  if (!(b.min_gap >= 0.0)) throw ConfigError("npc_behavior.min_gap", "must be >= 0");
  if (!(b.exponent > 0.0)) throw ConfigError("npc_behavior.exponent", "must be > 0");

  std::vector<std::pair<const AgentState*, std::string>> placed = {{&config.ego, "ego"}};
  for (std::size_t i = 0; i < config.npcs.size(); ++i) {
    const std::string p = element("npcs", i);
    validate_agent(config.npcs[i].state, config.road, p);
    if (config.npcs[i].idm) validate(*config.npcs[i].idm, p + ".idm");
    placed.emplace_back(&config.npcs[i].state, p);
  }
  for (std::size_t i = 0; i < placed.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      const AgentState& a = *placed[i].first;
      const AgentState& o = *placed[j].first;
      if (a.lane == o.lane && std::abs(a.s - o.s) < 0.5 * (a.length + o.length)) {
        throw ConfigError(placed[i].second + ".s", "overlaps " + placed[j].second);
      }
    }
  }

  if (config.traffic) {
    const RandomTraffic& t = *config.traffic;
    if (static_cast<int>(t.count_per_lane.size()) != config.road.lane_count) {
      throw ConfigError("traffic.count_per_lane", "needs one entry per lane");
    }
    for (std::size_t i = 0; i < t.count_per_lane.size(); ++i) {
      if (t.count_per_lane[i] < 0) {
        throw ConfigError(element("traffic.count_per_lane", i), "must be >= 0");
      }
    }
    if (!(t.s_min >= 0.0 && t.s_max <= config.road.route_length && t.s_min < t.s_max)) {
      throw ConfigError("traffic.s_range", "must be a nonempty interval inside the route");
    }
    if (t.desired_speed_factor && !(t.desired_speed_factor->first > 0.0)) {
      throw ConfigError("traffic.desired_speed_factor", "must be > 0");
    }
  }
}

ScenarioConfig parse_scenario(std::string_view json_text) {
  Json root;
  try {
    root = Json::parse(json_text);
  } catch (const Json::parse_error& e) {
    throw ConfigError("$", std::string("invalid JSON: ") + e.what());
  }
  const Reader r(root, "");
  r.allow({"schema_version", "name", "seed", "run_duration", "eta_min_speed", "road", "lights",
           "ego", "npcs", "traffic", "npc_behavior", "vehicle", "energy", "planner"});

  ScenarioConfig c;
  c.schema_version = r.integer("schema_version");
  if (c.schema_version != kScenarioSchemaVersion) validate(c);  // reports the version
  c.name = r.text("name", "");
  if (r.has("seed")) {
    const Json& seed = r.at("seed");
    if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<long long>() >= 0)) {
      throw ConfigError("seed", "must be a nonnegative integer");
    }
    c.seed = seed.get<std::uint64_t>();
  }
  c.run_duration = r.number("run_duration", c.run_duration);
  c.eta_min_speed = r.number("eta_min_speed", c.eta_min_speed);
  c.road = read_road(r.object("road"));

  if (r.has("lights")) {
    const Json& lights = r.array("lights");
    for (std::size_t i = 0; i < lights.size(); ++i) {
      c.lights.push_back(read_light(Reader(lights[i], element("lights", i))));
    }
  }

  const Reader ego = r.object("ego");
  ego.allow({"s", "v", "lane", "length", "width"});
  c.ego = read_agent(ego);
  place_on_lane(c.ego, c.road);

  if (r.has("npcs")) {
    const Json& npcs = r.array("npcs");
    for (std::size_t i = 0; i < npcs.size(); ++i) {
      const Reader n(npcs[i], element("npcs", i));
      n.allow({"s", "v", "lane", "length", "width", "idm"});
      NpcSpawn spawn;
      spawn.state = read_agent(n);
      place_on_lane(spawn.state, c.road);
      if (n.has("idm")) spawn.idm = read_idm(n.object("idm"));
      c.npcs.push_back(spawn);
    }
  }
  if (r.has("traffic")) c.traffic = read_traffic(r.object("traffic"));
  if (r.has("npc_behavior")) c.npc_behavior = read_idm_ranges(r.object("npc_behavior"));
  if (r.has("vehicle")) c.vehicle = read_vehicle(r.object("vehicle"));
  if (r.has("energy")) {
    const Reader e = r.object("energy");
    e.allow({"c1", "c2"});
    c.energy.c1 = e.number("c1", c.energy.c1);
    c.energy.c2 = e.number("c2", c.energy.c2);
  }
  if (r.has("planner")) {
    const Reader p = r.object("planner");
    p.allow({"lk", "lc"});
    if (p.has("lk")) c.lk = read_lk(p.object("lk"));
    if (p.has("lc")) c.lc = read_lc(p.object("lc"));
  }
  c.lc.bounds = LcBounds::for_road(c.road);
  c.lc.free_space.d_safe = c.lk.d_safe;
  c.lc.free_space.d_min = c.lc.d_min;

  validate(c);
  return c;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("file", "cannot read " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_scenario(text.str());
}

std::string to_json(const ScenarioConfig& c) {
  Json root;
  root["schema_version"] = c.schema_version;
  root["name"] = c.name;
  root["seed"] = c.seed;
  root["run_duration"] = c.run_duration;
  root["eta_min_speed"] = c.eta_min_speed;
  root["road"] = {{"lane_count", c.road.lane_count},
                  {"lane_width", c.road.lane_width},
                  {"route_length", c.road.route_length},
                  {"curvature", segments_json(c.road.curvature, "kappa")},
                  {"speed_limits", segments_json(c.road.legal_speed, "speed")}};
  root["lights"] = Json::array();
  for (const TrafficLightSchedule& l : c.lights) {
    root["lights"].push_back({{"stop_line_s", l.stop_line_s},
                              {"green", l.green},
                              {"yellow", l.yellow},
                              {"red", l.red},
                              {"offset", l.cycle_offset},
                              {"lanes", l.lanes}});
  }
  root["ego"] = agent_json(c.ego);
  root["npcs"] = Json::array();
  for (const NpcSpawn& n : c.npcs) {
    Json j = agent_json(n.state);
    if (n.idm) j["idm"] = idm_json(*n.idm);
    root["npcs"].push_back(j);
  }
  if (c.traffic) {
    Json t = {{"count_per_lane", c.traffic->count_per_lane},
              {"s_range", {c.traffic->s_min, c.traffic->s_max}}};
    if (c.traffic->desired_speed_factor) {
      t["desired_speed_factor"] = {c.traffic->desired_speed_factor->first,
                                   c.traffic->desired_speed_factor->second};
    }
    root["traffic"] = t;
  }
  const IdmRanges& b = c.npc_behavior;
  root["npc_behavior"] = {
      {"desired_speed_factor", {b.desired_speed_factor_min, b.desired_speed_factor_max}},
      {"time_headway", {b.time_headway_min, b.time_headway_max}},
      {"max_accel", {b.max_accel_min, b.max_accel_max}},
      {"comfort_decel", b.comfort_decel},
      {"min_gap", b.min_gap},
      {"exponent", b.exponent}};
  root["vehicle"] = {{"mass", c.vehicle.mass},
                     {"r_eff", c.vehicle.wheel_radius},
                     {"t_brake", c.vehicle.brake_torque},
                     {"t_motor", c.vehicle.motor_torque},
                     {"v_max", c.vehicle.max_speed}};
  root["energy"] = {{"c1", c.energy.c1}, {"c2", c.energy.c2}};
  const LkWeights& w = c.lk.weights;
  Json lk = {{"w_energy", w.w_energy},         {"w_smooth_accel", w.w_smooth_accel},
             {"w_smooth_jerk", w.w_smooth_jerk}, {"w_track", w.w_track},
             {"d_safe", c.lk.d_safe},          {"t_gap", c.lk.t_gap},
             {"headway_penalty", c.lk.headway_penalty},
             {"comfort_decel", c.lk.comfort_decel}};
  if (w.energy_scale) lk["energy_scale"] = *w.energy_scale;
  const LcWeights& lw = c.lc.weights;
  root["planner"] = {{"lk", lk},
                     {"lc",
                      {{"rho_k1", lw.rho_k1},
                       {"rho_k2", lw.rho_k2},
                       {"rho_y", lw.rho_y},
                       {"rho_psi", lw.rho_psi},
                       {"d_min", c.lc.d_min},
                       {"sv_range", c.lc.sv_range}}}};
  return root.dump(2);
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string config_hash(const ScenarioConfig& config) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(to_json(config))));
  return buf;
}

}  // namespace ecolane
