#include "swarm_ops/sim_events.hpp"

#include <fstream>
#include <istream>

#include "swarm_ops/error.hpp"

namespace swarm_ops {

using nlohmann::json;

namespace {

template <class T, class Parse>
T parse_enum(const json& j, Parse parse, const char* what) {
  auto v = parse(j.get<std::string>());
  if (!v) throw Error(std::string("unknown ") + what + " '" + j.get<std::string>() + "'");
  return *v;
}

}  // namespace

json to_json(const GeoCoordinate& c) {
  return {{"latitude_deg", c.latitude_deg},
          {"longitude_deg", c.longitude_deg},
          {"altitude_m", c.altitude_m}};
}

GeoCoordinate geo_from_json(const json& j) {
  return {j.at("latitude_deg").get<double>(), j.at("longitude_deg").get<double>(),
          j.value("altitude_m", 0.0)};
}

json to_json(const Sighting& s) {
  return {{"drone_id", s.drone_id}, {"tick", s.tick},
          {"entity", s.entity},     {"floor", s.floor},
          {"sector", to_string(s.sector)}, {"facade", to_string(s.facade)}};
}

Sighting sighting_from_json(const json& j) {
  Sighting s;
  s.drone_id = j.at("drone_id").get<int>();
  s.tick = j.at("tick").get<std::int64_t>();
  s.entity = j.at("entity").get<std::string>();
  s.floor = j.at("floor").get<int>();
  s.sector = parse_enum<Sector>(j.at("sector"), parse_sector, "sector");
  s.facade = parse_enum<Facade>(j.at("facade"), parse_facade, "facade");
  return s;
}

json to_json(const CameraFrame& f) {
  json grid = json::array();
  for (CellContent c : f.grid) grid.push_back(to_string(c));
  json seen = json::array();
  for (const auto& s : f.visible_sightings) seen.push_back(to_json(s));
  return {{"drone_id", f.drone_id}, {"tick", f.tick}, {"facade", to_string(f.facade)},
          {"grid", grid},           {"visible_sightings", seen}};
}

CameraFrame camera_frame_from_json(const json& j) {
  CameraFrame f;
  f.drone_id = j.at("drone_id").get<int>();
  f.tick = j.at("tick").get<std::int64_t>();
  f.facade = parse_enum<Facade>(j.at("facade"), parse_facade, "facade");
  const json& grid = j.at("grid");
  if (!grid.is_array() || grid.size() != 9) throw Error("camera frame grid must hold 9 cells");
  for (std::size_t i = 0; i < 9; ++i) f.grid[i] = parse_enum<CellContent>(grid[i], parse_cell, "cell");
  for (const auto& s : j.at("visible_sightings")) f.visible_sightings.push_back(sighting_from_json(s));
  return f;
}

json to_json(const TelemetryEvent& t) {
  return {{"drone_id", t.drone_id},
          {"floor", t.floor},
          {"latitude_deg", t.position.latitude_deg},
          {"longitude_deg", t.position.longitude_deg},
          {"altitude_m", t.position.altitude_m},
          {"azimuth_rad", t.azimuth_rad},
          {"heading_deg", t.heading_deg},
          {"battery_pct", t.battery_pct},
          {"speed_mps", t.speed_mps},
          {"laps_completed", t.laps_completed},
          {"mode", to_string(t.mode)}};
}

TelemetryEvent telemetry_from_json(const json& j) {
  TelemetryEvent t;
  t.drone_id = j.at("drone_id").get<int>();
  t.floor = j.at("floor").get<int>();
  t.position = {j.at("latitude_deg").get<double>(), j.at("longitude_deg").get<double>(),
                j.at("altitude_m").get<double>()};
  t.azimuth_rad = j.at("azimuth_rad").get<double>();
  t.heading_deg = j.at("heading_deg").get<double>();
  t.battery_pct = j.at("battery_pct").get<double>();
  t.speed_mps = j.at("speed_mps").get<double>();
  t.laps_completed = j.at("laps_completed").get<int>();
  t.mode = parse_enum<DroneMode>(j.at("mode"), parse_drone_mode, "drone mode");
  return t;
}

json event_payload(const SimEvent& e) {
  return std::visit(
      [](const auto& body) -> json {
        using T = std::decay_t<decltype(body)>;
        if constexpr (std::is_same_v<T, TelemetryEvent>) {
          return to_json(body);
        } else if constexpr (std::is_same_v<T, SightingEvent>) {
          return to_json(body.sighting);
        } else if constexpr (std::is_same_v<T, CameraFrameEvent>) {
          return to_json(body.frame);
        } else if constexpr (std::is_same_v<T, LapCompleteEvent>) {
          return {{"lap", body.lap}, {"drone_ids", body.drone_ids}};
        } else if constexpr (std::is_same_v<T, PatrolCompleteEvent>) {
          return {{"laps", body.laps}};
        } else if constexpr (std::is_same_v<T, WaypointReachedEvent>) {
          return {{"drone_id", body.drone_id},
                  {"waypoint", to_json(body.waypoint)},
                  {"remaining", body.remaining}};
        } else if constexpr (std::is_same_v<T, BatteryLowEvent>) {
          return {{"drone_id", body.drone_id}, {"battery_pct", body.battery_pct}};
        } else {
          return {{"reason", body.reason}};
        }
      },
      e.body);
}

json to_json(const SimEvent& e) {
  return {{"tick", e.tick}, {"type", e.type()}, {"payload", event_payload(e)}};
}

SimEvent sim_event_from_json(const json& j) {
  SimEvent e;
  e.tick = j.at("tick").get<std::int64_t>();
  const std::string type = j.at("type").get<std::string>();
  const json& p = j.at("payload");
  if (type == "Telemetry") {
    e.body = telemetry_from_json(p);
  } else if (type == "Sighting") {
    e.body = SightingEvent{sighting_from_json(p)};
  } else if (type == "CameraFrame") {
    e.body = CameraFrameEvent{camera_frame_from_json(p)};
  } else if (type == "LapComplete") {
    e.body = LapCompleteEvent{p.at("lap").get<int>(), p.at("drone_ids").get<std::vector<int>>()};
  } else if (type == "PatrolComplete") {
    e.body = PatrolCompleteEvent{p.at("laps").get<int>()};
  } else if (type == "WaypointReached") {
    e.body = WaypointReachedEvent{p.at("drone_id").get<int>(), geo_from_json(p.at("waypoint")),
                                  p.at("remaining").get<int>()};
  } else if (type == "BatteryLow") {
    e.body = BatteryLowEvent{p.at("drone_id").get<int>(), p.at("battery_pct").get<double>()};
  } else if (type == "MissionStopped") {
    e.body = MissionStoppedEvent{p.at("reason").get<std::string>()};
  } else {
    throw Error("unknown event type '" + type + "'");
  }
  return e;
}

std::string encode_event_line(const SimEvent& e) { return to_json(e).dump() + '\n'; }

std::vector<SimEvent> read_replay_log(std::istream& in) {
  std::vector<SimEvent> events;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      events.push_back(sim_event_from_json(json::parse(line)));
    } catch (const std::exception& e) {
      throw Error("corrupt replay log at line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return events;
}

std::vector<SimEvent> read_replay_log(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open replay log '" + path.string() + "'");
  return read_replay_log(in);
}

}  // namespace swarm_ops
