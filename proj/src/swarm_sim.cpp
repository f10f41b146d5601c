#include "swarm_ops/swarm_sim.hpp"

#include <algorithm>
#include <cmath>

#include "swarm_ops/error.hpp"

namespace swarm_ops {

namespace {

constexpr double kTwoPi = 2.0 * kPi;
constexpr double kPhaseEps = 1e-9;

double wrap_angle(double rad) {
  double a = std::fmod(rad, kTwoPi);
  if (a < 0.0) a += kTwoPi;
  if (a >= kTwoPi) a = 0.0;
  return a;
}

double wrap_deg(double deg) {
  double a = std::fmod(deg, 360.0);
  if (a < 0.0) a += 360.0;
  if (a >= 360.0) a = 0.0;
  return a;
}

double drone_altitude(const Scenario& s, int floor) {
  return (static_cast<double>(floor) - 0.5) * s.building.floor_height_m;
}

LocalPosition orbit_point(const Scenario& s, double azimuth_rad, double altitude) {
  const double r = s.orbit_radius();
  return {r * std::sin(azimuth_rad), r * std::cos(azimuth_rad), altitude};
}

DronePose patrol_pose(const Scenario& s, int floor, double azimuth_rad) {
  DronePose pose;
  pose.azimuth_rad = azimuth_rad;
  pose.position =
      local_to_geo(s.building.origin, orbit_point(s, azimuth_rad, drone_altitude(s, floor)));
  pose.heading_deg = wrap_deg(rad_to_deg(azimuth_rad) + 180.0);
  return pose;
}

// Horizontal distance from a point to a facade segment of the footprint.
double distance_to_facade(const LocalPosition& p, const Building& b, Facade f) {
  const double hw = b.half_width();
  const double hd = b.half_depth();
  double x0, y0, x1, y1;
  switch (f) {
    case Facade::N: x0 = -hw; y0 = hd; x1 = hw; y1 = hd; break;
    case Facade::S: x0 = -hw; y0 = -hd; x1 = hw; y1 = -hd; break;
    case Facade::E: x0 = hw; y0 = -hd; x1 = hw; y1 = hd; break;
    case Facade::W:
    default: x0 = -hw; y0 = -hd; x1 = -hw; y1 = hd; break;
  }
  const double cx = std::clamp(p.east_m, std::min(x0, x1), std::max(x0, x1));
  const double cy = std::clamp(p.north_m, std::min(y0, y1), std::max(y0, y1));
  return std::hypot(p.east_m - cx, p.north_m - cy);
}

// Column (0 = left) of a sector on a facade as seen from outside looking in.
int facade_column(Facade f, Sector s) {
  switch (f) {
    case Facade::N:  // looking south, east is on the left
      return s == Sector::NE ? 0 : s == Sector::N ? 1 : 2;
    case Facade::E:  // looking west, south is on the left
      return s == Sector::SE ? 0 : s == Sector::E ? 1 : 2;
    case Facade::S:  // looking north, west is on the left
      return s == Sector::SW ? 0 : s == Sector::S ? 1 : 2;
    case Facade::W:  // looking east, north is on the left
    default:
      return s == Sector::NW ? 0 : s == Sector::W ? 1 : 2;
  }
}

int priority(CellContent c) {
  switch (c) {
    case CellContent::fire: return 3;
    case CellContent::child: return 2;
    case CellContent::adult: return 1;
    default: return 0;
  }
}

TelemetryEvent telemetry_of(const DroneState& d) {
  return TelemetryEvent{
      .drone_id = d.id,
      .floor = d.floor_assignment,
      .position = d.pose.position,
      .azimuth_rad = d.pose.azimuth_rad,
      .heading_deg = d.pose.heading_deg,
      .battery_pct = d.battery_pct,
      .speed_mps = d.speed_mps,
      .laps_completed = d.laps_completed,
      .mode = d.mode,
  };
}

void start_waypoints_or_idle(DroneState& d) {
  if (d.waypoint_queue.empty()) {
    d.mode = DroneMode::idle;
  } else {
    d.mode = DroneMode::waypoint;
    d.queue_fresh = true;
  }
}

}  // namespace

std::string_view to_string(DroneMode m) {
  switch (m) {
    case DroneMode::patrol: return "patrol";
    case DroneMode::waypoint: return "waypoint";
    case DroneMode::idle: return "idle";
  }
  return "?";
}

std::optional<DroneMode> parse_drone_mode(std::string_view text) {
  for (DroneMode m : {DroneMode::patrol, DroneMode::waypoint, DroneMode::idle}) {
    if (to_string(m) == text) return m;
  }
  return std::nullopt;
}

std::string_view to_string(CellContent c) {
  switch (c) {
    case CellContent::empty: return "empty";
    case CellContent::adult: return "adult";
    case CellContent::child: return "child";
    case CellContent::fire: return "fire";
    case CellContent::window: return "window";
  }
  return "?";
}

std::optional<CellContent> parse_cell(std::string_view text) {
  for (CellContent c : {CellContent::empty, CellContent::adult, CellContent::child,
                        CellContent::fire, CellContent::window}) {
    if (to_string(c) == text) return c;
  }
  return std::nullopt;
}

const DroneState& SwarmState::drone(int id) const {
  for (const auto& d : drones) {
    if (d.id == id) return d;
  }
  throw SimulationError("unknown drone id " + std::to_string(id));
}

DroneState& SwarmState::drone(int id) {
  return const_cast<DroneState&>(std::as_const(*this).drone(id));
}

std::string_view SimEvent::type() const {
  static constexpr std::string_view kNames[] = {
      "Telemetry",       "Sighting",       "CameraFrame", "LapComplete",
      "PatrolComplete",  "WaypointReached", "BatteryLow", "MissionStopped"};
  return kNames[body.index()];
}

SwarmState init_swarm(const Scenario& s, const SimConfig& cfg) {
  SwarmState state;
  for (int i = 1; i <= kSwarmSize; ++i) {
    DroneState d;
    d.id = i;
    d.floor_assignment = i;
    d.pose = patrol_pose(s, i, 0.0);
    d.speed_mps = s.angular_rate() * s.orbit_radius();
    d.mode = DroneMode::patrol;
    state.drones.push_back(std::move(d));
  }
  (void)cfg;
  return state;
}

DronePose drone_pose(const Scenario& s, int drone_id, double t_s) {
  if (!(t_s >= 0.0 && t_s <= s.patrol.duration_s)) {
    throw SimulationError("drone_pose: t=" + std::to_string(t_s) +
                          " s outside the patrol window [0, " +
                          std::to_string(s.patrol.duration_s) + "]");
  }
  if (drone_id < 1 || drone_id > kSwarmSize) {
    throw SimulationError("unknown drone id " + std::to_string(drone_id));
  }
  return patrol_pose(s, drone_id, wrap_angle(s.angular_rate() * t_s));
}

std::vector<Sighting> compute_sightings(const Scenario& s, const DronePose& pose,
                                        const DroneState& drone, std::int64_t tick,
                                        const SimConfig& cfg) {
  std::vector<Sighting> out;
  if (drone.mode == DroneMode::idle) return out;
  const Facade facade = facade_for_azimuth(pose.azimuth_rad);
  if (!cfg.facade_visible[static_cast<int>(facade)]) return out;
  const LocalPosition here = geo_to_local(s.building.origin, pose.position);
  if (distance_to_facade(here, s.building, facade) > cfg.visibility_range_m) return out;

  const int floor = drone.floor_assignment;
  if (s.fire.floor == floor && sector_on_facade(s.fire.sector, facade)) {
    out.push_back({drone.id, tick, "fire", floor, s.fire.sector, facade});
  }
  for (const auto& p : s.persons) {
    if (p.floor == floor && sector_on_facade(p.sector, facade)) {
      out.push_back({drone.id, tick, p.id, floor, p.sector, facade});
    }
  }
  return out;
}

CameraFrame render_camera_frame(const std::vector<Sighting>& sightings, const Scenario& s,
                                const DronePose& pose, int drone_id, std::int64_t tick) {
  CameraFrame frame;
  frame.drone_id = drone_id;
  frame.tick = tick;
  frame.facade = facade_for_azimuth(pose.azimuth_rad);
  frame.grid.fill(CellContent::empty);
  for (const auto& sighting : sightings) {
    if (sighting.drone_id != drone_id || sighting.tick != tick) {
      throw SimulationError("camera frame for drone " + std::to_string(drone_id) + " tick " +
                            std::to_string(tick) + " given a sighting from drone " +
                            std::to_string(sighting.drone_id) + " tick " +
                            std::to_string(sighting.tick));
    }
    if (sighting.facade != frame.facade) {
      throw SimulationError("sighting facade does not match the drone's view");
    }
    CellContent content = CellContent::fire;
    if (sighting.entity != "fire") {
      auto it = std::find_if(s.persons.begin(), s.persons.end(),
                             [&](const Person& p) { return p.id == sighting.entity; });
      if (it == s.persons.end()) {
        throw SimulationError("sighting of unknown entity '" + sighting.entity + "'");
      }
      content = it->kind == PersonKind::child ? CellContent::child : CellContent::adult;
    }
    CellContent& cell = frame.grid[3 + facade_column(frame.facade, sighting.sector)];
    if (priority(content) > priority(cell)) cell = content;
    frame.visible_sightings.push_back(sighting);
  }
  return frame;
}

SwarmState apply_waypoint_mission(const SwarmState& state, const WaypointAssignment& assignment) {
  std::size_t total = 0;
  for (const auto& [id, queue] : assignment) {
    total += queue.size();
    bool known = std::any_of(state.drones.begin(), state.drones.end(),
                             [id = id](const DroneState& d) { return d.id == id; });
    if (!known) throw SimulationError("waypoint assignment references unknown drone " + std::to_string(id));
  }
  if (total == 0) throw SimulationError("waypoint mission has no waypoints");

  SwarmState next = state;
  for (const auto& [id, queue] : assignment) {
    if (queue.empty()) continue;
    DroneState& d = next.drone(id);
    if (d.mode == DroneMode::waypoint) {
      throw SimulationError("drone " + std::to_string(id) + " is already flying a waypoint mission");
    }
    d.waypoint_queue.assign(queue.begin(), queue.end());
    if (d.mode == DroneMode::idle) start_waypoints_or_idle(d);
  }
  return next;
}

std::vector<SimEvent> snapshot_events(const SwarmState& state, const SimConfig& cfg) {
  (void)cfg;
  std::vector<SimEvent> events;
  for (const auto& d : state.drones) events.push_back({state.tick, telemetry_of(d)});
  return events;
}

TickResult tick(const SwarmState& state, const Scenario& s, const SimConfig& cfg) {
  if (state.stopped) {
    throw SimulationError("tick rejected: mission already stopped at tick " +
                          std::to_string(state.tick));
  }
  TickResult result{state, {}};
  SwarmState& next = result.state;
  auto& events = result.events;
  next.tick = state.tick + 1;
  const double t = static_cast<double>(next.tick) * cfg.dt_s;
  const Building& b = s.building;

  // Patrol phase in laps, derived from the tick count so no error accumulates.
  const double phase = static_cast<double>(s.patrol.laps) * t / s.patrol.duration_s;
  const bool patrol_done_now =
      !state.patrol_complete && phase >= static_cast<double>(s.patrol.laps) - kPhaseEps;
  const int whole_laps = std::min(s.patrol.laps, static_cast<int>(std::floor(phase + kPhaseEps)));
  double patrol_azimuth = 0.0;
  if (!patrol_done_now) {
    double frac = phase - std::floor(phase + kPhaseEps);
    if (frac < 0.0) frac = 0.0;
    patrol_azimuth = wrap_angle(frac * kTwoPi);
  }

  std::vector<WaypointReachedEvent> reached;
  std::vector<BatteryLowEvent> low;
  std::vector<int> lapped;
  std::vector<DroneMode> mode_this_tick;

  for (auto& d : next.drones) {
    mode_this_tick.push_back(d.mode);
    if (d.mode != DroneMode::idle) ++d.airborne_ticks;

    if (d.mode == DroneMode::patrol) {
      d.pose = patrol_pose(s, d.floor_assignment, patrol_azimuth);
      d.speed_mps = s.angular_rate() * s.orbit_radius();
      if (whole_laps > d.laps_completed) {
        d.laps_completed = whole_laps;
        lapped.push_back(d.id);
      }
    } else if (d.mode == DroneMode::waypoint) {
      LocalPosition pos = geo_to_local(b.origin, d.pose.position);
      auto pop_reached = [&](const GeoCoordinate& wp) {
        d.waypoint_queue.pop_front();
        reached.push_back({d.id, wp, static_cast<int>(d.waypoint_queue.size())});
      };
      if (d.queue_fresh) {
        while (!d.waypoint_queue.empty() &&
               distance(pos, geo_to_local(b.origin, d.waypoint_queue.front())) <= cfg.arrival_radius_m) {
          pop_reached(d.waypoint_queue.front());
        }
        d.queue_fresh = false;
      }
      double heading = d.pose.heading_deg;
      if (!d.waypoint_queue.empty()) {
        const GeoCoordinate wp = d.waypoint_queue.front();
        const LocalPosition target = geo_to_local(b.origin, wp);
        const double step = cfg.cruise_speed_mps * cfg.dt_s;
        const double dist = distance(pos, target);
        if (dist > 1e-9) {
          heading = wrap_deg(rad_to_deg(std::atan2(target.east_m - pos.east_m, target.north_m - pos.north_m)));
        }
        if (dist <= step + 1e-6) {  // absorbs geo round-trip drift
          pos = target;
          pop_reached(wp);
          while (!d.waypoint_queue.empty() &&
                 distance(pos, geo_to_local(b.origin, d.waypoint_queue.front())) <= cfg.arrival_radius_m) {
            pop_reached(d.waypoint_queue.front());
          }
        } else {
          const double k = step / dist;
          pos.east_m += (target.east_m - pos.east_m) * k;
          pos.north_m += (target.north_m - pos.north_m) * k;
          pos.up_m += (target.up_m - pos.up_m) * k;
        }
      }
      d.pose.position = local_to_geo(b.origin, pos);
      d.pose.azimuth_rad = wrap_angle(std::atan2(pos.east_m, pos.north_m));
      d.pose.heading_deg = heading;
      d.speed_mps = cfg.cruise_speed_mps;
      if (d.waypoint_queue.empty()) {
        d.mode = DroneMode::idle;
        d.speed_mps = 0.0;
      }
    }

    const double airborne_s = static_cast<double>(d.airborne_ticks) * cfg.dt_s;
    d.battery_pct = std::max(0.0, 100.0 - cfg.battery_drain_pct_per_s * airborne_s);
    if (!d.battery_low_reported && d.battery_pct <= cfg.low_battery_pct) {
      d.battery_low_reported = true;
      low.push_back({d.id, d.battery_pct});
    }
  }

  if (patrol_done_now) {
    next.patrol_complete = true;
    for (auto& d : next.drones) {
      if (d.mode == DroneMode::patrol) {
        start_waypoints_or_idle(d);
        d.speed_mps = d.mode == DroneMode::idle ? 0.0 : cfg.cruise_speed_mps;
      }
    }
  }

  if (cfg.telemetry_period_ticks > 0 && next.tick % cfg.telemetry_period_ticks == 0) {
    for (const auto& d : next.drones) events.push_back({next.tick, telemetry_of(d)});
  }

  const bool camera_tick = cfg.camera_period_ticks > 0 && next.tick % cfg.camera_period_ticks == 0;
  for (std::size_t i = 0; i < next.drones.size(); ++i) {
    if (mode_this_tick[i] == DroneMode::idle) continue;
    DroneState seen = next.drones[i];
    seen.mode = mode_this_tick[i];
    auto sightings = compute_sightings(s, seen.pose, seen, next.tick, cfg);
    for (const auto& sg : sightings) events.push_back({next.tick, SightingEvent{sg}});
    if (camera_tick) {
      events.push_back({next.tick, CameraFrameEvent{render_camera_frame(sightings, s, seen.pose,
                                                                          seen.id, next.tick)}});
    }
  }

  if (!lapped.empty()) events.push_back({next.tick, LapCompleteEvent{whole_laps, lapped}});
  for (auto& r : reached) events.push_back({next.tick, r});
  for (auto& l : low) events.push_back({next.tick, l});
  if (patrol_done_now) events.push_back({next.tick, PatrolCompleteEvent{s.patrol.laps}});

  const bool at_limit = t >= s.mission_limit_s - 1e-9;
  const bool patrol_stop = patrol_done_now && cfg.stop_on_patrol_complete;
  if (at_limit || state.stop_requested || patrol_stop) {
    next.stopped = true;
    const char* reason = at_limit ? "limit" : state.stop_requested ? "operator" : "patrol_complete";
    events.push_back({next.tick, MissionStoppedEvent{reason}});
  }
  return result;
}

Simulator::Simulator(Scenario scenario, SimConfig cfg)
    : scenario_(std::move(scenario)), cfg_(cfg), state_(init_swarm(scenario_, cfg_)) {}

std::vector<SimEvent> Simulator::start() { return snapshot_events(state_, cfg_); }

std::vector<SimEvent> Simulator::step() {
  auto result = tick(state_, scenario_, cfg_);
  state_ = std::move(result.state);
  return std::move(result.events);
}

void Simulator::apply_waypoint_mission(const WaypointAssignment& assignment) {
  state_ = swarm_ops::apply_waypoint_mission(state_, assignment);
}

}  // namespace swarm_ops
