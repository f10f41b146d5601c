#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "swarm_ops/geo.hpp"
#include "swarm_ops/scenario.hpp"

namespace swarm_ops {

inline constexpr int kSwarmSize = 4;

struct SimConfig {
  double dt_s = 0.1;
  double cruise_speed_mps = 5.0;
  // Linear drain: 1 % every 30 s while airborne.
  double battery_drain_pct_per_s = 1.0 / 30.0;
  double low_battery_pct = 20.0;
  double visibility_range_m = 50.0;
  double arrival_radius_m = 1.0;
  int telemetry_period_ticks = 1;
  int camera_period_ticks = 10;
  // Headless runs end the mission on the PatrolComplete tick.
  bool stop_on_patrol_complete = false;
  // Per-facade camera gating, indexed by Facade. Only switched off by
  // mutation tests.
  std::array<bool, 4> facade_visible{true, true, true, true};
};

enum class DroneMode { patrol, waypoint, idle };

std::string_view to_string(DroneMode m);
std::optional<DroneMode> parse_drone_mode(std::string_view text);

struct DronePose {
  GeoCoordinate position;
  double azimuth_rad = 0.0;  // [0, 2pi), clockwise from north around the centroid
  double heading_deg = 0.0;  // camera boresight
};

struct DroneState {
  int id = 0;
  int floor_assignment = 0;
  DronePose pose;
  double battery_pct = 100.0;
  double speed_mps = 0.0;
  int laps_completed = 0;
  DroneMode mode = DroneMode::patrol;
  std::deque<GeoCoordinate> waypoint_queue;

  std::int64_t airborne_ticks = 0;
  bool battery_low_reported = false;
  bool queue_fresh = false;
};

struct SwarmState {
  std::int64_t tick = 0;
  bool patrol_complete = false;
  bool stop_requested = false;
  bool stopped = false;
  std::vector<DroneState> drones;

  const DroneState& drone(int id) const;
  DroneState& drone(int id);
  double elapsed_s(const SimConfig& cfg) const { return static_cast<double>(tick) * cfg.dt_s; }
};

struct Sighting {
  int drone_id = 0;
  std::int64_t tick = 0;
  std::string entity;  // person id or "fire"
  int floor = 0;
  Sector sector = Sector::N;
  Facade facade = Facade::N;

  bool operator==(const Sighting&) const = default;
};

enum class CellContent { empty, adult, child, fire, window };

std::string_view to_string(CellContent c);
std::optional<CellContent> parse_cell(std::string_view text);

struct CameraFrame {
  int drone_id = 0;
  std::int64_t tick = 0;
  Facade facade = Facade::N;
  // Row-major 3x3; columns are facade thirds left-to-right as the drone sees
  // them, entities sit in the middle row.
  std::array<CellContent, 9> grid{};
  std::vector<Sighting> visible_sightings;

  CellContent cell(int row, int col) const { return grid[row * 3 + col]; }
};

// --- replay-log events ------------------------------------------------------

struct TelemetryEvent {
  int drone_id = 0;
  int floor = 0;
  GeoCoordinate position;
  double azimuth_rad = 0.0;
  double heading_deg = 0.0;
  double battery_pct = 0.0;
  double speed_mps = 0.0;
  int laps_completed = 0;
  DroneMode mode = DroneMode::idle;
};

struct SightingEvent {
  Sighting sighting;
};

struct CameraFrameEvent {
  CameraFrame frame;
};

struct LapCompleteEvent {
  int lap = 0;
  std::vector<int> drone_ids;
};

struct PatrolCompleteEvent {
  int laps = 0;
};

struct WaypointReachedEvent {
  int drone_id = 0;
  GeoCoordinate waypoint;
  int remaining = 0;
};

struct BatteryLowEvent {
  int drone_id = 0;
  double battery_pct = 0.0;
};

struct MissionStoppedEvent {
  std::string reason;  // "limit" | "operator" | "patrol_complete"
};

using SimEventBody =
    std::variant<TelemetryEvent, SightingEvent, CameraFrameEvent, LapCompleteEvent,
                 PatrolCompleteEvent, WaypointReachedEvent, BatteryLowEvent, MissionStoppedEvent>;

struct SimEvent {
  std::int64_t tick = 0;
  SimEventBody body;

  std::string_view type() const;
};

// --- operations ---------------------------------------------------------------

/// Four drones stacked one per floor, due north of the centroid, full
/// batteries, patrolling.
SwarmState init_swarm(const Scenario& s, const SimConfig& cfg = {});

struct TickResult {
  SwarmState state;
  std::vector<SimEvent> events;
};

/// Advances the swarm by one fixed step. Throws SimulationError once the
/// mission has stopped.
TickResult tick(const SwarmState& state, const Scenario& s, const SimConfig& cfg = {});

/// Closed-form patrol pose at time t (0 <= t <= patrol duration).
DronePose drone_pose(const Scenario& s, int drone_id, double t_s);

std::vector<Sighting> compute_sightings(const Scenario& s, const DronePose& pose,
                                        const DroneState& drone, std::int64_t tick,
                                        const SimConfig& cfg = {});

CameraFrame render_camera_frame(const std::vector<Sighting>& sightings, const Scenario& s,
                                const DronePose& pose, int drone_id, std::int64_t tick);

using WaypointAssignment = std::map<int, std::vector<GeoCoordinate>>;

/// Hands waypoint queues to drones. Idle drones leave immediately; patrolling
/// drones keep their queue until the patrol completes.
SwarmState apply_waypoint_mission(const SwarmState& state, const WaypointAssignment& assignment);

/// Emits the tick-0 telemetry snapshot.
std::vector<SimEvent> snapshot_events(const SwarmState& state, const SimConfig& cfg = {});

/// Owns one run of the simulation loop.
class Simulator {
 public:
  explicit Simulator(Scenario scenario, SimConfig cfg = {});

  std::vector<SimEvent> start();
  std::vector<SimEvent> step();
  void apply_waypoint_mission(const WaypointAssignment& assignment);
  void request_stop() { state_.stop_requested = true; }

  const SwarmState& state() const { return state_; }
  const Scenario& scenario() const { return scenario_; }
  const SimConfig& config() const { return cfg_; }
  bool stopped() const { return state_.stopped; }

 private:
  Scenario scenario_;
  SimConfig cfg_;
  SwarmState state_;
};

}  // namespace swarm_ops
