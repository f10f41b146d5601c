#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "swarm_ops/geo.hpp"
#include "swarm_ops/scenario.hpp"
#include "swarm_ops/swarm_sim.hpp"

namespace swarm_ops {

enum class Phase { briefing, running, stopped, reported };
enum class Technology { AR, PC };

std::string_view to_string(Phase p);
std::string_view to_string(Technology t);
std::optional<Technology> parse_technology(std::string_view text);

/// Legal lifecycle edges: briefing -> running -> stopped -> reported.
bool is_legal_transition(Phase from, Phase to);

struct MissionSession {
  std::string scenario_id;
  Phase phase = Phase::briefing;
  std::int64_t start_tick = 0;
  std::optional<std::int64_t> stop_tick;
  std::optional<double> completion_s;
  std::string stop_reason;
  double limit_s = 360.0;
  double dt_s = 0.1;
  Technology technology = Technology::PC;
  int attempt_index = 1;
  bool time_warning_sent = false;

  double elapsed_s(std::int64_t tick) const {
    return static_cast<double>(tick - start_tick) * dt_s;
  }
};

enum class Severity { info, warning, alert };
enum class NotificationKind {
  MissionStarted,
  LapComplete,
  PatrolComplete,
  BatteryLow,
  TimeWarning,
  MissionStopped,
};

std::string_view to_string(Severity s);
std::string_view to_string(NotificationKind k);

struct NotificationEvent {
  Severity severity = Severity::info;
  NotificationKind kind = NotificationKind::MissionStarted;
  std::int64_t tick = 0;
  std::string text;
};

nlohmann::json to_json(const NotificationEvent& n);

struct SessionUpdate {
  MissionSession session;
  std::vector<NotificationEvent> notifications;
};

SessionUpdate start_session(const MissionSession& s, std::int64_t tick);

/// Advances a running session to `tick`: one TimeWarning at limit - 60 s, a
/// forced stop at the limit. Throws PlannerError unless running.
SessionUpdate advance_session(const MissionSession& s, std::int64_t tick);

/// Operator-initiated early stop.
SessionUpdate stop_session(const MissionSession& s, std::int64_t tick,
                           std::string reason = "operator");

MissionSession mark_reported(const MissionSession& s);

// --- missions -------------------------------------------------------------------

/// A drone as seen by the allocator: id plus the position it would start
/// its next leg from.
struct DroneSlot {
  int id = 0;
  GeoCoordinate position;
};

/// drone id -> indices into the waypoint list, in mission order.
using Allocation = std::map<int, std::vector<std::size_t>>;

/// Greedy balanced allocation: each waypoint in turn goes to the nearest
/// drone among those with the smallest current load; ties go to the lowest
/// id. A drone's "position" advances to each waypoint it receives.
Allocation allocate_waypoints(const std::vector<GeoCoordinate>& waypoints,
                              const std::vector<DroneSlot>& drones);

/// True when `a` splits indices [0, n) into disjoint, order-preserving,
/// complete sublists.
bool is_partition(const Allocation& a, std::size_t n);

struct MissionPlan {
  std::string id;
  std::vector<GeoCoordinate> waypoints;
  Allocation allocation;
  WaypointAssignment assignment;
  std::int64_t created_at = 0;
};

nlohmann::json to_json(const MissionPlan& p);

inline constexpr double kOperatingRadiusM = 500.0;

MissionPlan create_mission(const std::string& plan_id, const std::vector<GeoCoordinate>& waypoints,
                           const SwarmState& swarm, const Scenario& scenario,
                           const MissionSession& session, std::int64_t tick);

struct TargetMark {
  int drone_id = 0;
  std::int64_t tick = 0;
  GeoCoordinate position;
  std::optional<std::string> label;
};

nlohmann::json to_json(const TargetMark& m);

struct FocusState {
  std::optional<int> focused;
};

FocusState select_drone(std::optional<int> drone_id, const std::vector<int>& known_ids);

/// Latest telemetry the planner holds for each drone, with the tick it
/// describes.
using TelemetryTable = std::map<int, std::pair<std::int64_t, TelemetryEvent>>;

TargetMark mark_target(int drone_id, const MissionSession& session, const TelemetryTable& telemetry,
                       std::int64_t tick, std::optional<std::string> label = std::nullopt);

/// Single logical actor holding mission state. Every mutation comes from a
/// sim event or an operator command; outputs are notifications and commands.
class MissionPlanner {
 public:
  MissionPlanner(Scenario scenario, Technology technology = Technology::PC, int attempt_index = 1,
                 double dt_s = 0.1);

  std::vector<NotificationEvent> start(std::int64_t tick);
  /// Feeds one simulator event; returns notifications it causes.
  std::vector<NotificationEvent> on_sim_event(const SimEvent& e);
  /// Clock edge: time warning and forced stop.
  std::vector<NotificationEvent> advance(std::int64_t tick);
  std::vector<NotificationEvent> stop(std::int64_t tick);

  MissionPlan create_mission(const std::vector<GeoCoordinate>& waypoints, std::int64_t tick);
  TargetMark mark_target(int drone_id, std::int64_t tick, std::optional<std::string> label = {});
  FocusState select_drone(std::optional<int> drone_id);
  /// Stores the report; moves the session to `reported`.
  void submit_report(nlohmann::json report);

  const MissionSession& session() const { return session_; }
  const Scenario& scenario() const { return scenario_; }
  const TelemetryTable& telemetry() const { return telemetry_; }
  const std::vector<TargetMark>& marks() const { return marks_; }
  const std::vector<NotificationEvent>& notifications() const { return notifications_; }
  const std::vector<MissionPlan>& plans() const { return plans_; }
  const FocusState& focus() const { return focus_; }
  const std::optional<nlohmann::json>& report() const { return report_; }
  std::int64_t last_tick() const { return last_tick_; }

  /// Swarm as the planner knows it: the latest telemetry of each drone.
  SwarmState swarm_view() const;

  /// Session record document consumed by the evaluation tools.
  nlohmann::json session_record() const;

 private:
  std::vector<NotificationEvent> record(std::vector<NotificationEvent> n);

  Scenario scenario_;
  MissionSession session_;
  TelemetryTable telemetry_;
  std::vector<TargetMark> marks_;
  std::vector<NotificationEvent> notifications_;
  std::vector<MissionPlan> plans_;
  FocusState focus_;
  std::optional<nlohmann::json> report_;
  std::int64_t last_tick_ = 0;
};

}  // namespace swarm_ops
