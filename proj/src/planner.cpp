#include "swarm_ops/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "swarm_ops/error.hpp"
#include "swarm_ops/sim_events.hpp"

namespace swarm_ops {

using nlohmann::json;

std::string_view to_string(Phase p) {
  switch (p) {
    case Phase::briefing: return "briefing";
    case Phase::running: return "running";
    case Phase::stopped: return "stopped";
    case Phase::reported: return "reported";
  }
  return "?";
}

std::string_view to_string(Technology t) { return t == Technology::AR ? "AR" : "PC"; }

std::optional<Technology> parse_technology(std::string_view text) {
  if (text == "AR") return Technology::AR;
  if (text == "PC") return Technology::PC;
  return std::nullopt;
}

bool is_legal_transition(Phase from, Phase to) {
  return (from == Phase::briefing && to == Phase::running) ||
         (from == Phase::running && to == Phase::stopped) ||
         (from == Phase::stopped && to == Phase::reported);
}

std::string_view to_string(Severity s) {
  switch (s) {
    case Severity::info: return "info";
    case Severity::warning: return "warning";
    case Severity::alert: return "alert";
  }
  return "?";
}

std::string_view to_string(NotificationKind k) {
  switch (k) {
    case NotificationKind::MissionStarted: return "MissionStarted";
    case NotificationKind::LapComplete: return "LapComplete";
    case NotificationKind::PatrolComplete: return "PatrolComplete";
    case NotificationKind::BatteryLow: return "BatteryLow";
    case NotificationKind::TimeWarning: return "TimeWarning";
    case NotificationKind::MissionStopped: return "MissionStopped";
  }
  return "?";
}

json to_json(const NotificationEvent& n) {
  return {{"severity", to_string(n.severity)},
          {"kind", to_string(n.kind)},
          {"tick", n.tick},
          {"text", n.text}};
}

namespace {

void require_transition(const MissionSession& s, Phase to) {
  if (!is_legal_transition(s.phase, to)) {
    throw PlannerError("illegal session transition " + std::string(to_string(s.phase)) + " -> " +
                       std::string(to_string(to)));
  }
}

std::string format_clock(double seconds) {
  const int total = static_cast<int>(std::lround(seconds));
  char buf[16];
  std::snprintf(buf, sizeof buf, "%d:%02d", total / 60, total % 60);
  return buf;
}

NotificationEvent stopped_notice(std::int64_t tick, double completion_s, const std::string& reason) {
  return {Severity::alert, NotificationKind::MissionStopped, tick,
          "Mission stopped (" + reason + ") at " + format_clock(completion_s)};
}

}  // namespace

SessionUpdate start_session(const MissionSession& s, std::int64_t tick) {
  require_transition(s, Phase::running);
  SessionUpdate u{s, {}};
  u.session.phase = Phase::running;
  u.session.start_tick = tick;
  u.notifications.push_back({Severity::info, NotificationKind::MissionStarted, tick,
                             "Mission started, limit " + format_clock(s.limit_s)});
  return u;
}

SessionUpdate advance_session(const MissionSession& s, std::int64_t tick) {
  if (s.phase != Phase::running) {
    throw PlannerError("cannot advance a session in phase " + std::string(to_string(s.phase)));
  }
  SessionUpdate u{s, {}};
  MissionSession& next = u.session;
  const double elapsed = s.elapsed_s(tick);
  constexpr double kEps = 1e-9;
  if (!next.time_warning_sent && elapsed >= s.limit_s - 60.0 - kEps) {
    next.time_warning_sent = true;
    u.notifications.push_back({Severity::warning, NotificationKind::TimeWarning, tick,
                               "60 seconds remaining"});
  }
  if (elapsed >= s.limit_s - kEps) {
    next.phase = Phase::stopped;
    next.stop_tick = tick;
    next.completion_s = s.limit_s;
    next.stop_reason = "limit";
    u.notifications.push_back(stopped_notice(tick, s.limit_s, "time limit"));
  }
  return u;
}

SessionUpdate stop_session(const MissionSession& s, std::int64_t tick, std::string reason) {
  require_transition(s, Phase::stopped);
  SessionUpdate u{s, {}};
  const double elapsed = std::min(s.elapsed_s(tick), s.limit_s);
  u.session.phase = Phase::stopped;
  u.session.stop_tick = tick;
  u.session.completion_s = elapsed;
  u.session.stop_reason = reason;
  u.notifications.push_back(stopped_notice(tick, elapsed, reason));
  return u;
}

MissionSession mark_reported(const MissionSession& s) {
  require_transition(s, Phase::reported);
  MissionSession next = s;
  next.phase = Phase::reported;
  return next;
}

Allocation allocate_waypoints(const std::vector<GeoCoordinate>& waypoints,
                              const std::vector<DroneSlot>& drones) {
  if (drones.empty()) throw PlannerError("no available drones for allocation");
  if (waypoints.empty()) throw PlannerError("no waypoints to allocate");

  std::vector<DroneSlot> slots = drones;
  std::sort(slots.begin(), slots.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  const GeoCoordinate frame = slots.front().position;
  std::vector<LocalPosition> cursor;
  std::vector<std::size_t> load(slots.size(), 0);
  for (const auto& s : slots) cursor.push_back(geo_to_local(frame, s.position));

  Allocation out;
  for (std::size_t w = 0; w < waypoints.size(); ++w) {
    const LocalPosition target = geo_to_local(frame, waypoints[w]);
    const std::size_t min_load = *std::min_element(load.begin(), load.end());
    std::size_t best = slots.size();
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < slots.size(); ++i) {
      if (load[i] != min_load) continue;
      const double d = distance(cursor[i], target);
      if (d < best_d) {  // strict: equal distance keeps the lower id
        best_d = d;
        best = i;
      }
    }
    out[slots[best].id].push_back(w);
    ++load[best];
    cursor[best] = target;
  }
  return out;
}

bool is_partition(const Allocation& a, std::size_t n) {
  std::vector<int> seen(n, 0);
  for (const auto& [id, idx] : a) {
    for (std::size_t i = 0; i < idx.size(); ++i) {
      if (idx[i] >= n) return false;
      if (i > 0 && idx[i] <= idx[i - 1]) return false;
      ++seen[idx[i]];
    }
  }
  return std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; });
}

json to_json(const MissionPlan& p) {
  json wps = json::array();
  for (const auto& w : p.waypoints) wps.push_back(to_json(w));
  json alloc = json::object();
  for (const auto& [id, idx] : p.allocation) alloc[std::to_string(id)] = idx;
  return {{"id", p.id}, {"waypoints", wps}, {"allocation", alloc}, {"created_at", p.created_at}};
}

MissionPlan create_mission(const std::string& plan_id, const std::vector<GeoCoordinate>& waypoints,
                           const SwarmState& swarm, const Scenario& scenario,
                           const MissionSession& session, std::int64_t tick) {
  if (session.phase != Phase::running) {
    throw PlannerError("missions can only be created while the session is running");
  }
  if (waypoints.empty()) throw PlannerError("mission needs at least one waypoint");
  for (std::size_t i = 0; i < waypoints.size(); ++i) {
    if (!is_valid(waypoints[i])) {
      throw PlannerError("waypoint " + std::to_string(i) + " has invalid coordinates");
    }
    const LocalPosition p = geo_to_local(scenario.building.origin, waypoints[i]);
    if (std::hypot(p.east_m, p.north_m) > kOperatingRadiusM) {
      throw PlannerError("waypoint " + std::to_string(i) + " lies outside the " +
                         std::to_string(static_cast<int>(kOperatingRadiusM)) + " m operating area");
    }
  }
  std::vector<DroneSlot> slots;
  for (const auto& d : swarm.drones) {
    if (d.mode != DroneMode::waypoint) slots.push_back({d.id, d.pose.position});
  }
  MissionPlan plan;
  plan.id = plan_id;
  plan.waypoints = waypoints;
  plan.created_at = tick;
  plan.allocation = allocate_waypoints(waypoints, slots);
  for (const auto& [id, idx] : plan.allocation) {
    auto& queue = plan.assignment[id];
    for (std::size_t i : idx) queue.push_back(waypoints[i]);
  }
  return plan;
}

json to_json(const TargetMark& m) {
  json j = {{"drone_id", m.drone_id}, {"tick", m.tick}, {"position", to_json(m.position)}};
  j["label"] = m.label ? json(*m.label) : json(nullptr);
  return j;
}

FocusState select_drone(std::optional<int> drone_id, const std::vector<int>& known_ids) {
  if (drone_id && std::find(known_ids.begin(), known_ids.end(), *drone_id) == known_ids.end()) {
    throw PlannerError("cannot focus unknown drone " + std::to_string(*drone_id));
  }
  return FocusState{drone_id};
}

TargetMark mark_target(int drone_id, const MissionSession& session, const TelemetryTable& telemetry,
                       std::int64_t tick, std::optional<std::string> label) {
  if (session.phase != Phase::running) {
    throw PlannerError("target marks are only accepted while the session is running");
  }
  auto it = telemetry.find(drone_id);
  if (it == telemetry.end()) throw PlannerError("unknown drone " + std::to_string(drone_id));
  return TargetMark{drone_id, tick, it->second.second.position, std::move(label)};
}

// --- MissionPlanner -----------------------------------------------------------------

MissionPlanner::MissionPlanner(Scenario scenario, Technology technology, int attempt_index,
                               double dt_s)
    : scenario_(std::move(scenario)) {
  session_.scenario_id = scenario_.id;
  session_.limit_s = scenario_.mission_limit_s;
  session_.dt_s = dt_s;
  session_.technology = technology;
  session_.attempt_index = attempt_index;
}

std::vector<NotificationEvent> MissionPlanner::record(std::vector<NotificationEvent> n) {
  notifications_.insert(notifications_.end(), n.begin(), n.end());
  return n;
}

std::vector<NotificationEvent> MissionPlanner::start(std::int64_t tick) {
  auto u = start_session(session_, tick);
  session_ = u.session;
  last_tick_ = tick;
  return record(std::move(u.notifications));
}

std::vector<NotificationEvent> MissionPlanner::on_sim_event(const SimEvent& e) {
  last_tick_ = std::max(last_tick_, e.tick);
  std::vector<NotificationEvent> out;
  std::visit(
      [&](const auto& body) {
        using T = std::decay_t<decltype(body)>;
        if constexpr (std::is_same_v<T, TelemetryEvent>) {
          telemetry_[body.drone_id] = {e.tick, body};
        } else if constexpr (std::is_same_v<T, LapCompleteEvent>) {
          out.push_back({Severity::info, NotificationKind::LapComplete, e.tick,
                         "Lap " + std::to_string(body.lap) + " complete"});
        } else if constexpr (std::is_same_v<T, PatrolCompleteEvent>) {
          out.push_back({Severity::info, NotificationKind::PatrolComplete, e.tick,
                         "Patrol complete (" + std::to_string(body.laps) + " laps)"});
        } else if constexpr (std::is_same_v<T, BatteryLowEvent>) {
          char buf[64];
          std::snprintf(buf, sizeof buf, "Drone %d battery low (%.1f%%)", body.drone_id, body.battery_pct);
          out.push_back({Severity::warning, NotificationKind::BatteryLow, e.tick, buf});
        } else if constexpr (std::is_same_v<T, MissionStoppedEvent>) {
          if (session_.phase == Phase::running) {
            auto u = body.reason == "limit" ? advance_session(session_, e.tick)
                                            : stop_session(session_, e.tick, body.reason);
            session_ = u.session;
            // A sim-side limit stop can land before the planner clock edge.
            if (session_.phase == Phase::running) {
              auto s = stop_session(session_, e.tick, body.reason);
              session_ = s.session;
              u.notifications.insert(u.notifications.end(), s.notifications.begin(), s.notifications.end());
            }
            out.insert(out.end(), u.notifications.begin(), u.notifications.end());
          }
        }
      },
      e.body);
  return record(std::move(out));
}

std::vector<NotificationEvent> MissionPlanner::advance(std::int64_t tick) {
  last_tick_ = std::max(last_tick_, tick);
  if (session_.phase != Phase::running) return {};
  auto u = advance_session(session_, tick);
  session_ = u.session;
  return record(std::move(u.notifications));
}

std::vector<NotificationEvent> MissionPlanner::stop(std::int64_t tick) {
  auto u = stop_session(session_, tick);
  session_ = u.session;
  return record(std::move(u.notifications));
}

SwarmState MissionPlanner::swarm_view() const {
  SwarmState view;
  view.tick = last_tick_;
  for (const auto& [id, entry] : telemetry_) {
    const TelemetryEvent& t = entry.second;
    DroneState d;
    d.id = id;
    d.floor_assignment = t.floor;
    d.pose = {t.position, t.azimuth_rad, t.heading_deg};
    d.battery_pct = t.battery_pct;
    d.speed_mps = t.speed_mps;
    d.laps_completed = t.laps_completed;
    d.mode = t.mode;
    view.drones.push_back(d);
  }
  return view;
}

MissionPlan MissionPlanner::create_mission(const std::vector<GeoCoordinate>& waypoints,
                                           std::int64_t tick) {
  auto plan = swarm_ops::create_mission("mission-" + std::to_string(plans_.size() + 1), waypoints,
                                        swarm_view(), scenario_, session_, tick);
  plans_.push_back(plan);
  return plan;
}

TargetMark MissionPlanner::mark_target(int drone_id, std::int64_t tick,
                                       std::optional<std::string> label) {
  auto mark = swarm_ops::mark_target(drone_id, session_, telemetry_, tick, std::move(label));
  marks_.push_back(mark);
  return mark;
}

FocusState MissionPlanner::select_drone(std::optional<int> drone_id) {
  std::vector<int> ids;
  for (int i = 1; i <= kSwarmSize; ++i) ids.push_back(i);
  focus_ = swarm_ops::select_drone(drone_id, ids);
  return focus_;
}

void MissionPlanner::submit_report(json report) {
  session_ = mark_reported(session_);
  report_ = std::move(report);
}

json MissionPlanner::session_record() const {
  json marks = json::array();
  for (const auto& m : marks_) marks.push_back(to_json(m));
  json notes = json::array();
  for (const auto& n : notifications_) notes.push_back(to_json(n));
  json plans = json::array();
  for (const auto& p : plans_) plans.push_back(to_json(p));
  json record = {
      {"kind", "session_record"},
      {"scenario_id", session_.scenario_id},
      {"technology", to_string(session_.technology)},
      {"attempt_index", session_.attempt_index},
      {"phase", to_string(session_.phase)},
      {"start_tick", session_.start_tick},
      {"limit_s", session_.limit_s},
      {"dt_s", session_.dt_s},
      {"target_marks", marks},
      {"notifications", notes},
      {"missions", plans},
  };
  record["stop_tick"] = session_.stop_tick ? json(*session_.stop_tick) : json(nullptr);
  record["completion_s"] = session_.completion_s ? json(*session_.completion_s) : json(nullptr);
  record["stop_reason"] = session_.stop_reason;
  record["report"] = report_ ? *report_ : json(nullptr);
  return record;
}

}  // namespace swarm_ops
