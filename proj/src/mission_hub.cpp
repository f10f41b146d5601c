#include "swarm_ops/mission_hub.hpp"

#include <algorithm>

#include <spdlog/spdlog.h>

#include "swarm_ops/error.hpp"
#include "swarm_ops/evaluation.hpp"
#include "swarm_ops/sim_events.hpp"
#include "swarm_ops/situational.hpp"

namespace swarm_ops {

using nlohmann::json;

json to_json(const DeliveryRecord& r) {
  const Message& m = r.delivery.message;
  return {{"send_ms", r.send_ms},
          {"deliver_ms", r.deliver_ms ? json(*r.deliver_ms) : json(nullptr)},
          {"dropped", !r.deliver_ms.has_value()},
          {"from", r.delivery.from()},
          {"to", r.delivery.to},
          {"path", r.delivery.path},
          {"msg_type", to_string(m.type)},
          {"sender", m.sender},
          {"seq", m.seq},
          {"tick", m.tick},
          {"from_role", r.from_role},
          {"to_role", r.to_role},
          {"via_hub", r.via_hub}};
}

MissionHub::MissionHub(Scenario scenario, HubOptions options)
    : options_(options),
      planner_(std::move(scenario), options.technology, options.attempt_index, options.dt_s),
      link_(options.link) {
  options_.link.validate();
  hub_.register_endpoint(kPlannerId, Role::planner);
  hub_.register_endpoint(kSimId, Role::sim);
  counters_.emplace(kPlannerId, SequenceCounter(kPlannerId));
  counters_.emplace(kSimId, SequenceCounter(kSimId));
}

void MissionHub::connect_console(const std::string& id) { hub_.register_endpoint(id, Role::console); }

void MissionHub::disconnect_console(const std::string& id) {
  hub_.unregister_endpoint(id);
  std::erase_if(queue_, [&](const ScheduledDelivery& d) { return d.delivery.to == id; });
}

bool MissionHub::start_session(double now_ms) {
  if (planner_.session().phase != Phase::briefing) return false;
  broadcast_notifications(planner_.start(tick_), now_ms);
  broadcast_clock(now_ms);
  return true;
}

DeliveryRecord MissionHub::make_record(double send_ms, std::optional<double> deliver_ms, Delivery d) const {
  DeliveryRecord r{send_ms, deliver_ms, std::move(d), "", "", true};
  if (auto role = hub_.role_of(r.delivery.from())) r.from_role = to_string(*role);
  if (auto role = hub_.role_of(r.delivery.to)) r.to_role = to_string(*role);
  r.via_hub = respects_hub_topology(hub_, r.delivery);
  return r;
}

void MissionHub::schedule(std::vector<Delivery> deliveries, double now_ms) {
  std::vector<PendingDelivery> batch;
  for (auto& d : deliveries) {
    // The planner consumes these on receipt; there is no further hop to impair.
    if (d.to == kPlannerId) {
      audit_.push_back(make_record(now_ms, now_ms, std::move(d)));
      continue;
    }
    // The simulator bridge sits next to the planner; only console links are lossy.
    if (d.to == kSimId) {
      audit_.push_back(make_record(now_ms, now_ms, d));
      ScheduledDelivery s{now_ms, std::move(d)};
      auto at = std::upper_bound(queue_.begin(), queue_.end(), now_ms,
                                 [](double t, const ScheduledDelivery& q) { return t < q.deliver_time_ms; });
      queue_.insert(at, std::move(s));
      continue;
    }
    batch.push_back({now_ms, std::move(d)});
  }
  if (batch.empty()) return;
  ImpairmentResult r = link_.apply(batch);
  for (auto& p : r.dropped) audit_.push_back(make_record(p.send_time_ms, std::nullopt, std::move(p.delivery)));
  for (auto& s : r.delivered) {
    audit_.push_back(make_record(now_ms, s.deliver_time_ms, s.delivery));
    auto at = std::upper_bound(queue_.begin(), queue_.end(), s.deliver_time_ms,
                               [](double t, const ScheduledDelivery& q) { return t < q.deliver_time_ms; });
    queue_.insert(at, std::move(s));
  }
}

Message MissionHub::stamp(MsgType type, json payload) {
  return counters_.at(kPlannerId).make(type, tick_, std::move(payload));
}

void MissionHub::send(const std::string& from, MsgType type, json payload, double now_ms) {
  Message m = counters_.at(from).make(type, tick_, std::move(payload));
  schedule(route(hub_, m, from), now_ms);
}

void MissionHub::send_direct(const std::string& to, MsgType type, json payload, double now_ms) {
  Message m = counters_.at(kPlannerId).make(type, tick_, std::move(payload));
  schedule({Delivery{to, {kPlannerId, to}, std::move(m)}}, now_ms);
}

void MissionHub::forward(const std::string& from, const Message& m, double now_ms) {
  schedule(route(hub_, m, from), now_ms);
}

void MissionHub::reject(const std::string& to, const std::string& code, const std::string& text, double now_ms) {
  spdlog::debug("rejecting message from {}: {} ({})", to, text, code);
  if (!hub_.role_of(to)) return;
  send_direct(to, MsgType::Error, {{"code", code}, {"text", text}}, now_ms);
}

void MissionHub::broadcast_notifications(const std::vector<NotificationEvent>& notes, double now_ms) {
  for (const auto& n : notes) send(kPlannerId, MsgType::Notification, to_json(n), now_ms);
}

void MissionHub::broadcast_clock(double now_ms) {
  const MissionSession& s = planner_.session();
  double elapsed = 0.0;
  if (s.phase == Phase::running) elapsed = s.elapsed_s(tick_);
  if (s.completion_s) elapsed = *s.completion_s;
  send(kPlannerId, MsgType::ClockSync,
       {{"elapsed_s", elapsed},
        {"limit_s", s.limit_s},
        {"remaining_s", std::max(0.0, s.limit_s - elapsed)},
        {"phase", to_string(s.phase)},
        {"replay", options_.replay}},
       now_ms);
}

void MissionHub::broadcast_views(double now_ms) {
  if (hub_.consoles().empty()) return;
  const SwarmState swarm = planner_.swarm_view();
  const GeoCoordinate& origin = scenario().building.origin;

  std::vector<TrackedEntity> entities;
  for (const auto& d : swarm.drones) entities.push_back({"drone-" + std::to_string(d.id), d.pose.position, "drone"});
  for (std::size_t i = 0; i < planner_.marks().size(); ++i) {
    entities.push_back({"target-" + std::to_string(i + 1), planner_.marks()[i].position, "target"});
  }
  for (const auto& [id, queue] : pending_waypoints_) {
    for (std::size_t i = 0; i < queue.size(); ++i) {
      entities.push_back({"wp-" + std::to_string(id) + "-" + std::to_string(i + 1), queue[i], "waypoint"});
    }
  }

  const Viewport viewport;
  json map = to_json(minimap_project(origin, options_.minimap_meters_per_px, viewport, entities));
  json trajectories = json::array();
  for (DroneState d : swarm.drones) {
    if (auto it = pending_waypoints_.find(d.id); it != pending_waypoints_.end() && d.mode == DroneMode::waypoint) {
      d.waypoint_queue.assign(it->second.begin(), it->second.end());
    }
    const TrajectoryOverlay t = predicted_trajectory(d, scenario(), options_.trajectory_horizon_s);
    std::vector<TrackedEntity> pts;
    for (const auto& p : t.polyline) pts.push_back({"", p, "trajectory"});
    json px = json::array();
    for (const auto& e : minimap_project(origin, options_.minimap_meters_per_px, viewport, pts).entries) {
      px.push_back({e.x_px, e.y_px});
    }
    json tj = to_json(t);
    tj["polyline_px"] = px;
    trajectories.push_back(tj);
  }
  map["trajectories"] = trajectories;
  send(kPlannerId, MsgType::MiniMapView, map, now_ms);

  const auto focus = planner_.focus().focused;
  if (!focus) return;
  auto self = std::find_if(swarm.drones.begin(), swarm.drones.end(), [&](const DroneState& d) { return d.id == *focus; });
  if (self == swarm.drones.end()) return;
  std::vector<TrackedEntity> others;
  for (const auto& e : entities) {
    if (e.id != "drone-" + std::to_string(*focus)) others.push_back(e);
  }
  json entries = json::array();
  for (const auto& c : compass_view(self->pose.position, self->pose.heading_deg, others)) entries.push_back(to_json(c));
  send(kPlannerId, MsgType::CompassView,
       {{"observer",
         {{"drone_id", *focus},
          {"latitude_deg", self->pose.position.latitude_deg},
          {"longitude_deg", self->pose.position.longitude_deg},
          {"heading_deg", self->pose.heading_deg}}},
        {"entries", entries}},
       now_ms);
}

json MissionHub::redact(const CameraFrame& f) const {
  json j = to_json(f);
  // Consoles see what the camera shows, never the ground-truth ids or sectors.
  json seen = json::array();
  for (const auto& s : f.visible_sightings) {
    std::string content = "fire";
    for (const auto& p : scenario().persons) {
      if (p.id == s.entity) content = std::string(to_string(p.kind));
    }
    seen.push_back({{"content", content}, {"floor", s.floor}});
  }
  j["visible_sightings"] = seen;
  return j;
}

void MissionHub::on_sim_events(const std::vector<SimEvent>& events, double now_ms) {
  std::size_t i = 0;
  while (i < events.size()) {
    const std::int64_t t = events[i].tick;
    tick_ = std::max(tick_, t);
    const Phase before = planner_.session().phase;
    for (; i < events.size() && events[i].tick == t; ++i) {
      const SimEvent& e = events[i];
      broadcast_notifications(planner_.on_sim_event(e), now_ms);
      if (auto tel = std::get_if<TelemetryEvent>(&e.body)) {
        send(kSimId, MsgType::TelemetryUpdate, to_json(*tel), now_ms);
      } else if (auto cam = std::get_if<CameraFrameEvent>(&e.body)) {
        send(kSimId, MsgType::CameraFrame, redact(cam->frame), now_ms);
      } else if (auto wp = std::get_if<WaypointReachedEvent>(&e.body)) {
        auto& q = pending_waypoints_[wp->drone_id];
        const auto keep = static_cast<std::size_t>(std::max(0, wp->remaining));
        if (q.size() > keep) q.erase(q.begin(), q.end() - static_cast<std::ptrdiff_t>(keep));
        if (q.empty()) pending_waypoints_.erase(wp->drone_id);
      }
    }
    broadcast_notifications(planner_.advance(t), now_ms);
    if (planner_.session().phase != before || t % options_.clock_sync_period_ticks == 0) {
      broadcast_clock(now_ms);
      broadcast_views(now_ms);
    }
  }
}

void MissionHub::on_console_message(const std::string& from, const Message& m, double now_ms) {
  if (hub_.role_of(from) != Role::console) throw RoutingError("'" + from + "' is not a connected console");
  try {
    handle(from, m, now_ms);
  } catch (const RoutingError& e) {
    reject(from, "illegal_route", e.what(), now_ms);
  } catch (const PlannerError& e) {
    reject(from, "rejected", e.what(), now_ms);
  } catch (const EvaluationError& e) {
    reject(from, "invalid_report", e.what(), now_ms);
  } catch (const Error& e) {
    reject(from, "bad_request", e.what(), now_ms);
  } catch (const json::exception& e) {
    reject(from, "bad_request", std::string("malformed payload: ") + e.what(), now_ms);
  }
}

void MissionHub::handle(const std::string& from, const Message& m, double now_ms) {
  const bool mutating = m.type == MsgType::MissionCommand || m.type == MsgType::TargetMark ||
                        m.type == MsgType::ReportSubmission;
  if (options_.replay && mutating) {
    reject(from, "read_only", "replayed sessions accept no commands", now_ms);
    return;
  }

  switch (m.type) {
    case MsgType::Hello:
      return;  // handled by the transport
    case MsgType::MissionCommand: {
      const std::string action = m.payload.at("action").get<std::string>();
      Message fwd = m;
      if (action == "start") {
        route(hub_, m, from);  // legality first
        if (!start_session(now_ms)) throw PlannerError("session already started");
      } else if (action == "stop") {
        route(hub_, m, from);
        if (planner_.session().phase != Phase::running) throw PlannerError("session is not running");
        broadcast_notifications(planner_.stop(tick_), now_ms);
        broadcast_clock(now_ms);
      } else if (action == "create") {
        std::vector<GeoCoordinate> wps;
        for (const auto& w : m.payload.at("waypoints")) wps.push_back(geo_from_json(w));
        const MissionPlan plan = planner_.create_mission(wps, tick_);
        json assignment = json::object();
        for (const auto& [id, queue] : plan.assignment) {
          json q = json::array();
          for (const auto& g : queue) q.push_back(to_json(g));
          assignment[std::to_string(id)] = q;
          auto& pending = pending_waypoints_[id];
          pending.insert(pending.end(), queue.begin(), queue.end());
        }
        fwd.payload["plan_id"] = plan.id;
        fwd.payload["assignment"] = assignment;
      } else {
        throw Error("unknown mission action '" + action + "'");
      }
      forward(from, fwd, now_ms);
      return;
    }
    case MsgType::TargetMark: {
      route(hub_, m, from);
      std::optional<std::string> label;
      if (auto it = m.payload.find("label"); it != m.payload.end() && it->is_string()) label = it->get<std::string>();
      const TargetMark mark = planner_.mark_target(m.payload.at("drone_id").get<int>(), tick_, label);
      Message fwd = m;
      fwd.payload = to_json(mark);
      forward(from, fwd, now_ms);
      send(kPlannerId, MsgType::TargetMark, to_json(mark), now_ms);
      return;
    }
    case MsgType::DroneSelect: {
      route(hub_, m, from);
      std::optional<int> id;
      if (!m.payload.at("drone_id").is_null()) id = m.payload.at("drone_id").get<int>();
      planner_.select_drone(id);
      forward(from, m, now_ms);
      broadcast_views(now_ms);
      return;
    }
    case MsgType::ReportSubmission: {
      route(hub_, m, from);
      json report = m.payload.at("report");
      if (!report.is_object()) throw EvaluationError("report must be an object");
      const MissionSession& s = planner_.session();
      if (s.phase != Phase::stopped) throw PlannerError("reports are accepted once the session has stopped");
      // Completion comes from the planner clock, never the console's.
      report["completion_s"] = *s.completion_s;
      report["session"] = s.scenario_id;
      report["technology"] = std::string(to_string(s.technology));
      report["attempt_index"] = s.attempt_index;
      const ScoreCard card = score_report(report_from_json(report), scenario());
      planner_.submit_report(report);
      scorecard_ = to_json(card);
      forward(from, m, now_ms);
      send_direct(from, MsgType::Notification,
                  {{"severity", "info"}, {"kind", "ReportReceived"}, {"tick", tick_}, {"text", "Mission report received"}},
                  now_ms);
      broadcast_clock(now_ms);
      return;
    }
    case MsgType::Error:
      spdlog::warn("console {} reported an error: {}", from, m.payload.value("text", ""));
      forward(from, m, now_ms);
      return;
    default:
      route(hub_, m, from);  // throws for every remaining console-originated type
      reject(from, "illegal_route", std::string(to_string(m.type)) + " is not accepted from consoles", now_ms);
  }
}

std::vector<ScheduledDelivery> MissionHub::take_due(double now_ms) {
  auto end = std::find_if(queue_.begin(), queue_.end(), [&](const ScheduledDelivery& d) { return d.deliver_time_ms > now_ms; });
  std::vector<ScheduledDelivery> out(std::make_move_iterator(queue_.begin()), std::make_move_iterator(end));
  queue_.erase(queue_.begin(), end);
  return out;
}

std::vector<ScheduledDelivery> MissionHub::take_all() {
  std::vector<ScheduledDelivery> out = std::move(queue_);
  queue_.clear();
  return out;
}

std::optional<double> MissionHub::next_due_ms() const {
  if (queue_.empty()) return std::nullopt;
  return queue_.front().deliver_time_ms;
}

std::optional<SimCommand> MissionHub::sim_command(const Message& m) {
  if (m.type != MsgType::MissionCommand) return std::nullopt;
  const std::string action = m.payload.value("action", "");
  if (action == "start") return StartSim{};
  if (action == "stop") return StopSim{};
  if (action == "create" && m.payload.contains("assignment")) {
    AssignWaypoints a;
    for (const auto& [id, queue] : m.payload.at("assignment").items()) {
      auto& q = a.assignment[std::stoi(id)];
      for (const auto& g : queue) q.push_back(geo_from_json(g));
    }
    return a;
  }
  return std::nullopt;
}

json MissionHub::session_record() const {
  json record = planner_.session_record();
  record["scorecard"] = scorecard_ ? *scorecard_ : json(nullptr);
  std::size_t dropped = 0, bypass = 0;
  for (const auto& r : audit_) {
    if (!r.deliver_ms) ++dropped;
    if (!r.via_hub) ++bypass;
  }
  record["deliveries"] = {{"total", audit_.size()}, {"dropped", dropped}, {"hub_bypass", bypass}};
  record["replay"] = options_.replay;
  return record;
}

}  // namespace swarm_ops
