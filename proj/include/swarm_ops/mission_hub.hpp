#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "swarm_ops/hub.hpp"
#include "swarm_ops/planner.hpp"
#include "swarm_ops/protocol.hpp"
#include "swarm_ops/scenario.hpp"
#include "swarm_ops/swarm_sim.hpp"

namespace swarm_ops {

inline constexpr const char* kPlannerId = "planner";
inline constexpr const char* kSimId = "sim";

struct HubOptions {
  LinkProfile link;
  Technology technology = Technology::PC;
  int attempt_index = 1;
  double dt_s = 0.1;
  int clock_sync_period_ticks = 10;
  // Replayed sessions are read-only and flag every ClockSync.
  bool replay = false;
  double minimap_meters_per_px = 0.25;
  double trajectory_horizon_s = 30.0;
};

/// What the simulator bridge must do once a MissionCommand reaches it.
struct StartSim {};
struct StopSim {};
struct AssignWaypoints {
  WaypointAssignment assignment;
};
using SimCommand = std::variant<StartSim, StopSim, AssignWaypoints>;

/// One routed message as it crossed (or failed to cross) the network.
struct DeliveryRecord {
  double send_ms = 0.0;
  std::optional<double> deliver_ms;  // nullopt when the link dropped it
  Delivery delivery;
  // Captured when routed; endpoints may disconnect later.
  std::string from_role;
  std::string to_role;
  bool via_hub = true;
};

nlohmann::json to_json(const DeliveryRecord& r);

/// Composition of routing, impairment and the planner acting in transit.
/// Single-threaded: the owner feeds sim events and console messages and
/// drains due deliveries. Deliveries addressed to the simulator are turned
/// into SimCommands by `sim_command`.
class MissionHub {
 public:
  MissionHub(Scenario scenario, HubOptions options = {});

  void connect_console(const std::string& id);
  void disconnect_console(const std::string& id);
  std::vector<std::string> consoles() const { return hub_.consoles(); }

  /// Starts the planner session without a console command (headless runs,
  /// --autostart, replay). Returns false when already started.
  bool start_session(double now_ms);

  /// Events of one or more simulator ticks.
  void on_sim_events(const std::vector<SimEvent>& events, double now_ms);

  /// A decoded message from a console. Rejections become an Error message
  /// addressed to that console only.
  void on_console_message(const std::string& from, const Message& m, double now_ms);

  /// Error reply for a line that failed to decode.
  void reject(const std::string& to, const std::string& code, const std::string& text, double now_ms);

  /// Deliveries whose scheduled time is <= now_ms, in delivery order.
  std::vector<ScheduledDelivery> take_due(double now_ms);
  std::vector<ScheduledDelivery> take_all();
  std::optional<double> next_due_ms() const;

  /// A planner-stamped message for the transport itself (handshake replies,
  /// errors before a console is registered). Not routed and not audited.
  Message stamp(MsgType type, nlohmann::json payload);

  static std::optional<SimCommand> sim_command(const Message& m);

  const std::vector<DeliveryRecord>& audit() const { return audit_; }
  const MissionPlanner& planner() const { return planner_; }
  const Scenario& scenario() const { return planner_.scenario(); }
  const HubOptions& options() const { return options_; }
  std::int64_t tick() const { return tick_; }

  /// Session record plus the scorecard of the submitted report, if any.
  nlohmann::json session_record() const;

 private:
  void send(const std::string& from, MsgType type, nlohmann::json payload, double now_ms);
  void send_direct(const std::string& to, MsgType type, nlohmann::json payload, double now_ms);
  void forward(const std::string& from, const Message& m, double now_ms);
  void schedule(std::vector<Delivery> deliveries, double now_ms);
  DeliveryRecord make_record(double send_ms, std::optional<double> deliver_ms, Delivery d) const;
  void broadcast_notifications(const std::vector<NotificationEvent>& n, double now_ms);
  void broadcast_clock(double now_ms);
  void broadcast_views(double now_ms);
  void handle(const std::string& from, const Message& m, double now_ms);
  nlohmann::json redact(const CameraFrame& f) const;

  HubOptions options_;
  HubState hub_;
  MissionPlanner planner_;
  LinkImpairment link_;
  std::map<std::string, SequenceCounter> counters_;
  std::vector<ScheduledDelivery> queue_;  // kept sorted by deliver time
  std::vector<DeliveryRecord> audit_;
  std::int64_t tick_ = 0;
  std::map<int, std::vector<GeoCoordinate>> pending_waypoints_;
  std::optional<nlohmann::json> scorecard_;
};

}  // namespace swarm_ops
