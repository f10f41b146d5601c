#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "swarm_ops/mission_hub.hpp"
#include "swarm_ops/scenario.hpp"
#include "swarm_ops/swarm_sim.hpp"

namespace swarm_ops {

struct ServerOptions {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;  // 0 picks a free port, see MissionServer::port()
  HubOptions hub;
  SimConfig sim;
  double speed = 1.0;  // simulated seconds per wall second
  bool autostart = false;
  bool exit_when_done = false;  // after the report (live) or the last event (replay)
  bool handle_signals = false;  // SIGINT/SIGTERM shut down and flush the record
  std::filesystem::path out;    // session_record.json is written here when set
  // Replaces the live simulator with a recorded event stream.
  std::optional<std::vector<SimEvent>> replay_events;
  double flush_period_ms = 5.0;
};

/// Serves the planner hub on one TCP port. A connection whose first bytes
/// are an HTTP GET is upgraded to WebSocket (one message per text frame);
/// anything else speaks newline-framed JSON lines. Consoles must open with
/// a Hello carrying v=1 and role "console".
class MissionServer {
 public:
  MissionServer(Scenario scenario, ServerOptions options);
  ~MissionServer();
  MissionServer(const MissionServer&) = delete;
  MissionServer& operator=(const MissionServer&) = delete;

  /// Binds and starts the network and simulator tasks. Throws Error when the
  /// address cannot be bound.
  void start();
  std::uint16_t port() const;

  /// Thread-safe; flushes the session record and closes every connection.
  void request_stop();
  /// Blocks until the server has stopped.
  void wait();
  bool stopped() const;

  nlohmann::json session_record() const;
  std::vector<DeliveryRecord> audit() const;
  std::size_t console_count() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace swarm_ops
