#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "swarm_ops/protocol.hpp"

namespace swarm_ops {

enum class Role { planner, console, sim };

std::string_view to_string(Role r);
std::optional<Role> parse_role(std::string_view text);

struct Endpoint {
  std::string id;
  Role role = Role::console;
};

/// One message handed to one endpoint. `path` lists every hop from the
/// originating endpoint to `to`, inclusive.
struct Delivery {
  std::string to;
  std::vector<std::string> path;
  Message message;

  const std::string& from() const { return path.front(); }
  /// Endpoint of the last hop (the link the delivery travels on).
  const std::string& last_hop() const { return path[path.size() - 2]; }
};

/// Registered endpoints of the star topology. The planner is the hub; the
/// simulator bridge and the consoles only ever talk to it.
class HubState {
 public:
  /// Throws RoutingError on duplicate ids or a second planner/sim.
  void register_endpoint(const std::string& id, Role role);
  void unregister_endpoint(const std::string& id);

  std::optional<Role> role_of(const std::string& id) const;
  const std::optional<std::string>& planner() const { return planner_; }
  const std::optional<std::string>& sim() const { return sim_; }
  std::vector<std::string> consoles() const;
  std::size_t size() const { return endpoints_.size(); }

 private:
  std::map<std::string, Role> endpoints_;
  std::optional<std::string> planner_;
  std::optional<std::string> sim_;
};

/// Pure routing decision for a message sent by `from`. Throws RoutingError
/// for unregistered senders or illegal directions (e.g. a MissionCommand
/// originating at the simulator).
std::vector<Delivery> route(const HubState& hub, const Message& m, const std::string& from);

/// True when a delivery between the simulator and a console went through the
/// planner.
bool respects_hub_topology(const HubState& hub, const Delivery& d);

// --- link impairment ----------------------------------------------------------

struct LinkProfile {
  double latency_ms = 0.0;
  double jitter_ms = 0.0;  // uniform in [0, jitter_ms]
  double loss_rate = 0.0;  // [0, 1)
  std::uint64_t seed = 0;

  /// Throws Error when loss_rate is outside [0, 1) or timings are negative.
  void validate() const;
  bool lossless() const { return latency_ms == 0.0 && jitter_ms == 0.0 && loss_rate == 0.0; }
};

struct PendingDelivery {
  double send_time_ms = 0.0;
  Delivery delivery;
};

struct ScheduledDelivery {
  double deliver_time_ms = 0.0;
  Delivery delivery;
};

struct ImpairmentResult {
  std::vector<ScheduledDelivery> delivered;  // sorted by delivery time, FIFO per link
  std::vector<PendingDelivery> dropped;
};

/// Stateful impairment for a live stream: keeps the seeded generator and the
/// per-link FIFO horizon across batches.
class LinkImpairment {
 public:
  explicit LinkImpairment(LinkProfile profile);

  ImpairmentResult apply(const std::vector<PendingDelivery>& batch);
  const LinkProfile& profile() const { return profile_; }

 private:
  double uniform01();

  LinkProfile profile_;
  std::mt19937_64 rng_;
  std::map<std::pair<std::string, std::string>, double> link_horizon_ms_;
};

/// One-shot impairment of a schedule with a fresh generator.
ImpairmentResult impair(const std::vector<PendingDelivery>& schedule, const LinkProfile& profile);

/// Number of messages missing from the per-sender sequence numbers observed
/// by one receiver: per sender, seqs skipped before the first one received
/// (sequences start at 1) and between consecutive ones. Losses after the last
/// received message are invisible until a later message arrives.
std::uint64_t count_sequence_gaps(const std::vector<Message>& received);

}  // namespace swarm_ops
