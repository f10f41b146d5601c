#include "swarm_ops/hub.hpp"

#include <algorithm>
#include <numeric>

#include "swarm_ops/error.hpp"

namespace swarm_ops {

std::string_view to_string(Role r) {
  switch (r) {
    case Role::planner: return "planner";
    case Role::console: return "console";
    case Role::sim: return "sim";
  }
  return "?";
}

std::optional<Role> parse_role(std::string_view text) {
  for (Role r : {Role::planner, Role::console, Role::sim}) {
    if (to_string(r) == text) return r;
  }
  return std::nullopt;
}

void HubState::register_endpoint(const std::string& id, Role role) {
  if (id.empty()) throw RoutingError("endpoint id must not be empty");
  if (endpoints_.contains(id)) throw RoutingError("endpoint '" + id + "' already registered");
  if (role == Role::planner && planner_) throw RoutingError("a planner endpoint is already registered");
  if (role == Role::sim && sim_) throw RoutingError("a sim bridge endpoint is already registered");
  endpoints_.emplace(id, role);
  if (role == Role::planner) planner_ = id;
  if (role == Role::sim) sim_ = id;
}

void HubState::unregister_endpoint(const std::string& id) {
  auto it = endpoints_.find(id);
  if (it == endpoints_.end()) return;
  if (planner_ == id) planner_.reset();
  if (sim_ == id) sim_.reset();
  endpoints_.erase(it);
}

std::optional<Role> HubState::role_of(const std::string& id) const {
  auto it = endpoints_.find(id);
  if (it == endpoints_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> HubState::consoles() const {
  std::vector<std::string> out;
  for (const auto& [id, role] : endpoints_) {
    if (role == Role::console) out.push_back(id);
  }
  return out;
}

namespace {

enum class Target { consoles, sim, planner, none, illegal };

Target target_for(Role sender, MsgType t) {
  switch (sender) {
    case Role::sim:
      switch (t) {
        case MsgType::TelemetryUpdate:
        case MsgType::CameraFrame:
        case MsgType::Notification:
        case MsgType::ClockSync:
          return Target::consoles;
        case MsgType::Error: return Target::planner;
        case MsgType::Hello: return Target::none;
        default: return Target::illegal;
      }
    case Role::console:
      switch (t) {
        case MsgType::MissionCommand:
        case MsgType::TargetMark:
        case MsgType::DroneSelect:
          return Target::sim;
        case MsgType::ReportSubmission:
        case MsgType::Error:
          return Target::planner;
        case MsgType::Hello: return Target::none;
        default: return Target::illegal;
      }
    case Role::planner:
      switch (t) {
        case MsgType::MissionCommand: return Target::sim;
        case MsgType::Hello: return Target::none;
        case MsgType::ReportSubmission: return Target::illegal;
        default: return Target::consoles;
      }
  }
  return Target::illegal;
}

}  // namespace

std::vector<Delivery> route(const HubState& hub, const Message& m, const std::string& from) {
  auto role = hub.role_of(from);
  if (!role) throw RoutingError("sender '" + from + "' is not registered");
  if (!hub.planner()) throw RoutingError("no planner endpoint registered");
  const std::string& planner = *hub.planner();

  std::vector<Delivery> out;
  auto hop = [&](const std::string& to) {
    Delivery d{to, {from}, m};
    if (from != planner) d.path.push_back(planner);
    if (to != planner) d.path.push_back(to);
    out.push_back(std::move(d));
  };

  switch (target_for(*role, m.type)) {
    case Target::consoles:
      for (const auto& c : hub.consoles()) hop(c);
      break;
    case Target::sim:
      if (hub.sim()) hop(*hub.sim());
      break;
    case Target::planner:
      hop(planner);
      break;
    case Target::none:
      break;
    case Target::illegal:
      throw RoutingError(std::string(to_string(m.type)) + " may not originate from a " +
                         std::string(to_string(*role)) + " endpoint ('" + from + "')");
  }
  return out;
}

bool respects_hub_topology(const HubState& hub, const Delivery& d) {
  if (d.path.size() < 2 || !hub.planner()) return false;
  auto from_role = hub.role_of(d.from());
  auto to_role = hub.role_of(d.to);
  const bool crosses = from_role && to_role &&
                       ((*from_role == Role::sim && *to_role == Role::console) ||
                        (*from_role == Role::console && *to_role == Role::sim));
  if (!crosses) return true;
  return d.path.size() == 3 && d.path[1] == *hub.planner();
}

void LinkProfile::validate() const {
  if (!(loss_rate >= 0.0 && loss_rate < 1.0)) {
    throw Error("loss rate must be in [0, 1), got " + std::to_string(loss_rate));
  }
  if (!(latency_ms >= 0.0) || !(jitter_ms >= 0.0)) {
    throw Error("latency and jitter must be non-negative");
  }
}

LinkImpairment::LinkImpairment(LinkProfile profile) : profile_(profile), rng_(profile.seed) {
  profile_.validate();
}

double LinkImpairment::uniform01() {
  // 53 random mantissa bits; identical on every standard library.
  return static_cast<double>(rng_() >> 11) * 0x1.0p-53;
}

ImpairmentResult LinkImpairment::apply(const std::vector<PendingDelivery>& batch) {
  ImpairmentResult result;
  std::vector<std::size_t> order(batch.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return batch[a].send_time_ms < batch[b].send_time_ms;
  });

  std::vector<std::pair<double, std::size_t>> times;
  for (std::size_t idx : order) {
    const PendingDelivery& p = batch[idx];
    // Both draws happen for every delivery so the stream stays aligned.
    const double loss_draw = uniform01();
    const double jitter_draw = uniform01();
    if (loss_draw < profile_.loss_rate) {
      result.dropped.push_back(p);
      continue;
    }
    double t = p.send_time_ms + profile_.latency_ms + jitter_draw * profile_.jitter_ms;
    auto& horizon = link_horizon_ms_[{p.delivery.last_hop(), p.delivery.to}];
    t = std::max(t, horizon);
    horizon = t;
    times.emplace_back(t, idx);
  }
  std::stable_sort(times.begin(), times.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  for (const auto& [t, idx] : times) result.delivered.push_back({t, batch[idx].delivery});
  return result;
}

ImpairmentResult impair(const std::vector<PendingDelivery>& schedule, const LinkProfile& profile) {
  LinkImpairment link(profile);
  return link.apply(schedule);
}

std::uint64_t count_sequence_gaps(const std::vector<Message>& received) {
  std::map<std::string, std::vector<std::uint64_t>> by_sender;
  for (const auto& m : received) by_sender[m.sender].push_back(m.seq);
  std::uint64_t gaps = 0;
  for (auto& [sender, seqs] : by_sender) {
    std::sort(seqs.begin(), seqs.end());
    // Sequences start at 1.
    if (!seqs.empty() && seqs.front() > 1) gaps += seqs.front() - 1;
    for (std::size_t i = 1; i < seqs.size(); ++i) {
      if (seqs[i] > seqs[i - 1] + 1) gaps += seqs[i] - seqs[i - 1] - 1;
    }
  }
  return gaps;
}

}  // namespace swarm_ops
