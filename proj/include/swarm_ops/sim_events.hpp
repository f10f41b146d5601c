#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "swarm_ops/swarm_sim.hpp"

namespace swarm_ops {

nlohmann::json to_json(const GeoCoordinate& c);
GeoCoordinate geo_from_json(const nlohmann::json& j);

nlohmann::json to_json(const Sighting& s);
Sighting sighting_from_json(const nlohmann::json& j);

nlohmann::json to_json(const CameraFrame& f);
CameraFrame camera_frame_from_json(const nlohmann::json& j);

nlohmann::json to_json(const TelemetryEvent& t);
TelemetryEvent telemetry_from_json(const nlohmann::json& j);

/// Payload of one replay-log record (the body without tick/type).
nlohmann::json event_payload(const SimEvent& e);

/// `{"payload": ..., "tick": N, "type": "..."}` with sorted keys.
nlohmann::json to_json(const SimEvent& e);
SimEvent sim_event_from_json(const nlohmann::json& j);

/// One JSON-lines record terminated by '\n'.
std::string encode_event_line(const SimEvent& e);

/// Parses a replay log. Throws Error naming the 1-based line number of the
/// first corrupt record.
std::vector<SimEvent> read_replay_log(std::istream& in);
std::vector<SimEvent> read_replay_log(const std::filesystem::path& path);

}  // namespace swarm_ops
