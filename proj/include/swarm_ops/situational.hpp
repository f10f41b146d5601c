#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "swarm_ops/geo.hpp"
#include "swarm_ops/scenario.hpp"
#include "swarm_ops/swarm_sim.hpp"

namespace swarm_ops {

struct BearingDistance {
  double bearing_deg = 0.0;  // [0, 360), forward azimuth
  double distance_m = 0.0;   // great-circle, haversine
  bool coincident = false;
};

BearingDistance bearing_distance(const GeoCoordinate& observer, const GeoCoordinate& target);

struct TrackedEntity {
  std::string id;
  GeoCoordinate position;
  std::string kind = "drone";  // drone | waypoint | target | fire
};

struct CompassEntry {
  std::string id;
  double absolute_bearing_deg = 0.0;
  double relative_bearing_deg = 0.0;
  double distance_m = 0.0;
};

/// Entries sorted by distance (then id, so input order never matters).
std::vector<CompassEntry> compass_view(const GeoCoordinate& observer, double heading_deg,
                                       const std::vector<TrackedEntity>& entities);

struct Viewport {
  int width_px = 400;
  int height_px = 400;
};

struct MiniMapEntry {
  std::string id;
  double x_px = 0.0;
  double y_px = 0.0;
  std::string glyph;  // drone | waypoint | target | fire | off-map
};

struct CardinalLabel {
  char label = 'N';
  double x_px = 0.0;
  double y_px = 0.0;
};

struct MiniMapView {
  Viewport viewport;
  double meters_per_px = 1.0;
  GeoCoordinate center;
  bool north_up = true;
  std::vector<MiniMapEntry> entries;
  std::vector<CardinalLabel> cardinals;
};

/// North-up projection: x grows east, y grows south. Entities beyond the
/// viewport are pinned to its border with the "off-map" glyph.
MiniMapView minimap_project(const GeoCoordinate& center, double meters_per_px,
                            const Viewport& viewport, const std::vector<TrackedEntity>& entities);

struct TrajectoryOverlay {
  int drone_id = 0;
  double horizon_s = 30.0;
  std::vector<GeoCoordinate> polyline;  // 1 s samples, first = current pose
};

TrajectoryOverlay predicted_trajectory(const DroneState& drone, const Scenario& scenario,
                                       double horizon_s = 30.0, const SimConfig& cfg = {});

nlohmann::json to_json(const CompassEntry& e);
nlohmann::json to_json(const MiniMapView& v);
nlohmann::json to_json(const TrajectoryOverlay& t);

}  // namespace swarm_ops
