#include "swarm_ops/situational.hpp"

#include <algorithm>
#include <cmath>

#include "swarm_ops/error.hpp"
#include "swarm_ops/sim_events.hpp"

namespace swarm_ops {

using nlohmann::json;

namespace {

double normalize_deg(double deg) {
  double a = std::fmod(deg, 360.0);
  if (a < 0.0) a += 360.0;
  if (a >= 360.0) a -= 360.0;
  return a;
}

}  // namespace

BearingDistance bearing_distance(const GeoCoordinate& observer, const GeoCoordinate& target) {
  if (observer.latitude_deg == target.latitude_deg &&
      observer.longitude_deg == target.longitude_deg) {
    return {0.0, 0.0, true};
  }
  const double lat1 = deg_to_rad(observer.latitude_deg);
  const double lat2 = deg_to_rad(target.latitude_deg);
  const double dlat = lat2 - lat1;
  const double dlon = deg_to_rad(target.longitude_deg - observer.longitude_deg);

  const double a = std::sin(dlat / 2) * std::sin(dlat / 2) +
                   std::cos(lat1) * std::cos(lat2) * std::sin(dlon / 2) * std::sin(dlon / 2);
  const double dist = 2.0 * kEarthRadiusM * std::atan2(std::sqrt(a), std::sqrt(1.0 - a));

  const double y = std::sin(dlon) * std::cos(lat2);
  const double x = std::cos(lat1) * std::sin(lat2) - std::sin(lat1) * std::cos(lat2) * std::cos(dlon);
  return {normalize_deg(rad_to_deg(std::atan2(y, x))), dist, false};
}

std::vector<CompassEntry> compass_view(const GeoCoordinate& observer, double heading_deg,
                                       const std::vector<TrackedEntity>& entities) {
  std::vector<CompassEntry> out;
  out.reserve(entities.size());
  for (const auto& e : entities) {
    const auto bd = bearing_distance(observer, e.position);
    out.push_back({e.id, bd.bearing_deg, normalize_deg(bd.bearing_deg - heading_deg), bd.distance_m});
  }
  std::sort(out.begin(), out.end(), [](const CompassEntry& a, const CompassEntry& b) {
    if (a.distance_m != b.distance_m) return a.distance_m < b.distance_m;
    return a.id < b.id;
  });
  return out;
}

MiniMapView minimap_project(const GeoCoordinate& center, double meters_per_px,
                            const Viewport& viewport, const std::vector<TrackedEntity>& entities) {
  if (!(meters_per_px > 0.0)) throw Error("minimap scale must be positive");
  MiniMapView view;
  view.viewport = viewport;
  view.meters_per_px = meters_per_px;
  view.center = center;
  const double w = viewport.width_px;
  const double h = viewport.height_px;
  for (const auto& e : entities) {
    const LocalPosition p = geo_to_local(center, e.position);
    double x = w / 2.0 + p.east_m / meters_per_px;
    double y = h / 2.0 - p.north_m / meters_per_px;
    std::string glyph = e.kind;
    if (x < 0.0 || x > w || y < 0.0 || y > h) {
      x = std::clamp(x, 0.0, w);
      y = std::clamp(y, 0.0, h);
      glyph = "off-map";
    }
    view.entries.push_back({e.id, x, y, glyph});
  }
  view.cardinals = {{'N', w / 2.0, 0.0}, {'E', w, h / 2.0}, {'S', w / 2.0, h}, {'W', 0.0, h / 2.0}};
  return view;
}

TrajectoryOverlay predicted_trajectory(const DroneState& drone, const Scenario& scenario,
                                       double horizon_s, const SimConfig& cfg) {
  TrajectoryOverlay overlay;
  overlay.drone_id = drone.id;
  overlay.horizon_s = horizon_s;
  if (drone.mode == DroneMode::idle) return overlay;

  const GeoCoordinate& origin = scenario.building.origin;
  const int samples = static_cast<int>(std::floor(horizon_s + 1e-9));
  overlay.polyline.push_back(drone.pose.position);

  if (drone.mode == DroneMode::patrol) {
    const LocalPosition here = geo_to_local(origin, drone.pose.position);
    const double r = scenario.orbit_radius();
    const double omega = scenario.angular_rate();
    for (int k = 1; k <= samples; ++k) {
      const double az = drone.pose.azimuth_rad + omega * k;
      overlay.polyline.push_back(
          local_to_geo(origin, {r * std::sin(az), r * std::cos(az), here.up_m}));
    }
    return overlay;
  }

  // Waypoint mode: straight legs at cruise speed, holding at the last one.
  LocalPosition pos = geo_to_local(origin, drone.pose.position);
  std::vector<LocalPosition> legs;
  for (const auto& wp : drone.waypoint_queue) legs.push_back(geo_to_local(origin, wp));
  std::size_t next = 0;
  for (int k = 1; k <= samples; ++k) {
    double budget = cfg.cruise_speed_mps;  // metres flown in one second
    while (budget > 0.0 && next < legs.size()) {
      const double d = distance(pos, legs[next]);
      if (d <= budget) {
        pos = legs[next++];
        budget -= d;
      } else {
        const double f = budget / d;
        pos.east_m += (legs[next].east_m - pos.east_m) * f;
        pos.north_m += (legs[next].north_m - pos.north_m) * f;
        pos.up_m += (legs[next].up_m - pos.up_m) * f;
        budget = 0.0;
      }
    }
    overlay.polyline.push_back(local_to_geo(origin, pos));
  }
  return overlay;
}

json to_json(const CompassEntry& e) {
  return {{"id", e.id},
          {"absolute_bearing_deg", e.absolute_bearing_deg},
          {"relative_bearing_deg", e.relative_bearing_deg},
          {"distance_m", e.distance_m}};
}

json to_json(const MiniMapView& v) {
  json entries = json::array();
  for (const auto& e : v.entries) {
    entries.push_back({{"id", e.id}, {"x_px", e.x_px}, {"y_px", e.y_px}, {"glyph", e.glyph}});
  }
  json cardinals = json::array();
  for (const auto& c : v.cardinals) {
    cardinals.push_back({{"label", std::string(1, c.label)}, {"x_px", c.x_px}, {"y_px", c.y_px}});
  }
  return {{"width_px", v.viewport.width_px},
          {"height_px", v.viewport.height_px},
          {"meters_per_px", v.meters_per_px},
          {"center", to_json(v.center)},
          {"north_up", v.north_up},
          {"entries", entries},
          {"cardinals", cardinals}};
}

json to_json(const TrajectoryOverlay& t) {
  json pts = json::array();
  for (const auto& p : t.polyline) pts.push_back(to_json(p));
  return {{"drone_id", t.drone_id}, {"horizon_s", t.horizon_s}, {"polyline", pts}};
}

}  // namespace swarm_ops
