#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "swarm_ops/geo.hpp"

namespace swarm_ops {

/// Axis-aligned high-rise footprint. `width_m` runs east-west, `depth_m`
/// north-south; `origin` is the footprint centroid at ground level.
struct Building {
  GeoCoordinate origin{45.5017, -73.5617, 0.0};
  double width_m = 30.0;
  double depth_m = 20.0;
  int floors = 4;
  double floor_height_m = 3.0;

  double half_width() const { return width_m / 2.0; }
  double half_depth() const { return depth_m / 2.0; }
};

enum class PersonKind { adult, child };

std::string_view to_string(PersonKind k);

struct Person {
  std::string id;
  PersonKind kind = PersonKind::adult;
  int floor = 1;
  Sector sector = Sector::N;
};

struct FireSource {
  int floor = 1;
  Sector sector = Sector::N;
};

struct PatrolParams {
  int laps = 2;
  double duration_s = 270.0;
  // Stand-off from the widest facade; see orbit_radius().
  double orbit_radius_m = 10.0;
};

struct Scenario {
  std::string id;
  Building building;
  FireSource fire;
  std::vector<Person> persons;
  PatrolParams patrol;
  double mission_limit_s = 360.0;
  std::uint64_t seed = 0;
  bool expects_casualty_report = true;

  int adult_count() const;
  int child_count() const;

  /// Radius of the patrol circle around the centroid.
  double orbit_radius() const;
  /// Angular rate of the synchronised orbit, rad/s.
  double angular_rate() const;
};

/// Throws ScenarioError naming the first violated invariant.
void validate(const Scenario& s);

Scenario scenario_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const Scenario& s);

/// Reads, parses and validates a scenario document.
Scenario load_scenario(const std::filesystem::path& path);

/// Location of `p` (relative to the building centroid) on the floor plan.
/// Throws ScenarioError when the point is outside the footprint.
Sector sector_of(const LocalPosition& p, const Building& b);

}  // namespace swarm_ops
