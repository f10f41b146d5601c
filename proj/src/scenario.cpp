#include "swarm_ops/scenario.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "swarm_ops/error.hpp"

namespace swarm_ops {

using nlohmann::json;

std::string_view to_string(PersonKind k) {
  return k == PersonKind::adult ? "adult" : "child";
}

int Scenario::adult_count() const {
  int n = 0;
  for (const auto& p : persons) n += p.kind == PersonKind::adult ? 1 : 0;
  return n;
}

int Scenario::child_count() const {
  return static_cast<int>(persons.size()) - adult_count();
}

double Scenario::orbit_radius() const {
  return std::max(building.width_m, building.depth_m) / 2.0 + patrol.orbit_radius_m;
}

double Scenario::angular_rate() const {
  return static_cast<double>(patrol.laps) * 2.0 * kPi / patrol.duration_s;
}

namespace {

void check(bool ok, const std::string& field, const std::string& what) {
  if (!ok) throw ScenarioError(field, what);
}

const json& require(const json& obj, const char* key, const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ScenarioError(path + key, "missing required field");
  return *it;
}

double number_at(const json& v, const std::string& field) {
  check(v.is_number(), field, "expected a number");
  return v.get<double>();
}

int integer_at(const json& v, const std::string& field) {
  check(v.is_number_integer(), field, "expected an integer");
  return v.get<int>();
}

std::string string_at(const json& v, const std::string& field) {
  check(v.is_string(), field, "expected a string");
  return v.get<std::string>();
}

Sector sector_at(const json& v, const std::string& field) {
  auto s = parse_sector(string_at(v, field));
  check(s.has_value(), field, "unknown sector '" + v.get<std::string>() + "'");
  return *s;
}

GeoCoordinate geo_at(const json& v, const std::string& field) {
  check(v.is_object(), field, "expected an object");
  GeoCoordinate c;
  c.latitude_deg = number_at(require(v, "latitude_deg", field + "."), field + ".latitude_deg");
  c.longitude_deg = number_at(require(v, "longitude_deg", field + "."), field + ".longitude_deg");
  if (auto it = v.find("altitude_m"); it != v.end()) {
    c.altitude_m = number_at(*it, field + ".altitude_m");
  }
  return c;
}

}  // namespace

void validate(const Scenario& s) {
  const Building& b = s.building;
  check(!s.id.empty(), "id", "must not be empty");
  check(is_valid(b.origin), "building.origin", "latitude/longitude out of range");
  check(b.origin.altitude_m >= 0.0, "building.origin.altitude_m", "must be >= 0");
  check(b.floors >= 1, "building.floors", "must be >= 1");
  check(b.width_m > 0.0, "building.width_m", "must be > 0");
  check(b.depth_m > 0.0, "building.depth_m", "must be > 0");
  check(b.floor_height_m > 0.0, "building.floor_height_m", "must be > 0");
  check(s.fire.floor >= 1 && s.fire.floor <= b.floors, "fire.floor", "floor out of range");
  std::set<std::string> ids;
  for (std::size_t i = 0; i < s.persons.size(); ++i) {
    const Person& p = s.persons[i];
    const std::string field = "persons[" + std::to_string(i) + "]";
    check(!p.id.empty(), field + ".id", "must not be empty");
    check(ids.insert(p.id).second, field + ".id", "duplicate person id '" + p.id + "'");
    check(p.floor >= 1 && p.floor <= b.floors, field + ".floor", "floor out of range");
  }
  check(s.patrol.laps >= 1, "patrol.laps", "must be >= 1");
  check(s.patrol.duration_s > 0.0, "patrol.duration_s", "must be > 0");
  check(s.patrol.orbit_radius_m > 0.0, "patrol.orbit_radius_m", "must be > 0");
  check(s.mission_limit_s >= s.patrol.duration_s, "mission_limit_s",
        "must be >= patrol.duration_s");
  check(!s.expects_casualty_report || !s.persons.empty(), "persons",
        "at least one person required when a casualty report is expected");
}

Scenario scenario_from_json(const json& doc) {
  check(doc.is_object(), "", "scenario document must be a JSON object");
  Scenario s;
  s.id = string_at(require(doc, "id", ""), "id");

  const json& b = require(doc, "building", "");
  check(b.is_object(), "building", "expected an object");
  if (auto it = b.find("origin"); it != b.end()) s.building.origin = geo_at(*it, "building.origin");
  if (auto it = b.find("width_m"); it != b.end()) s.building.width_m = number_at(*it, "building.width_m");
  if (auto it = b.find("depth_m"); it != b.end()) s.building.depth_m = number_at(*it, "building.depth_m");
  s.building.floors = integer_at(require(b, "floors", "building."), "building.floors");
  if (auto it = b.find("floor_height_m"); it != b.end()) {
    s.building.floor_height_m = number_at(*it, "building.floor_height_m");
  }
  if (auto it = b.find("orientation"); it != b.end()) {
    check(string_at(*it, "building.orientation") == "cardinal", "building.orientation",
          "only axis-aligned (\"cardinal\") footprints are supported");
  }

  const json& f = require(doc, "fire", "");
  check(f.is_object(), "fire", "expected an object");
  s.fire.floor = integer_at(require(f, "floor", "fire."), "fire.floor");
  s.fire.sector = sector_at(require(f, "sector", "fire."), "fire.sector");

  const json& persons = require(doc, "persons", "");
  check(persons.is_array(), "persons", "expected an array");
  for (std::size_t i = 0; i < persons.size(); ++i) {
    const std::string field = "persons[" + std::to_string(i) + "]";
    const json& p = persons[i];
    check(p.is_object(), field, "expected an object");
    Person person;
    person.id = string_at(require(p, "id", field + "."), field + ".id");
    const std::string kind = string_at(require(p, "kind", field + "."), field + ".kind");
    check(kind == "adult" || kind == "child", field + ".kind", "must be \"adult\" or \"child\"");
    person.kind = kind == "adult" ? PersonKind::adult : PersonKind::child;
    person.floor = integer_at(require(p, "floor", field + "."), field + ".floor");
    person.sector = sector_at(require(p, "sector", field + "."), field + ".sector");
    s.persons.push_back(std::move(person));
  }

  const json& patrol = require(doc, "patrol", "");
  check(patrol.is_object(), "patrol", "expected an object");
  s.patrol.laps = integer_at(require(patrol, "laps", "patrol."), "patrol.laps");
  s.patrol.duration_s = number_at(require(patrol, "duration_s", "patrol."), "patrol.duration_s");
  if (auto it = patrol.find("orbit_radius_m"); it != patrol.end()) {
    s.patrol.orbit_radius_m = number_at(*it, "patrol.orbit_radius_m");
  }

  s.mission_limit_s = number_at(require(doc, "mission_limit_s", ""), "mission_limit_s");
  const json& seed = require(doc, "seed", "");
  check(seed.is_number_unsigned() || (seed.is_number_integer() && seed.get<std::int64_t>() >= 0),
        "seed", "expected an unsigned integer");
  s.seed = seed.get<std::uint64_t>();
  if (auto it = doc.find("casualty_report"); it != doc.end()) {
    check(it->is_boolean(), "casualty_report", "expected a boolean");
    s.expects_casualty_report = it->get<bool>();
  }

  validate(s);
  return s;
}

json to_json(const Scenario& s) {
  json persons = json::array();
  for (const auto& p : s.persons) {
    persons.push_back({{"id", p.id},
                       {"kind", to_string(p.kind)},
                       {"floor", p.floor},
                       {"sector", to_string(p.sector)}});
  }
  const Building& b = s.building;
  return json{
      {"id", s.id},
      {"building",
       {{"origin",
         {{"latitude_deg", b.origin.latitude_deg},
          {"longitude_deg", b.origin.longitude_deg},
          {"altitude_m", b.origin.altitude_m}}},
        {"width_m", b.width_m},
        {"depth_m", b.depth_m},
        {"floors", b.floors},
        {"floor_height_m", b.floor_height_m},
        {"orientation", "cardinal"}}},
      {"fire", {{"floor", s.fire.floor}, {"sector", to_string(s.fire.sector)}}},
      {"persons", persons},
      {"patrol",
       {{"laps", s.patrol.laps},
        {"duration_s", s.patrol.duration_s},
        {"orbit_radius_m", s.patrol.orbit_radius_m}}},
      {"mission_limit_s", s.mission_limit_s},
      {"seed", s.seed},
      {"casualty_report", s.expects_casualty_report},
  };
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ScenarioError("", "cannot open scenario file '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  json doc;
  try {
    doc = json::parse(buf.str());
  } catch (const json::parse_error& e) {
    throw ScenarioError("", "'" + path.string() + "' is not valid JSON (byte " +
                                std::to_string(e.byte) + ")");
  }
  return scenario_from_json(doc);
}

Sector sector_of(const LocalPosition& p, const Building& b) {
  constexpr double kSlack = 1e-9;
  const double u = p.east_m / b.width_m;   // [-0.5, 0.5] on the footprint
  const double v = p.north_m / b.depth_m;
  if (std::abs(u) > 0.5 + kSlack || std::abs(v) > 0.5 + kSlack) {
    std::ostringstream msg;
    msg << "point (" << p.east_m << ", " << p.north_m << ") is outside the building footprint";
    throw ScenarioError("", msg.str());
  }
  if (std::abs(u) <= 1.0 / 6.0 && std::abs(v) <= 1.0 / 6.0) return Sector::CENTER;
  double bearing = rad_to_deg(std::atan2(u, v));
  if (bearing < 0.0) bearing += 360.0;
  // Octant boundaries belong to the sector clockwise of them.
  const int octant = static_cast<int>(std::floor((bearing + 22.5) / 45.0)) % 8;
  return kCompassSectors[octant];
}

}  // namespace swarm_ops
