#include "swarm_ops/geo.hpp"

#include <cmath>

namespace swarm_ops {

namespace {
constexpr double kMetersPerDegree = kEarthRadiusM * kPi / 180.0;
}

bool is_valid(const GeoCoordinate& c) {
  return std::isfinite(c.latitude_deg) && std::isfinite(c.longitude_deg) &&
         std::isfinite(c.altitude_m) && c.latitude_deg >= -90.0 &&
         c.latitude_deg <= 90.0 && c.longitude_deg >= -180.0 &&
         c.longitude_deg <= 180.0;
}

double horizontal_distance(const LocalPosition& a, const LocalPosition& b) {
  return std::hypot(a.east_m - b.east_m, a.north_m - b.north_m);
}

double distance(const LocalPosition& a, const LocalPosition& b) {
  const double dz = a.up_m - b.up_m;
  const double h = horizontal_distance(a, b);
  return std::sqrt(h * h + dz * dz);
}

LocalPosition geo_to_local(const GeoCoordinate& origin, const GeoCoordinate& p) {
  const double cos_lat0 = std::cos(deg_to_rad(origin.latitude_deg));
  return LocalPosition{
      .east_m = (p.longitude_deg - origin.longitude_deg) * cos_lat0 * kMetersPerDegree,
      .north_m = (p.latitude_deg - origin.latitude_deg) * kMetersPerDegree,
      .up_m = p.altitude_m - origin.altitude_m,
  };
}

GeoCoordinate local_to_geo(const GeoCoordinate& origin, const LocalPosition& p) {
  const double cos_lat0 = std::cos(deg_to_rad(origin.latitude_deg));
  return GeoCoordinate{
      .latitude_deg = origin.latitude_deg + p.north_m / kMetersPerDegree,
      .longitude_deg = origin.longitude_deg + p.east_m / (cos_lat0 * kMetersPerDegree),
      .altitude_m = origin.altitude_m + p.up_m,
  };
}

std::string_view to_string(Sector s) {
  switch (s) {
    case Sector::N: return "N";
    case Sector::NE: return "NE";
    case Sector::E: return "E";
    case Sector::SE: return "SE";
    case Sector::S: return "S";
    case Sector::SW: return "SW";
    case Sector::W: return "W";
    case Sector::NW: return "NW";
    case Sector::CENTER: return "CENTER";
  }
  return "?";
}

std::optional<Sector> parse_sector(std::string_view text) {
  for (Sector s : kAllSectors) {
    if (to_string(s) == text) return s;
  }
  return std::nullopt;
}

Sector opposite(Sector s) {
  if (s == Sector::CENTER) return s;
  return kCompassSectors[(static_cast<int>(s) + 4) % 8];
}

bool is_same_or_adjacent(Sector a, Sector b) {
  if (a == Sector::CENTER || b == Sector::CENTER) return a == b;
  const int d = std::abs(static_cast<int>(a) - static_cast<int>(b));
  return d <= 1 || d == 7;
}

std::string_view to_string(Facade f) {
  switch (f) {
    case Facade::N: return "N";
    case Facade::E: return "E";
    case Facade::S: return "S";
    case Facade::W: return "W";
  }
  return "?";
}

std::optional<Facade> parse_facade(std::string_view text) {
  for (Facade f : kAllFacades) {
    if (to_string(f) == text) return f;
  }
  return std::nullopt;
}

bool sector_on_facade(Sector s, Facade f) {
  switch (f) {
    case Facade::N: return s == Sector::NW || s == Sector::N || s == Sector::NE;
    case Facade::E: return s == Sector::NE || s == Sector::E || s == Sector::SE;
    case Facade::S: return s == Sector::SE || s == Sector::S || s == Sector::SW;
    case Facade::W: return s == Sector::SW || s == Sector::W || s == Sector::NW;
  }
  return false;
}

Facade facade_for_azimuth(double azimuth_rad) {
  double deg = std::fmod(rad_to_deg(azimuth_rad), 360.0);
  if (deg < 0.0) deg += 360.0;
  const int quadrant = static_cast<int>(std::floor((deg + 45.0) / 90.0)) % 4;
  return kAllFacades[quadrant];
}

}  // namespace swarm_ops
