#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace swarm_ops {

inline constexpr double kEarthRadiusM = 6'371'000.0;
inline constexpr double kPi = 3.14159265358979323846;

constexpr double deg_to_rad(double deg) { return deg * kPi / 180.0; }
constexpr double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

/// WGS-84-ish geodetic point. Altitude is relative to the scenario ground
/// plane, not the ellipsoid.
struct GeoCoordinate {
  double latitude_deg = 0.0;
  double longitude_deg = 0.0;
  double altitude_m = 0.0;

  bool operator==(const GeoCoordinate&) const = default;
};

/// East-north-up offsets in a tangent plane anchored at a scenario origin.
struct LocalPosition {
  double east_m = 0.0;
  double north_m = 0.0;
  double up_m = 0.0;

  bool operator==(const LocalPosition&) const = default;
};

bool is_valid(const GeoCoordinate& c);

double horizontal_distance(const LocalPosition& a, const LocalPosition& b);
double distance(const LocalPosition& a, const LocalPosition& b);

// Equirectangular tangent-plane projection. Accurate to well below a
// centimetre inside the 2 km scenario area.
LocalPosition geo_to_local(const GeoCoordinate& origin, const GeoCoordinate& p);
GeoCoordinate local_to_geo(const GeoCoordinate& origin, const LocalPosition& p);

/// Coarse horizontal location on a floor: eight compass octants plus the
/// building core. Compass values are declared in clockwise order so that
/// the underlying index is the octant number.
enum class Sector : std::uint8_t { N, NE, E, SE, S, SW, W, NW, CENTER };

inline constexpr std::array<Sector, 8> kCompassSectors = {
    Sector::N, Sector::NE, Sector::E, Sector::SE,
    Sector::S, Sector::SW, Sector::W, Sector::NW};

inline constexpr std::array<Sector, 9> kAllSectors = {
    Sector::N, Sector::NE, Sector::E, Sector::SE, Sector::S,
    Sector::SW, Sector::W, Sector::NW, Sector::CENTER};

std::string_view to_string(Sector s);
std::optional<Sector> parse_sector(std::string_view text);

/// The sector diametrically opposite (N <-> S, NE <-> SW, CENTER <-> CENTER).
Sector opposite(Sector s);

/// Same octant or one step around the compass. CENTER is only adjacent to
/// itself.
bool is_same_or_adjacent(Sector a, Sector b);

enum class Facade : std::uint8_t { N, E, S, W };

inline constexpr std::array<Facade, 4> kAllFacades = {Facade::N, Facade::E,
                                                      Facade::S, Facade::W};

std::string_view to_string(Facade f);
std::optional<Facade> parse_facade(std::string_view text);

/// Whether a sector lies along a facade. Diagonal sectors touch two facades;
/// CENTER touches none.
bool sector_on_facade(Sector s, Facade f);

/// Facade whose 90 degree arc contains the azimuth (clockwise from north).
/// Arcs are centred on the facade normal; boundaries go clockwise.
Facade facade_for_azimuth(double azimuth_rad);

}  // namespace swarm_ops
