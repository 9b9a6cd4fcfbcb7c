#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace vbrisk::geo {

inline constexpr double kEarthRadiusM = 6'371'000.0;

/// WGS84 coordinate in degrees.
struct GeoPoint {
  double lat = 0.0;
  double lon = 0.0;

  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

/// Finite, lat in [-90, 90], lon in [-180, 180).
bool is_valid(const GeoPoint& p) noexcept;

/// Great-circle distance on a sphere of radius kEarthRadiusM.
double haversine_m(const GeoPoint& a, const GeoPoint& b) noexcept;

/// Point reached from `origin` after travelling `distance_m` along initial `bearing_deg`.
GeoPoint destination(const GeoPoint& origin, double bearing_deg, double distance_m) noexcept;

/// Arithmetic mean of coordinates. Empty input returns (0, 0).
GeoPoint mean_point(std::span<const GeoPoint> points) noexcept;

struct BoundingBox {
  double min_lat = 0.0;
  double max_lat = 0.0;
  double min_lon = 0.0;
  double max_lon = 0.0;

  bool contains(const GeoPoint& p) const noexcept {
    return p.lat >= min_lat && p.lat <= max_lat && p.lon >= min_lon && p.lon <= max_lon;
  }
};

using Ring = std::vector<GeoPoint>;

/// Outer ring first, holes after. Rings close implicitly.
struct Polygon {
  std::vector<Ring> rings;

  /// Throws Errc::malformed_geometry for missing rings, rings with fewer than
  /// three vertices, or invalid coordinates.
  void validate() const;

  BoundingBox bounds() const;
};

/// Even-odd rule over all rings (so holes are excluded). Points on any edge
/// or vertex count as inside. Throws Errc::malformed_geometry on a degenerate ring.
bool point_in_polygon(const GeoPoint& p, const Polygon& poly);

/// True when two non-adjacent edges of the same ring intersect.
bool has_self_intersection(const Polygon& poly);

/// Named area used for neighborhood aggregation.
struct Region {
  std::string id;
  std::string name;
  Polygon geometry;
};

using Neighborhood = Region;

/// Metapopulation vertex: a region with human population and vector capacity.
struct Patch {
  std::string id;
  std::string name;
  Polygon geometry;
  double human_population = 0.0;  // N_h, persons
  double vector_capacity = 0.0;   // N_v, vectors

  /// human_population > 0, vector_capacity >= 0, geometry valid.
  void validate() const;
};

/// Immutable point-location index over non-overlapping regions with a
/// bounding-box prefilter. When regions overlap the lexicographically smallest
/// id wins and a warning is logged.
class RegionIndex {
 public:
  RegionIndex() = default;
  explicit RegionIndex(std::span<const Region> regions);
  explicit RegionIndex(std::span<const Patch> patches);

  /// Position (in construction order) of the containing region.
  std::optional<std::size_t> locate_index(const GeoPoint& p) const;

  std::optional<std::string> locate(const GeoPoint& p) const;

  /// Every containing region, in construction order.
  std::vector<std::size_t> locate_all(const GeoPoint& p) const;

  std::size_t size() const noexcept { return entries_.size(); }
  const std::string& id(std::size_t index) const { return entries_[index].id; }

 private:
  struct Entry {
    std::string id;
    Polygon polygon;
    BoundingBox box;
  };
  void add(const std::string& id, const Polygon& polygon);
  void sort_ids();

  std::vector<Entry> entries_;
  std::vector<std::size_t> by_id_;  // entry positions sorted by id
};

/// Convenience wrappers building a temporary index.
std::optional<std::string> locate(const GeoPoint& p, std::span<const Region> regions);
std::optional<std::string> locate(const GeoPoint& p, std::span<const Patch> patches);

}  // namespace vbrisk::geo
