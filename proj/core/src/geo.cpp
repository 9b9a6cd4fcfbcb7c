#include "vbrisk/geo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <spdlog/spdlog.h>

#include "vbrisk/error.hpp"

namespace vbrisk::geo {
namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kBoundaryEps = 1e-12;  // degrees

bool on_segment(const GeoPoint& p, const GeoPoint& a, const GeoPoint& b) {
  const double dx = b.lon - a.lon;
  const double dy = b.lat - a.lat;
  const double len = std::hypot(dx, dy);
  const double cross = dx * (p.lat - a.lat) - dy * (p.lon - a.lon);
  if (len == 0.0) return std::hypot(p.lon - a.lon, p.lat - a.lat) <= kBoundaryEps;
  if (std::abs(cross) > kBoundaryEps * len) return false;
  return p.lon >= std::min(a.lon, b.lon) - kBoundaryEps &&
         p.lon <= std::max(a.lon, b.lon) + kBoundaryEps &&
         p.lat >= std::min(a.lat, b.lat) - kBoundaryEps &&
         p.lat <= std::max(a.lat, b.lat) + kBoundaryEps;
}

double orient(const GeoPoint& a, const GeoPoint& b, const GeoPoint& c) {
  return (b.lon - a.lon) * (c.lat - a.lat) - (b.lat - a.lat) * (c.lon - a.lon);
}

bool segments_intersect(const GeoPoint& a, const GeoPoint& b, const GeoPoint& c,
                        const GeoPoint& d) {
  const double o1 = orient(a, b, c);
  const double o2 = orient(a, b, d);
  const double o3 = orient(c, d, a);
  const double o4 = orient(c, d, b);
  if (((o1 > 0 && o2 < 0) || (o1 < 0 && o2 > 0)) && ((o3 > 0 && o4 < 0) || (o3 < 0 && o4 > 0))) {
    return true;
  }
  return (o1 == 0 && on_segment(c, a, b)) || (o2 == 0 && on_segment(d, a, b)) ||
         (o3 == 0 && on_segment(a, c, d)) || (o4 == 0 && on_segment(b, c, d));
}

}  // namespace

bool is_valid(const GeoPoint& p) noexcept {
  return std::isfinite(p.lat) && std::isfinite(p.lon) && p.lat >= -90.0 && p.lat <= 90.0 &&
         p.lon >= -180.0 && p.lon < 180.0;
}

double haversine_m(const GeoPoint& a, const GeoPoint& b) noexcept {
  const double phi1 = a.lat * kDegToRad;
  const double phi2 = b.lat * kDegToRad;
  const double dphi = (b.lat - a.lat) * kDegToRad;
  const double dlambda = (b.lon - a.lon) * kDegToRad;
  const double s1 = std::sin(dphi / 2.0);
  const double s2 = std::sin(dlambda / 2.0);
  // Symmetric in (a, b): s1, s2 only change sign and cos(phi1) * cos(phi2) commutes.
  const double h = s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2;
  return 2.0 * kEarthRadiusM * std::asin(std::sqrt(std::min(1.0, h)));
}

GeoPoint destination(const GeoPoint& origin, double bearing_deg, double distance_m) noexcept {
  const double delta = distance_m / kEarthRadiusM;
  const double theta = bearing_deg * kDegToRad;
  const double phi1 = origin.lat * kDegToRad;
  const double lambda1 = origin.lon * kDegToRad;
  const double sin_phi2 =
      std::sin(phi1) * std::cos(delta) + std::cos(phi1) * std::sin(delta) * std::cos(theta);
  const double phi2 = std::asin(std::clamp(sin_phi2, -1.0, 1.0));
  const double lambda2 =
      lambda1 + std::atan2(std::sin(theta) * std::sin(delta) * std::cos(phi1),
                           std::cos(delta) - std::sin(phi1) * sin_phi2);
  double lon = lambda2 / kDegToRad;
  lon = std::fmod(lon + 540.0, 360.0) - 180.0;
  return {phi2 / kDegToRad, lon};
}

GeoPoint mean_point(std::span<const GeoPoint> points) noexcept {
  if (points.empty()) return {};
  double lat = 0.0, lon = 0.0;
  for (const auto& p : points) {
    lat += p.lat;
    lon += p.lon;
  }
  const auto n = static_cast<double>(points.size());
  return {lat / n, lon / n};
}

void Polygon::validate() const {
  if (rings.empty()) fail(Errc::malformed_geometry, "polygon has no rings");
  for (std::size_t r = 0; r < rings.size(); ++r) {
    if (rings[r].size() < 3) {
      fail(Errc::malformed_geometry,
           "polygon ring " + std::to_string(r) + " has fewer than 3 vertices");
    }
    for (const auto& p : rings[r]) {
      if (!is_valid(p)) fail(Errc::malformed_geometry, "polygon vertex out of range");
    }
  }
}

BoundingBox Polygon::bounds() const {
  BoundingBox box{90.0, -90.0, 180.0, -180.0};
  for (const auto& ring : rings) {
    for (const auto& p : ring) {
      box.min_lat = std::min(box.min_lat, p.lat);
      box.max_lat = std::max(box.max_lat, p.lat);
      box.min_lon = std::min(box.min_lon, p.lon);
      box.max_lon = std::max(box.max_lon, p.lon);
    }
  }
  return box;
}

bool point_in_polygon(const GeoPoint& p, const Polygon& poly) {
  bool inside = false;
  if (poly.rings.empty()) fail(Errc::malformed_geometry, "polygon has no rings");
  for (const auto& ring : poly.rings) {
    if (ring.size() < 3) fail(Errc::malformed_geometry, "polygon ring has fewer than 3 vertices");
    const std::size_t n = ring.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
      const GeoPoint& a = ring[i];
      const GeoPoint& b = ring[j];
      if (on_segment(p, a, b)) return true;
      if ((a.lat > p.lat) != (b.lat > p.lat)) {
        const double x = (b.lon - a.lon) * (p.lat - a.lat) / (b.lat - a.lat) + a.lon;
        if (p.lon < x) inside = !inside;
      }
    }
  }
  return inside;
}

bool has_self_intersection(const Polygon& poly) {
  for (const auto& ring : poly.rings) {
    const std::size_t n = ring.size();
    if (n < 4) continue;
    for (std::size_t i = 0; i < n; ++i) {
      const GeoPoint& a = ring[i];
      const GeoPoint& b = ring[(i + 1) % n];
      for (std::size_t j = i + 2; j < n; ++j) {
        if (i == 0 && j == n - 1) continue;  // adjacent through the closing edge
        if (segments_intersect(a, b, ring[j], ring[(j + 1) % n])) return true;
      }
    }
  }
  return false;
}

void Patch::validate() const {
  if (!(human_population > 0.0) || !std::isfinite(human_population)) {
    fail(Errc::validation, "patch '" + id + "': human_population must be > 0");
  }
  if (!(vector_capacity >= 0.0) || !std::isfinite(vector_capacity)) {
    fail(Errc::validation, "patch '" + id + "': vector_capacity must be >= 0");
  }
  geometry.validate();
}

RegionIndex::RegionIndex(std::span<const Region> regions) {
  for (const auto& r : regions) add(r.id, r.geometry);
  sort_ids();
}

RegionIndex::RegionIndex(std::span<const Patch> patches) {
  for (const auto& p : patches) add(p.id, p.geometry);
  sort_ids();
}

void RegionIndex::add(const std::string& id, const Polygon& polygon) {
  polygon.validate();
  entries_.push_back(Entry{id, polygon, polygon.bounds()});
  by_id_.push_back(entries_.size() - 1);
}

void RegionIndex::sort_ids() {
  std::stable_sort(by_id_.begin(), by_id_.end(),
                   [this](std::size_t a, std::size_t b) { return entries_[a].id < entries_[b].id; });
}

std::vector<std::size_t> RegionIndex::locate_all(const GeoPoint& p) const {
  std::vector<std::size_t> hits;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& e = entries_[i];
    if (e.box.contains(p) && point_in_polygon(p, e.polygon)) hits.push_back(i);
  }
  return hits;
}

std::optional<std::size_t> RegionIndex::locate_index(const GeoPoint& p) const {
  std::optional<std::size_t> winner;
  for (std::size_t pos : by_id_) {
    const auto& e = entries_[pos];
    if (!e.box.contains(p) || !point_in_polygon(p, e.polygon)) continue;
    if (!winner) {
      winner = pos;
      continue;
    }
    spdlog::warn("point ({}, {}) lies in overlapping regions '{}' and '{}'; using '{}'", p.lat,
                 p.lon, entries_[*winner].id, e.id, entries_[*winner].id);
  }
  return winner;
}

std::optional<std::string> RegionIndex::locate(const GeoPoint& p) const {
  if (auto idx = locate_index(p)) return entries_[*idx].id;
  return std::nullopt;
}

std::optional<std::string> locate(const GeoPoint& p, std::span<const Region> regions) {
  return RegionIndex(regions).locate(p);
}

std::optional<std::string> locate(const GeoPoint& p, std::span<const Patch> patches) {
  return RegionIndex(patches).locate(p);
}

}  // namespace vbrisk::geo
