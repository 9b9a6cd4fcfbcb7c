#include "vbrisk/geojson.hpp"

#include <cmath>
#include <set>

#include <spdlog/spdlog.h>

#include "json_io.hpp"

namespace vbrisk::geo {
namespace {

using detail::json;

Ring parse_ring(const json& coords) {
  if (!coords.is_array()) fail(Errc::malformed_geometry, "ring is not an array");
  Ring ring;
  for (const auto& c : coords) {
    if (!c.is_array() || c.size() < 2 || !c[0].is_number() || !c[1].is_number()) {
      fail(Errc::malformed_geometry, "ring position is not [lon, lat]");
    }
    double lon = c[0].get<double>();
    if (lon == 180.0) lon = -180.0;
    ring.push_back(GeoPoint{c[1].get<double>(), lon});
  }
  if (ring.size() >= 2 && ring.front() == ring.back()) ring.pop_back();
  return ring;
}

Polygon parse_geometry(const json& g, const std::string& id) {
  if (!g.is_object() || !g.contains("type") || !g.contains("coordinates")) {
    fail(Errc::malformed_geometry, "feature '" + id + "': missing geometry");
  }
  const std::string type = g["type"].get<std::string>();
  const json* rings = nullptr;
  if (type == "Polygon") {
    rings = &g["coordinates"];
  } else if (type == "MultiPolygon") {
    const auto& parts = g["coordinates"];
    if (!parts.is_array() || parts.size() != 1) {
      fail(Errc::malformed_geometry,
           "feature '" + id + "': only single-part MultiPolygon geometries are supported");
    }
    rings = &parts[0];
  } else {
    fail(Errc::malformed_geometry, "feature '" + id + "': unsupported geometry type " + type);
  }
  if (!rings->is_array()) fail(Errc::malformed_geometry, "feature '" + id + "': bad rings");
  Polygon poly;
  for (const auto& r : *rings) poly.rings.push_back(parse_ring(r));
  poly.validate();
  if (has_self_intersection(poly)) {
    spdlog::warn("feature '{}': polygon ring self-intersects; point tests use the even-odd rule",
                 id);
  }
  return poly;
}

std::string property_string(const json& props, const char* key) {
  const auto& v = props[key];
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  fail(Errc::validation, std::string("feature property '") + key + "' must be a string");
}

template <typename Fn>
void for_each_feature(std::string_view text, Fn&& fn) {
  const json doc = detail::parse_json(std::string(text), "GeoJSON");
  if (!doc.is_object() || doc.value("type", "") != "FeatureCollection" ||
      !doc.contains("features") || !doc["features"].is_array()) {
    fail(Errc::format, "GeoJSON: expected a FeatureCollection");
  }
  std::set<std::string> seen;
  for (const auto& f : doc["features"]) {
    if (!f.is_object() || !f.contains("properties") || !f["properties"].is_object()) {
      fail(Errc::format, "GeoJSON: feature without properties");
    }
    const auto& props = f["properties"];
    if (!props.contains("id")) fail(Errc::validation, "GeoJSON: feature without 'id' property");
    const std::string id = property_string(props, "id");
    if (!seen.insert(id).second) fail(Errc::validation, "GeoJSON: duplicate feature id '" + id + "'");
    const std::string name = props.contains("name") ? property_string(props, "name") : id;
    fn(id, name, parse_geometry(f.value("geometry", json{}), id), props);
  }
}

}  // namespace

std::vector<Region> regions_from_geojson(std::string_view text) {
  std::vector<Region> out;
  for_each_feature(text, [&](const std::string& id, const std::string& name, Polygon poly,
                             const json&) { out.push_back(Region{id, name, std::move(poly)}); });
  return out;
}

std::vector<Region> load_regions(const std::string& path) {
  return regions_from_geojson(detail::read_text(path));
}

std::vector<Patch> patches_from_geojson(std::string_view text) {
  std::vector<Patch> out;
  for_each_feature(text, [&](const std::string& id, const std::string& name, Polygon poly,
                             const json& props) {
    if (!props.contains("population") || !props["population"].is_number()) {
      fail(Errc::validation, "patch '" + id + "': missing numeric 'population'");
    }
    Patch p{id, name, std::move(poly), props["population"].get<double>(), 0.0};
    if (props.contains("vector_capacity") && !props["vector_capacity"].is_null()) {
      if (!props["vector_capacity"].is_number()) {
        fail(Errc::validation, "patch '" + id + "': 'vector_capacity' must be numeric");
      }
      p.vector_capacity = props["vector_capacity"].get<double>();
    } else {
      p.vector_capacity = kDefaultVectorsPerHuman * p.human_population;
    }
    p.validate();
    out.push_back(std::move(p));
  });
  return out;
}

std::vector<Patch> load_patches(const std::string& path) {
  return patches_from_geojson(detail::read_text(path));
}

}  // namespace vbrisk::geo
