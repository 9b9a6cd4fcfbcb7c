#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "vbrisk/geo.hpp"

namespace vbrisk::geo {

/// Default vector abundance when a patch feature has no `vector_capacity`.
inline constexpr double kDefaultVectorsPerHuman = 1.5;

/// Reads a GeoJSON FeatureCollection of Polygon features (a single-part
/// MultiPolygon is accepted). Each feature needs an `id` property; `name`
/// defaults to the id. Duplicate ids are a validation error; self-intersecting
/// rings are accepted with a warning.
std::vector<Region> regions_from_geojson(std::string_view text);
std::vector<Region> load_regions(const std::string& path);

/// As above, plus `population` (required, > 0) and `vector_capacity`
/// (optional, defaults to kDefaultVectorsPerHuman * population).
std::vector<Patch> patches_from_geojson(std::string_view text);
std::vector<Patch> load_patches(const std::string& path);

}  // namespace vbrisk::geo
