#pragma once

// Share-table fixtures matching the published neighborhood tables: visitor
// events of source residents (1000 geo-tags in the metro area) and accepted
// home locations (20 users, plus unknown verdicts that must not count).

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "support.hpp"
#include "vbrisk/geojson.hpp"
#include "vbrisk/homeloc/cascade.hpp"
#include "vbrisk/random.hpp"

namespace testing_support {

inline std::vector<vbrisk::geo::Region> miami_neighborhoods() {
  return vbrisk::geo::load_regions(fixture("g1/neighborhoods.geojson").string());
}

// inside Miami-Dade, outside every neighborhood
inline constexpr vbrisk::geo::GeoPoint kMetroOutside{25.60, -80.45};

inline const std::vector<std::pair<std::string, int>>& visitor_counts() {
  static const std::vector<std::pair<std::string, int>> c{
      {"Miami International Airport", 169}, {"Marlin Parks", 142}, {"Wynwood", 140},
      {"InterContinental", 135},           {"Miami Beach", 100}, {"Downtown", 90},
      {"Brickell", 80},                    {"Little Havana", 70}, {"", 74}};
  return c;
}

inline const std::vector<std::pair<std::string, int>>& resident_counts() {
  static const std::vector<std::pair<std::string, int>> c{
      {"Downtown", 5},      {"Miami Beach", 4},   {"Wynwood", 2},
      {"Miami International Airport", 2}, {"Allapattah", 2}, {"Little Havana", 1},
      {"Brickell", 1},      {"Coconut Grove", 1}, {"", 2}};
  return c;
}

// Deterministic point inside a neighborhood box (or the outside point for "").
inline vbrisk::geo::GeoPoint spot(const std::vector<vbrisk::geo::Region>& nbhd, const std::string& id,
                                  vbrisk::Rng& rng) {
  if (id.empty()) return kMetroOutside;
  for (const auto& r : nbhd) {
    if (r.id != id) continue;
    const auto b = r.geometry.bounds();
    return {b.min_lat + (b.max_lat - b.min_lat) * rng.uniform(0.1, 0.9),
            b.min_lon + (b.max_lon - b.min_lon) * rng.uniform(0.1, 0.9)};
  }
  throw std::runtime_error("unknown neighborhood " + id);
}

inline std::vector<vbrisk::ingest::ActivityEvent> visitor_fixture_events() {
  const auto nbhd = miami_neighborhoods();
  vbrisk::Rng rng(2016);
  std::vector<vbrisk::ingest::ActivityEvent> out;
  int k = 0;
  for (const auto& [id, n] : visitor_counts()) {
    for (int i = 0; i < n; ++i, ++k) {
      const auto p = spot(nbhd, id, rng);
      out.push_back(geo_event("pr" + std::to_string(k % 37), p.lat, p.lon));
    }
  }
  return out;
}

inline std::vector<vbrisk::homeloc::HomePrediction> resident_fixture_predictions() {
  const auto nbhd = miami_neighborhoods();
  vbrisk::Rng rng(2017);
  std::vector<vbrisk::homeloc::HomePrediction> out;
  int k = 0;
  for (const auto& [id, n] : resident_counts()) {
    for (int i = 0; i < n; ++i, ++k) {
      out.push_back({"mia" + std::to_string(k), spot(nbhd, id, rng), 0.9});
    }
  }
  for (int i = 0; i < 3; ++i) out.push_back({"unk" + std::to_string(i), std::nullopt, 0.1});
  return out;
}

}  // namespace testing_support
