#pragma once

// Internal JSON helpers shared by the core translation units. Not installed.

#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "vbrisk/error.hpp"
#include "vbrisk/geo.hpp"

namespace vbrisk::detail {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::io, "cannot open '" + path + "' for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Errc::io, "cannot open '" + path + "' for writing");
  out << text;
  if (!out) fail(Errc::io, "failed writing '" + path + "'");
}

inline json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    fail(Errc::format, what + ": invalid JSON: " + e.what());
  }
}

inline json polygon_to_json(const geo::Polygon& poly) {
  json rings = json::array();
  for (const auto& ring : poly.rings) {
    json coords = json::array();
    for (const auto& p : ring) coords.push_back(json::array({p.lon, p.lat}));
    if (!ring.empty()) coords.push_back(json::array({ring.front().lon, ring.front().lat}));
    rings.push_back(std::move(coords));
  }
  return json{{"type", "Polygon"}, {"coordinates", std::move(rings)}};
}

inline ordered_json polygon_to_ordered_json(const geo::Polygon& poly) {
  ordered_json rings = ordered_json::array();
  for (const auto& ring : poly.rings) {
    ordered_json coords = ordered_json::array();
    for (const auto& p : ring) coords.push_back(ordered_json::array({p.lon, p.lat}));
    if (!ring.empty()) coords.push_back(ordered_json::array({ring.front().lon, ring.front().lat}));
    rings.push_back(std::move(coords));
  }
  ordered_json g;
  g["type"] = "Polygon";
  g["coordinates"] = std::move(rings);
  return g;
}

}  // namespace vbrisk::detail
