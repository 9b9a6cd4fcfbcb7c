#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "vbrisk/geo.hpp"
#include "vbrisk/ingest.hpp"
#include "vbrisk/timeutil.hpp"

namespace testing_support {

namespace fs = std::filesystem;

inline fs::path source_dir() { return fs::path(VBRISK_SOURCE_DIR); }
inline fs::path fixture(const std::string& rel) { return source_dir() / "fixtures" / rel; }
inline fs::path test_data(const std::string& rel) { return source_dir() / "tests" / "data" / rel; }

inline std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

/// Fresh empty directory under the system temp dir.
inline fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("vbrisk_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

inline vbrisk::geo::Polygon box(double lat0, double lon0, double lat1, double lon1) {
  return {{{{lat0, lon0}, {lat0, lon1}, {lat1, lon1}, {lat1, lon0}}}};
}

inline vbrisk::Timestamp ts(const std::string& iso) { return *vbrisk::parse_iso8601(iso); }

inline vbrisk::ingest::ActivityEvent geo_event(const std::string& user, double lat, double lon,
                                               const std::string& iso = "2016-06-01T12:00:00Z") {
  vbrisk::ingest::ActivityEvent e;
  e.user_id = user;
  e.timestamp = ts(iso);
  e.geo = vbrisk::geo::GeoPoint{lat, lon};
  return e;
}

inline vbrisk::ingest::ActivityEvent text_event(const std::string& user, const std::string& text,
                                                const std::string& iso = "2016-06-01T12:00:00Z") {
  vbrisk::ingest::ActivityEvent e;
  e.user_id = user;
  e.timestamp = ts(iso);
  e.text = text;
  return e;
}

inline vbrisk::geo::GeoPoint center(const vbrisk::geo::Polygon& p) {
  const auto b = p.bounds();
  return {(b.min_lat + b.max_lat) / 2, (b.min_lon + b.max_lon) / 2};
}

}  // namespace testing_support
