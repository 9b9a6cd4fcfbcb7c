#include <charconv>
#include <cmath>

#include "json_io.hpp"
#include "vbrisk/csv.hpp"
#include "vbrisk/ingest.hpp"

namespace vbrisk::ingest {

void AirTraffic::add(const std::string& source, const std::string& dest_region,
                     double persons_per_day) {
  if (!std::isfinite(persons_per_day) || persons_per_day < 0.0) {
    fail(Errc::validation, "air traffic: volume for " + source + "->" + dest_region +
                               " must be a non-negative number");
  }
  rows_[{source, dest_region}] += persons_per_day;
}

double AirTraffic::volume(const std::string& source, const std::string& dest_region) const {
  const auto it = rows_.find({source, dest_region});
  return it == rows_.end() ? 0.0 : it->second;
}

double AirTraffic::total_from(const std::string& source) const {
  double total = 0.0;
  for (const auto& [key, v] : rows_) {
    if (key.first == source) total += v;
  }
  return total;
}

AirTraffic parse_air_traffic(std::string_view text) {
  const auto rows = csv::parse(text);
  if (rows.empty()) fail(Errc::validation, "air traffic: missing header row");
  const csv::Header header(rows[0]);
  const std::size_t src = header.require("source");
  const std::size_t dst = header.require("dest_region");
  const std::size_t vol = header.require("persons_per_day");
  AirTraffic traffic;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() == 1 && row[0].empty()) continue;
    if (row.size() <= std::max({src, dst, vol})) {
      fail(Errc::validation, "air traffic: row " + std::to_string(r + 1) + " has too few columns");
    }
    const std::string& field = row[vol];
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc{} || ptr != field.data() + field.size()) {
      fail(Errc::validation, "air traffic: row " + std::to_string(r + 1) +
                                 ": persons_per_day '" + field + "' is not a number");
    }
    traffic.add(row[src], row[dst], value);
  }
  return traffic;
}

AirTraffic load_air_traffic(const std::string& path) {
  return parse_air_traffic(detail::read_text(path));
}

}  // namespace vbrisk::ingest
