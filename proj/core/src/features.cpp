#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <tuple>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "json_io.hpp"
#include "vbrisk/csv.hpp"
#include "vbrisk/error.hpp"
#include "vbrisk/homeloc/clustering.hpp"

namespace vbrisk::homeloc {
namespace {

constexpr double kDegPerMeter = 180.0 / (3.14159265358979323846 * geo::kEarthRadiusM);

double parse_number(const std::string& field, std::size_t row) {
  try {
    std::size_t used = 0;
    const double v = std::stod(field, &used);
    if (used == field.size() && std::isfinite(v)) return v;
  } catch (const std::exception&) {
  }
  fail(Errc::validation, fmt::format("records csv: bad number '{}' on row {}", field, row));
}

}  // namespace

LocationIndex::LocationIndex(std::span<const ingest::ActivityEvent> events, double radius_m)
    : radius_m_(radius_m) {
  if (!(radius_m > 0.0)) fail(Errc::validation, "location index radius must be > 0");
  double max_abs_lat = 0.0;
  for (const auto& ev : events) {
    if (ev.geo) max_abs_lat = std::max(max_abs_lat, std::abs(ev.geo->lat));
  }
  // A point within the radius differs by at most one cell in either axis.
  dlat_ = radius_m * kDegPerMeter * 1.01;
  const double c = std::cos(std::min(max_abs_lat + 1.0, 89.0) * 3.14159265358979323846 / 180.0);
  dlon_ = std::min(dlat_ / c, 360.0);
  for (const auto& ev : events) {
    if (!ev.geo) continue;
    const auto [it, inserted] = user_ids_.emplace(ev.user_id, user_ids_.size());
    cells_[cell(*ev.geo)].push_back(Entry{*ev.geo, it->second});
    ++total_;
  }
}

std::pair<long long, long long> LocationIndex::cell(const geo::GeoPoint& p) const {
  return {static_cast<long long>(std::floor(p.lat / dlat_)),
          static_cast<long long>(std::floor(p.lon / dlon_))};
}

LocationIndex::Counts LocationIndex::query(const geo::GeoPoint& center,
                                           const std::string& self) const {
  const auto me = user_ids_.find(self);
  const std::size_t self_id = me == user_ids_.end() ? static_cast<std::size_t>(-1) : me->second;
  const auto [ci, cj] = cell(center);
  Counts out;
  std::vector<std::size_t> others;
  for (long long di = -1; di <= 1; ++di) {
    for (long long dj = -1; dj <= 1; ++dj) {
      const auto it = cells_.find({ci + di, cj + dj});
      if (it == cells_.end()) continue;
      for (const auto& e : it->second) {
        if (geo::haversine_m(center, e.point) > radius_m_) continue;
        ++out.events;
        if (e.user != self_id) others.push_back(e.user);
      }
    }
  }
  std::sort(others.begin(), others.end());
  out.other_users = static_cast<std::size_t>(std::unique(others.begin(), others.end()) - others.begin());
  return out;
}

std::vector<ClusterRecord> extract_records(std::span<const ingest::ActivityEvent> user_events,
                                           std::span<const Cluster> clusters,
                                           const LocationIndex& index,
                                           std::optional<double> utc_offset_hours,
                                           double default_offset_hours) {
  if (clusters.empty()) return {};
  if (!utc_offset_hours) {
    spdlog::warn("no timezone configured; using fixed UTC offset {}", default_offset_hours);
  }
  const double offset = utc_offset_hours.value_or(default_offset_hours);

  std::vector<long> cluster_of(user_events.size(), -1);
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    for (std::size_t m : clusters[c].members) {
      if (m >= user_events.size() || !user_events[m].geo) {
        fail(Errc::validation, "cluster member does not refer to a geo-tagged event");
      }
      cluster_of[m] = static_cast<long>(c);
    }
  }

  // Last geo event of each local day; ties broken by coordinates.
  std::map<std::int64_t, std::size_t> last_of_day;
  std::size_t geo_total = 0;
  for (std::size_t i = 0; i < user_events.size(); ++i) {
    const auto& ev = user_events[i];
    if (!ev.geo) continue;
    ++geo_total;
    const auto day = to_local(ev.timestamp, offset).day;
    auto [it, inserted] = last_of_day.emplace(day, i);
    if (!inserted) {
      const auto& cur = user_events[it->second];
      if (std::tie(ev.timestamp, ev.geo->lat, ev.geo->lon) >
          std::tie(cur.timestamp, cur.geo->lat, cur.geo->lon)) {
        it->second = i;
      }
    }
  }
  std::vector<double> last_counts(clusters.size(), 0.0);
  for (const auto& [day, i] : last_of_day) {
    if (cluster_of[i] >= 0) last_counts[static_cast<std::size_t>(cluster_of[i])] += 1.0;
  }

  std::vector<ClusterRecord> out;
  out.reserve(clusters.size());
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    const auto& cl = clusters[c];
    ClusterRecord rec;
    rec.user_id = cl.user_id;
    rec.cluster_index = c;
    rec.centroid = cl.centroid;
    const double n = static_cast<double>(cl.members.size());
    double evening = 0, night = 0, weekend = 0;
    std::set<std::int64_t> days;
    Timestamp first = Timestamp::max(), last = Timestamp::min();
    for (std::size_t m : cl.members) {
      const auto& ev = user_events[m];
      const auto lt = to_local(ev.timestamp, offset);
      if (lt.hour >= 19) evening += 1;
      if (lt.hour < 8) night += 1;
      if (lt.weekend) weekend += 1;
      days.insert(lt.day);
      first = std::min(first, ev.timestamp);
      last = std::max(last, ev.timestamp);
    }
    rec.first_event = first;
    const auto near = index.query(cl.centroid, cl.user_id);
    const double total = static_cast<double>(index.total_events());
    rec.features = {
        n,
        n / static_cast<double>(geo_total),
        evening / n,
        night / n,
        weekend / n,
        static_cast<double>(days.size()),
        static_cast<double>((last - first).count()) / 86400.0,
        last_counts[c],
        static_cast<double>(near.other_users),
        total > 0 ? std::min(1.0, static_cast<double>(near.events) / total) : 0.0,
    };
    out.push_back(std::move(rec));
  }
  return out;
}

std::map<std::string, std::vector<ingest::ActivityEvent>> group_geo_events(
    std::span<const ingest::ActivityEvent> events) {
  std::map<std::string, std::vector<ingest::ActivityEvent>> out;
  for (const auto& ev : events) {
    if (ev.geo) out[ev.user_id].push_back(ev);
  }
  return out;
}

std::vector<UserClusters> build_user_records(std::span<const ingest::ActivityEvent> events,
                                             double utc_offset_hours,
                                             const DbscanOptions& dbscan,
                                             std::size_t min_geo_events) {
  const LocationIndex index(events, dbscan.eps_m);
  std::vector<UserClusters> out;
  for (const auto& [user, evs] : group_geo_events(events)) {
    if (evs.size() < min_geo_events) continue;
    UserClusters uc;
    uc.user_id = user;
    uc.geo_events = evs.size();
    uc.clusters = dbscan_user(evs, dbscan);
    uc.records = extract_records(evs, uc.clusters, index, utc_offset_hours);
    out.push_back(std::move(uc));
  }
  return out;
}

void label_by_home(std::span<ClusterRecord> records,
                   const std::map<std::string, geo::GeoPoint>& homes, double radius_m) {
  for (auto& rec : records) {
    const auto it = homes.find(rec.user_id);
    if (it == homes.end()) {
      rec.label.reset();
    } else {
      rec.label = geo::haversine_m(rec.centroid, it->second) <= radius_m;
    }
  }
}

std::string format_records_csv(std::span<const ClusterRecord> records) {
  std::string out = "user_id";
  for (std::size_t f = 1; f <= kFeatureCount; ++f) out += fmt::format(",f{}", f);
  out += ",label\n";
  for (const auto& rec : records) {
    out += csv::escape(rec.user_id);
    for (double v : rec.features) out += fmt::format(",{}", v);
    out += rec.label ? (*rec.label ? ",1\n" : ",0\n") : ",\n";
  }
  return out;
}

std::vector<ClusterRecord> parse_records_csv(std::string_view text) {
  const auto rows = csv::parse(text);
  if (rows.empty()) fail(Errc::validation, "records csv: missing header row");
  const csv::Header header(rows[0]);
  const std::size_t user = header.require("user_id");
  std::array<std::size_t, kFeatureCount> cols{};
  for (std::size_t f = 0; f < kFeatureCount; ++f) cols[f] = header.require(fmt::format("f{}", f + 1));
  const auto label = header.find("label");
  std::vector<ClusterRecord> out;
  std::map<std::string, std::size_t> per_user;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() < rows[0].size()) {
      fail(Errc::validation, fmt::format("records csv: row {} has too few columns", r + 1));
    }
    ClusterRecord rec;
    rec.user_id = row[user];
    rec.cluster_index = per_user[rec.user_id]++;
    // Row order stands in for first-event time when only features are known.
    rec.first_event = Timestamp(std::chrono::seconds(static_cast<long long>(r)));
    for (std::size_t f = 0; f < kFeatureCount; ++f) rec.features[f] = parse_number(row[cols[f]], r + 1);
    if (label) {
      const auto& v = row[*label];
      if (v == "1" || v == "true") {
        rec.label = true;
      } else if (v == "0" || v == "false") {
        rec.label = false;
      } else if (!v.empty()) {
        fail(Errc::validation, fmt::format("records csv: bad label '{}' on row {}", v, r + 1));
      }
    }
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<ClusterRecord> load_records_csv(const std::string& path) {
  return parse_records_csv(detail::read_text(path));
}

}  // namespace vbrisk::homeloc
