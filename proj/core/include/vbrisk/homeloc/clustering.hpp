#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "vbrisk/geo.hpp"
#include "vbrisk/ingest.hpp"
#include "vbrisk/timeutil.hpp"

namespace vbrisk::homeloc {

inline constexpr double kClusterRadiusM = 100.0;
inline constexpr std::size_t kMinGeoEvents = 5;
inline constexpr double kDefaultUtcOffsetHours = -4.0;

struct DbscanOptions {
  double eps_m = kClusterRadiusM;
  std::size_t min_pts = 1;  // 1 reduces DBSCAN to eps-linkage components
};

struct Cluster {
  std::string user_id;
  geo::GeoPoint centroid;            // mean of member coordinates
  std::vector<std::size_t> members;  // ascending indices into the user's events
};

/// DBSCAN with the haversine metric over the geo-tagged events of one user
/// (events without a geo-tag are ignored). Points are visited in a canonical
/// coordinate order, so the partition does not depend on input order; with
/// min_pts > 1 unclustered noise points are left out. Clusters are ordered by
/// their first member in that canonical order.
std::vector<Cluster> dbscan_user(std::span<const ingest::ActivityEvent> events,
                                 const DbscanOptions& options = {});

/// Read-only spatial index over every user's geo-tagged events, answering
/// "who else was here" queries for a fixed radius.
class LocationIndex {
 public:
  explicit LocationIndex(std::span<const ingest::ActivityEvent> events,
                         double radius_m = kClusterRadiusM);

  struct Counts {
    std::size_t other_users = 0;  // distinct users other than `self` within radius
    std::size_t events = 0;       // events of all users within radius
  };
  Counts query(const geo::GeoPoint& center, const std::string& self) const;

  std::size_t total_events() const noexcept { return total_; }
  double radius_m() const noexcept { return radius_m_; }

 private:
  struct Entry {
    geo::GeoPoint point;
    std::size_t user;
  };
  std::pair<long long, long long> cell(const geo::GeoPoint& p) const;

  double radius_m_;
  double dlat_ = 0.0;
  double dlon_ = 0.0;
  std::size_t total_ = 0;
  std::unordered_map<std::string, std::size_t> user_ids_;
  std::map<std::pair<long long, long long>, std::vector<Entry>> cells_;
};

inline constexpr std::size_t kFeatureCount = 10;
using Features = std::array<double, kFeatureCount>;

/// Feature layout:
///  f1  events in the cluster
///  f2  fraction of the user's geo events in the cluster
///  f3  fraction of cluster events at local 19:00-24:00 (end of day)
///  f4  fraction at local 00:00-08:00 (overnight / early)
///  f5  fraction on a local Saturday or Sunday
///  f6  distinct local days with an event in the cluster
///  f7  days between the cluster's first and last event
///  f8  local days whose last geo event of the user lies in the cluster
///  f9  distinct other users with events within 100 m of the centroid
///  f10 fraction of all indexed events within 100 m of the centroid
struct ClusterRecord {
  std::string user_id;
  std::size_t cluster_index = 0;
  geo::GeoPoint centroid;
  Timestamp first_event{};
  Features features{};
  std::optional<bool> label;  // true home (training only)
};

/// One record per cluster. Without `utc_offset_hours` the default offset is
/// used and a warning is logged.
std::vector<ClusterRecord> extract_records(std::span<const ingest::ActivityEvent> user_events,
                                           std::span<const Cluster> clusters,
                                           const LocationIndex& index,
                                           std::optional<double> utc_offset_hours,
                                           double default_offset_hours = kDefaultUtcOffsetHours);

/// Geo events grouped per user (sorted by user id), preserving input order.
std::map<std::string, std::vector<ingest::ActivityEvent>> group_geo_events(
    std::span<const ingest::ActivityEvent> events);

struct UserClusters {
  std::string user_id;
  std::size_t geo_events = 0;
  std::vector<Cluster> clusters;
  std::vector<ClusterRecord> records;
};

/// Clusters and records for every user with at least `min_geo_events` geo
/// events, sorted by user id.
std::vector<UserClusters> build_user_records(std::span<const ingest::ActivityEvent> events,
                                             double utc_offset_hours,
                                             const DbscanOptions& dbscan = {},
                                             std::size_t min_geo_events = kMinGeoEvents);

/// Marks a record as home when its centroid lies within `radius_m` of the
/// user's known home; users absent from `homes` stay unlabeled.
void label_by_home(std::span<ClusterRecord> records,
                   const std::map<std::string, geo::GeoPoint>& homes,
                   double radius_m = kClusterRadiusM);

/// CSV `user_id,f1,...,f10,label` (label `1`, `0` or empty).
std::string format_records_csv(std::span<const ClusterRecord> records);
std::vector<ClusterRecord> parse_records_csv(std::string_view text);
std::vector<ClusterRecord> load_records_csv(const std::string& path);

}  // namespace vbrisk::homeloc
