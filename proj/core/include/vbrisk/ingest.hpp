#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "vbrisk/geo.hpp"
#include "vbrisk/timeutil.hpp"

namespace vbrisk::ingest {

/// One timestamped post. At least one of `geo` / `text` is present.
struct ActivityEvent {
  std::string user_id;
  Timestamp timestamp{};
  std::optional<geo::GeoPoint> geo;
  std::optional<std::string> text;

  friend bool operator==(const ActivityEvent&, const ActivityEvent&) = default;
};

struct EventLoadResult {
  std::vector<ActivityEvent> events;  // file order
  std::size_t rejected = 0;
  std::vector<std::size_t> rejected_lines;  // 1-based line numbers
};

/// Parses newline-delimited JSON records with fields `user_id`, `ts`
/// (ISO-8601), optional `lat`+`lon`, optional `text`. Blank lines are ignored.
/// Invalid records are counted; more than half invalid is Errc::format.
EventLoadResult parse_events(std::string_view text);
EventLoadResult load_events(const std::string& path);

/// Canonical NDJSON rendering; `parse_events(format_events(e)).events == e`.
std::string format_events(std::span<const ActivityEvent> events);
void write_events(const std::string& path, std::span<const ActivityEvent> events);

struct UserProfile {
  std::string user_id;
  std::optional<std::string> profile_home;  // coarse zone label, e.g. "PR"
};

/// CSV `user_id,profile_home`; an empty profile_home means unknown.
std::vector<UserProfile> load_profiles(const std::string& path);
void write_profiles(const std::string& path, std::span<const UserProfile> profiles);

/// Follower adjacency: user -> users who follow them.
struct SocialGraph {
  std::map<std::string, std::vector<std::string>> followers;

  bool contains(const std::string& user) const { return followers.count(user) != 0; }
};

/// NDJSON `{"user": ..., "followers": [...]}`; repeated users merge their lists.
SocialGraph load_graph(const std::string& path);
void write_graph(const std::string& path, const SocialGraph& graph);

using KeepPredicate = std::function<bool(const std::string& user_id)>;

/// Predicate accepting users whose profile home is one of `zones`.
KeepPredicate profile_home_in(std::span<const UserProfile> profiles, std::set<std::string> zones);

/// Offline snowball walk over a follower graph.
///
/// Starting from `seeds`, followers of every kept user are collected; a
/// follower is expanded further only when it satisfies `keep`. The result is
/// the set of kept users reachable through kept users plus their immediate
/// followers. Self-edges are ignored. Throws Errc::config for a seed that is
/// not in the graph or does not satisfy `keep`.
std::set<std::string> snowball_sample(const SocialGraph& graph,
                                      std::span<const std::string> seeds,
                                      const KeepPredicate& keep);

/// Persons per day from a source zone to destination regions.
class AirTraffic {
 public:
  void add(const std::string& source, const std::string& dest_region, double persons_per_day);

  /// 0 when no row matches.
  double volume(const std::string& source, const std::string& dest_region) const;

  /// Sum over every destination of `source`.
  double total_from(const std::string& source) const;

  const std::map<std::pair<std::string, std::string>, double>& rows() const { return rows_; }

 private:
  std::map<std::pair<std::string, std::string>, double> rows_;
};

/// CSV `source,dest_region,persons_per_day`; duplicate rows are summed,
/// negative or non-numeric volumes and missing columns are Errc::validation.
AirTraffic parse_air_traffic(std::string_view text);
AirTraffic load_air_traffic(const std::string& path);

}  // namespace vbrisk::ingest
