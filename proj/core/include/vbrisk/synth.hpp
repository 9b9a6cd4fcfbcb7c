#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "vbrisk/coarsegeo.hpp"
#include "vbrisk/geo.hpp"
#include "vbrisk/ingest.hpp"

namespace vbrisk::synth {

/// Seeded generator settings. Users live in `zones` (weighted by population);
/// a `travel_fraction` share of users visit the source zone: some of those
/// live there (`source_resident_fraction`) and travel to the other zones,
/// the rest live elsewhere and travel to the source. Nobody else ever has an
/// event in the source zone.
struct SynthConfig {
  std::uint64_t seed = 0;
  std::size_t n_users = 100;
  double home_rate = 0.6;  // share of geo events at the planted home
  double travel_fraction = 0.3;
  double source_resident_fraction = 0.5;
  std::string source_zone = "PR";

  std::vector<geo::Patch> zones;
  std::vector<geo::Region> neighborhoods;
  std::string neighborhood_zone;  // zone containing the neighborhoods
  std::map<std::string, double> neighborhood_home_weights;   // default weight 1
  std::map<std::string, double> neighborhood_visit_weights;  // default weight 1
  double neighborhood_home_fraction = 0.8;   // residents of that zone homed in a neighborhood
  double neighborhood_visit_fraction = 0.8;  // trip stops there placed in a neighborhood

  std::map<std::string, std::string> profile_labels;  // zone -> profile text, default zone id
  double profile_missing_fraction = 0.1;
  std::map<std::string, std::vector<std::string>> vocabulary_per_zone;  // generated when absent
  std::size_t words_per_zone = 40;

  std::size_t min_geo_events = 5;
  std::size_t max_geo_events = 30;
  std::size_t min_text_events = 1;
  std::size_t max_text_events = 4;
  std::size_t corpus_docs_per_zone = 200;
  std::size_t outsiders = 50;  // graph-only accounts without events or profile
  double utc_offset_hours = -4.0;
  std::int64_t start_day = 16801;  // 2016-01-01, days since epoch
  std::size_t span_days = 365;
  /// Optional per-user cap on emitted events; the newest ones are kept.
  std::optional<std::size_t> max_events_per_user;

  /// Fractions in [0, 1], n_users > 0, min_geo_events >= 5, zones present,
  /// source and neighborhood zones known (Errc::config otherwise).
  void validate() const;
};

struct Trip {
  std::string zone;
  std::optional<std::string> neighborhood;  // when the stop lies in one
  geo::GeoPoint stop;
};

struct UserTruth {
  std::string user_id;
  std::string home_zone;
  std::optional<std::string> home_neighborhood;
  geo::GeoPoint home;
  bool traveler = false;
  std::vector<Trip> trips;
};

struct SynthOutput {
  std::vector<ingest::ActivityEvent> events;  // sorted by time, then user
  std::vector<ingest::UserProfile> profiles;  // sorted by user id
  ingest::SocialGraph graph;
  std::vector<coarsegeo::LabeledText> corpus;
  std::vector<UserTruth> truth;    // sorted by user id
  std::vector<std::string> seeds;  // users whose profile names the source zone
};

/// Pure function of `cfg`.
SynthOutput synth_generate(const SynthConfig& cfg);

/// Reads generator settings from a JSON object. Geometry paths are resolved
/// against `base_dir`; unresolvable paths are Errc::config.
SynthConfig synth_config_from_json(std::string_view text, const std::string& base_dir);
SynthConfig load_synth_config(const std::string& path);

/// Writes events.jsonl, profiles.csv, graph.jsonl, corpus.csv, seeds.txt and
/// truth.json into `dir` (which must exist).
void write_synth(const std::string& dir, const SynthOutput& out);

std::string truth_to_json(std::span<const UserTruth> truth);
std::vector<UserTruth> truth_from_json(std::string_view text);
std::vector<UserTruth> load_truth(const std::string& path);
std::map<std::string, geo::GeoPoint> truth_homes(std::span<const UserTruth> truth);

/// One user id per line; blank lines ignored.
std::vector<std::string> load_id_list(const std::string& path);

}  // namespace vbrisk::synth
