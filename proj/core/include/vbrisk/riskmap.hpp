#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "vbrisk/epimodel.hpp"
#include "vbrisk/geo.hpp"
#include "vbrisk/homeloc/cascade.hpp"
#include "vbrisk/ingest.hpp"

namespace vbrisk::riskmap {

enum class ShareKind { visitor_visits, resident_homes };
std::string_view to_string(ShareKind kind) noexcept;

struct ShareRow {
  std::string neighborhood;
  std::size_t count = 0;
  double percent = 0.0;  // 100 * count / denominator
};

/// Per-neighborhood shares. Rows hold neighborhoods with a non-zero count,
/// sorted by count descending then id. Items outside every neighborhood go to
/// `other` and still count in the denominator.
struct ShareTable {
  ShareKind kind = ShareKind::visitor_visits;
  std::vector<ShareRow> rows;
  std::size_t other = 0;
  std::size_t denominator = 0;

  double other_percent() const noexcept;
  /// Ids of the first `k` rows plus any rows tied with the k-th.
  std::vector<std::string> top_k(std::size_t k) const;
};

/// Rows from raw counts (neighborhood, count); zero counts are dropped.
ShareTable make_share_table(ShareKind kind, std::vector<std::pair<std::string, std::size_t>> counts,
                            std::size_t other);

enum class VisitorUnit { events, users };

/// Events of users whose profile home equals `zone_label`, input order kept.
std::vector<ingest::ActivityEvent> events_of_residents(std::span<const ingest::ActivityEvent> events,
                                                       std::span<const ingest::UserProfile> profiles,
                                                       const std::string& zone_label);

/// Geo-tagged events inside `area` (e.g. the metro the neighborhoods belong to).
std::vector<ingest::ActivityEvent> events_within(std::span<const ingest::ActivityEvent> events,
                                                 const geo::Polygon& area);

/// Home verdicts inside `area`; unknown verdicts are kept (they never count).
std::vector<homeloc::HomePrediction> homes_within(std::span<const homeloc::HomePrediction> predictions,
                                                  const geo::Polygon& area);

/// Event mode: each geo-tagged event counts once. User mode: each user counts
/// once per neighborhood visited, the denominator is the number of users with
/// any geo-tag and `other` holds users seen in no neighborhood (percentages
/// then need not add up to 100). Errc::empty_sample if nothing falls in any
/// neighborhood.
ShareTable visitor_shares(std::span<const ingest::ActivityEvent> events,
                          std::span<const geo::Region> neighborhoods,
                          VisitorUnit unit = VisitorUnit::events);

/// Shares of accepted homes; unknown verdicts are ignored entirely.
/// Errc::empty_sample when every verdict is unknown.
ShareTable resident_shares(std::span<const homeloc::HomePrediction> predictions,
                           std::span<const geo::Region> neighborhoods);

enum class Criterion { both, visitor_only, resident_only };
std::string_view to_string(Criterion c) noexcept;

struct RiskSet {
  Criterion criterion = Criterion::both;
  std::size_t top_k = 5;
  std::vector<std::string> neighborhoods;  // sorted ids
};

/// Top-k of a single table.
RiskSet high_risk(const ShareTable& table, std::size_t top_k = 5);

/// Neighborhoods in the top-k of both tables (ties at rank k included).
RiskSet intersect_high_risk(const ShareTable& visitors, const ShareTable& residents,
                            std::size_t top_k = 5);

struct CountyReport {
  std::vector<geo::Patch> patches;
  std::vector<epi::PatchRisk> risks;  // any order; emitted ranked
};

struct ReportInputs {
  std::optional<CountyReport> county;
  std::optional<ShareTable> visitors;
  std::optional<ShareTable> residents;
  RiskSet risk_set;
};

std::string format_shares_csv(std::span<const ShareTable> tables);
std::string format_risk_set_json(const RiskSet& set);
std::string format_county_geojson(const CountyReport& county);

/// Writes county_risk.csv and county_risk.geojson (when county data is
/// given), neighborhood_shares.csv and risk_set.json into `out_dir`, creating
/// it if needed. Byte-stable for identical inputs.
void emit_report(const ReportInputs& inputs, const std::string& out_dir);

}  // namespace vbrisk::riskmap
