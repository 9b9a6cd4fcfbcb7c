#include "vbrisk/riskmap.hpp"

#include <algorithm>
#include <filesystem>
#include <map>
#include <set>

#include <fmt/format.h>

#include "json_io.hpp"
#include "vbrisk/csv.hpp"
#include "vbrisk/error.hpp"

namespace vbrisk::riskmap {

std::string_view to_string(ShareKind kind) noexcept {
  return kind == ShareKind::visitor_visits ? "visitor" : "resident";
}

std::string_view to_string(Criterion c) noexcept {
  switch (c) {
    case Criterion::both: return "both";
    case Criterion::visitor_only: return "visitor-only";
    case Criterion::resident_only: return "resident-only";
  }
  return "both";
}

double ShareTable::other_percent() const noexcept {
  return denominator == 0 ? 0.0 : 100.0 * static_cast<double>(other) / static_cast<double>(denominator);
}

std::vector<std::string> ShareTable::top_k(std::size_t k) const {
  std::vector<std::string> out;
  if (k == 0) return out;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i >= k && rows[i].count != rows[k - 1].count) break;
    out.push_back(rows[i].neighborhood);
  }
  return out;
}

ShareTable make_share_table(ShareKind kind, std::vector<std::pair<std::string, std::size_t>> counts,
                            std::size_t other) {
  ShareTable t;
  t.kind = kind;
  t.other = other;
  t.denominator = other;
  std::map<std::string, std::size_t> merged;
  for (auto& [id, n] : counts) {
    merged[id] += n;
    t.denominator += n;
  }
  for (const auto& [id, n] : merged) {
    if (n == 0) continue;
    t.rows.push_back({id, n, 100.0 * static_cast<double>(n) / static_cast<double>(t.denominator)});
  }
  std::stable_sort(t.rows.begin(), t.rows.end(),
                   [](const ShareRow& a, const ShareRow& b) { return a.count > b.count; });
  return t;
}

std::vector<ingest::ActivityEvent> events_of_residents(std::span<const ingest::ActivityEvent> events,
                                                       std::span<const ingest::UserProfile> profiles,
                                                       const std::string& zone_label) {
  std::set<std::string> users;
  for (const auto& p : profiles) {
    if (p.profile_home == zone_label) users.insert(p.user_id);
  }
  std::vector<ingest::ActivityEvent> out;
  for (const auto& ev : events) {
    if (users.count(ev.user_id)) out.push_back(ev);
  }
  return out;
}

std::vector<ingest::ActivityEvent> events_within(std::span<const ingest::ActivityEvent> events,
                                                 const geo::Polygon& area) {
  std::vector<ingest::ActivityEvent> out;
  for (const auto& ev : events) {
    if (ev.geo && geo::point_in_polygon(*ev.geo, area)) out.push_back(ev);
  }
  return out;
}

std::vector<homeloc::HomePrediction> homes_within(std::span<const homeloc::HomePrediction> predictions,
                                                  const geo::Polygon& area) {
  std::vector<homeloc::HomePrediction> out;
  for (const auto& p : predictions) {
    if (!p.home || geo::point_in_polygon(*p.home, area)) out.push_back(p);
  }
  return out;
}

ShareTable visitor_shares(std::span<const ingest::ActivityEvent> events,
                          std::span<const geo::Region> neighborhoods, VisitorUnit unit) {
  const geo::RegionIndex index(neighborhoods);
  std::map<std::string, std::size_t> counts;
  std::size_t other = 0;
  std::size_t located = 0;
  if (unit == VisitorUnit::events) {
    for (const auto& ev : events) {
      if (!ev.geo) continue;
      if (auto nb = index.locate(*ev.geo)) {
        ++counts[*nb];
        ++located;
      } else {
        ++other;
      }
    }
  } else {
    std::map<std::string, std::set<std::string>> visited;
    for (const auto& ev : events) {
      if (!ev.geo) continue;
      auto& set = visited[ev.user_id];
      if (auto nb = index.locate(*ev.geo)) set.insert(*nb);
    }
    for (const auto& [user, set] : visited) {
      if (set.empty()) ++other;
      for (const auto& nb : set) {
        ++counts[nb];
        ++located;
      }
    }
  }
  if (located == 0) fail(Errc::empty_sample, "visitor shares: no geo-tagged event falls in any neighborhood");

  ShareTable t;
  t.kind = ShareKind::visitor_visits;
  t.other = other;
  t.denominator = unit == VisitorUnit::events ? located + other : 0;
  if (unit == VisitorUnit::users) {
    std::set<std::string> users;
    for (const auto& ev : events) {
      if (ev.geo) users.insert(ev.user_id);
    }
    t.denominator = users.size();
  }
  for (const auto& [id, n] : counts) {
    t.rows.push_back({id, n, 100.0 * static_cast<double>(n) / static_cast<double>(t.denominator)});
  }
  std::stable_sort(t.rows.begin(), t.rows.end(),
                   [](const ShareRow& a, const ShareRow& b) { return a.count > b.count; });
  return t;
}

ShareTable resident_shares(std::span<const homeloc::HomePrediction> predictions,
                           std::span<const geo::Region> neighborhoods) {
  const geo::RegionIndex index(neighborhoods);
  std::vector<std::pair<std::string, std::size_t>> counts;
  std::size_t other = 0;
  std::size_t known = 0;
  for (const auto& p : predictions) {
    if (!p.home) continue;
    ++known;
    if (auto nb = index.locate(*p.home)) {
      counts.emplace_back(*nb, 1);
    } else {
      ++other;
    }
  }
  if (known == 0) fail(Errc::empty_sample, "resident shares: every home verdict is unknown");
  return make_share_table(ShareKind::resident_homes, std::move(counts), other);
}

RiskSet high_risk(const ShareTable& table, std::size_t top_k) {
  RiskSet s;
  s.criterion = table.kind == ShareKind::visitor_visits ? Criterion::visitor_only : Criterion::resident_only;
  s.top_k = top_k;
  s.neighborhoods = table.top_k(top_k);
  std::sort(s.neighborhoods.begin(), s.neighborhoods.end());
  return s;
}

RiskSet intersect_high_risk(const ShareTable& visitors, const ShareTable& residents,
                            std::size_t top_k) {
  if (top_k == 0) fail(Errc::validation, "top_k must be >= 1");
  auto a = visitors.top_k(top_k);
  auto b = residents.top_k(top_k);
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  RiskSet s;
  s.criterion = Criterion::both;
  s.top_k = top_k;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(s.neighborhoods));
  return s;
}

std::string format_shares_csv(std::span<const ShareTable> tables) {
  std::string out = "kind,neighborhood,count,denominator,percent\n";
  for (const auto& t : tables) {
    for (const auto& r : t.rows) {
      out += fmt::format("{},{},{},{},{:.1f}\n", to_string(t.kind), csv::escape(r.neighborhood), r.count,
                         t.denominator, r.percent);
    }
    out += fmt::format("{},other,{},{},{:.1f}\n", to_string(t.kind), t.other, t.denominator,
                       t.other_percent());
  }
  return out;
}

std::string format_risk_set_json(const RiskSet& set) {
  detail::ordered_json j;
  j["criterion"] = std::string(to_string(set.criterion));
  j["top_k"] = set.top_k;
  j["neighborhoods"] = set.neighborhoods;
  return j.dump(1) + "\n";
}

std::string format_county_geojson(const CountyReport& county) {
  std::map<std::string, const geo::Patch*> by_id;
  for (const auto& p : county.patches) by_id.emplace(p.id, &p);
  const auto ranked = epi::rank_patches(county.risks);
  detail::ordered_json features = detail::ordered_json::array();
  for (std::size_t r = 0; r < ranked.size(); ++r) {
    const auto it = by_id.find(ranked[r].patch_id);
    if (it == by_id.end()) fail(Errc::validation, "county report: no geometry for '" + ranked[r].patch_id + "'");
    detail::ordered_json f;
    f["type"] = "Feature";
    detail::ordered_json props;
    props["id"] = it->second->id;
    props["name"] = it->second->name;
    props["population"] = it->second->human_population;
    props["I_h_steady"] = ranked[r].infected_steady;
    props["risk"] = ranked[r].risk;
    props["rank"] = r + 1;
    f["properties"] = std::move(props);
    f["geometry"] = detail::polygon_to_ordered_json(it->second->geometry);
    features.push_back(std::move(f));
  }
  detail::ordered_json doc;
  doc["type"] = "FeatureCollection";
  doc["features"] = std::move(features);
  return doc.dump() + "\n";
}

void emit_report(const ReportInputs& inputs, const std::string& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) fail(Errc::io, "cannot create output directory '" + out_dir + "': " + ec.message());
  const std::filesystem::path dir(out_dir);
  if (inputs.county) {
    const auto ranked = epi::rank_patches(inputs.county->risks);
    detail::write_text((dir / "county_risk.csv").string(), epi::format_risk_csv(ranked));
    detail::write_text((dir / "county_risk.geojson").string(), format_county_geojson(*inputs.county));
  }
  std::vector<ShareTable> tables;
  if (inputs.visitors) tables.push_back(*inputs.visitors);
  if (inputs.residents) tables.push_back(*inputs.residents);
  detail::write_text((dir / "neighborhood_shares.csv").string(), format_shares_csv(tables));
  detail::write_text((dir / "risk_set.json").string(), format_risk_set_json(inputs.risk_set));
}

}  // namespace vbrisk::riskmap
