#include "vbrisk/flux.hpp"

#include <cmath>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "json_io.hpp"
#include "vbrisk/coarsegeo.hpp"
#include "vbrisk/csv.hpp"

namespace vbrisk::flux {

std::vector<VisitSet> build_visit_sets(std::span<const ingest::ActivityEvent> events,
                                       const geo::RegionIndex& zones,
                                       const coarsegeo::ZoneModel* model,
                                       const VisitSetOptions& options) {
  if (!(options.min_confidence >= 0.0 && options.min_confidence <= 1.0)) {
    fail(Errc::validation, "min_confidence must lie in [0, 1]");
  }
  std::map<std::string, std::set<std::string>> visits;
  for (const auto& ev : events) {
    if (ev.geo) {
      if (!options.use_geo) continue;
      if (auto zone = zones.locate(*ev.geo)) visits[ev.user_id].insert(std::move(*zone));
    } else if (ev.text && options.use_text && model != nullptr) {
      const auto pred = coarsegeo::predict_zone(*ev.text, *model);
      if (pred.confidence >= options.min_confidence) visits[ev.user_id].insert(pred.zone);
    }
  }
  std::vector<VisitSet> out;
  out.reserve(visits.size());
  for (auto& [user, zone_set] : visits) out.push_back(VisitSet{user, std::move(zone_set)});
  return out;
}

SourceFlux estimate_source_flux(std::span<const VisitSet> visit_sets,
                                const std::string& source_zone,
                                std::span<const std::string> dest_patches, double air_volume) {
  if (!std::isfinite(air_volume) || air_volume < 0.0) {
    fail(Errc::validation, "air volume must be a non-negative number");
  }
  SourceFlux out;
  out.dest_patches.assign(dest_patches.begin(), dest_patches.end());
  out.user_counts.assign(dest_patches.size(), 0);
  for (const auto& vs : visit_sets) {
    if (!vs.zones_visited.count(source_zone)) continue;
    bool any_dest = false;
    for (std::size_t i = 0; i < dest_patches.size(); ++i) {
      if (dest_patches[i] != source_zone && vs.zones_visited.count(dest_patches[i])) {
        ++out.user_counts[i];
        any_dest = true;
      }
    }
    if (any_dest) ++out.sample_size;
  }
  if (out.sample_size == 0) {
    fail(Errc::empty_sample, "no user was observed in both '" + source_zone +
                                 "' and a destination patch; widen the data");
  }
  const auto u = static_cast<double>(out.sample_size);
  out.persons_per_day.reserve(dest_patches.size());
  for (std::size_t count : out.user_counts) {
    out.persons_per_day.push_back(static_cast<double>(count) / u * air_volume);
  }
  return out;
}

void FluxMatrix::validate() const {
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t j = 0; j < n_; ++j) {
      const double v = (*this)(i, j);
      if (!std::isfinite(v) || v < 0.0) {
        fail(Errc::validation, fmt::format("flux matrix entry ({}, {}) must be finite and >= 0", i, j));
      }
      if (i == j && v != 0.0) fail(Errc::validation, "flux matrix diagonal must be zero");
    }
  }
}

FluxMatrix to_rate_matrix(const SourceFlux& flux, std::span<const geo::Patch> patches,
                          const std::string& source_patch, double return_factor) {
  if (!(return_factor >= 0.0 && return_factor <= 1.0)) {
    fail(Errc::validation, "return factor must lie in [0, 1]");
  }
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < patches.size(); ++i) index.emplace(patches[i].id, i);
  const auto src = index.find(source_patch);
  if (src == index.end()) fail(Errc::validation, "unknown source patch '" + source_patch + "'");
  const double n_source = patches[src->second].human_population;
  if (!(n_source > 0.0)) fail(Errc::validation, "source patch population must be > 0");

  FluxMatrix alpha(patches.size());
  for (std::size_t k = 0; k < flux.dest_patches.size(); ++k) {
    const auto it = index.find(flux.dest_patches[k]);
    if (it == index.end()) fail(Errc::validation, "unknown destination patch '" + flux.dest_patches[k] + "'");
    const std::size_t i = it->second;
    if (i == src->second) continue;
    const double persons = flux.persons_per_day[k];
    alpha(src->second, i) = persons / n_source;
    if (!(patches[i].human_population > 0.0)) {
      fail(Errc::validation, "patch '" + patches[i].id + "' population must be > 0");
    }
    alpha(i, src->second) = return_factor * persons / patches[i].human_population;
  }
  return alpha;
}

void write_source_flux_csv(const std::string& path, const std::string& source_zone,
                           const SourceFlux& flux) {
  std::string out = "from,to,rate_per_day\n";
  for (std::size_t i = 0; i < flux.dest_patches.size(); ++i) {
    out += fmt::format("{},{},{}\n", csv::escape(source_zone), csv::escape(flux.dest_patches[i]),
                       flux.persons_per_day[i]);
  }
  detail::write_text(path, out);
}

std::string format_rate_csv(const FluxMatrix& alpha, std::span<const geo::Patch> patches) {
  std::string out = "from,to,rate_per_day\n";
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    for (std::size_t j = 0; j < alpha.size(); ++j) {
      if (alpha(i, j) != 0.0) {
        out += fmt::format("{},{},{}\n", csv::escape(patches[i].id), csv::escape(patches[j].id),
                           alpha(i, j));
      }
    }
  }
  return out;
}

void write_rate_csv(const std::string& path, const FluxMatrix& alpha,
                    std::span<const geo::Patch> patches) {
  detail::write_text(path, format_rate_csv(alpha, patches));
}

FluxMatrix load_rate_csv(const std::string& path, std::span<const geo::Patch> patches) {
  const auto rows = csv::read_file(path);
  if (rows.empty()) fail(Errc::validation, "rate csv: missing header row");
  const csv::Header header(rows[0]);
  const std::size_t from = header.require("from");
  const std::size_t to = header.require("to");
  const std::size_t rate = header.require("rate_per_day");
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < patches.size(); ++i) index.emplace(patches[i].id, i);
  FluxMatrix alpha(patches.size());
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() <= std::max({from, to, rate})) {
      fail(Errc::validation, "rate csv: row " + std::to_string(r + 1) + " has too few columns");
    }
    const auto a = index.find(row[from]);
    const auto b = index.find(row[to]);
    if (a == index.end() || b == index.end()) {
      fail(Errc::validation, "rate csv: unknown patch on row " + std::to_string(r + 1));
    }
    double v = 0.0;
    try {
      std::size_t used = 0;
      v = std::stod(row[rate], &used);
      if (used != row[rate].size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      fail(Errc::validation, "rate csv: bad rate on row " + std::to_string(r + 1));
    }
    alpha(a->second, b->second) += v;
  }
  alpha.validate();
  return alpha;
}

}  // namespace vbrisk::flux
