#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "vbrisk/geo.hpp"
#include "vbrisk/ingest.hpp"

namespace vbrisk::coarsegeo {
struct ZoneModel;
}

namespace vbrisk::flux {

/// Zones a user was observed in.
struct VisitSet {
  std::string user_id;
  std::set<std::string> zones_visited;

  friend bool operator==(const VisitSet&, const VisitSet&) = default;
};

struct VisitSetOptions {
  bool use_geo = true;
  bool use_text = true;
  double min_confidence = 0.5;  // text predictions below this are ignored
};

/// Geo-tagged events map through point-in-polygon over `zones`; text-only
/// events map through the zone classifier when `model` is given and its
/// confidence reaches `min_confidence`. An event carrying both uses its
/// geo-tag. Users with no locatable event are omitted. Output is sorted by
/// user id, so it does not depend on event order.
std::vector<VisitSet> build_visit_sets(std::span<const ingest::ActivityEvent> events,
                                       const geo::RegionIndex& zones,
                                       const coarsegeo::ZoneModel* model,
                                       const VisitSetOptions& options = {});

/// Persons per day into each destination patch, aligned with `dest_patches`.
struct SourceFlux {
  std::vector<std::string> dest_patches;
  std::vector<double> persons_per_day;
  std::vector<std::size_t> user_counts;  // |{u in U : patch in u}|
  std::size_t sample_size = 0;           // |U|
};

/// U = users whose set holds `source_zone` and at least one destination.
/// flux_i = |{u in U : i in u}| / |U| * air_volume. A user visiting k
/// destinations counts toward all k, so the fluxes may sum above air_volume.
/// Throws Errc::empty_sample when U is empty and Errc::validation for a
/// negative volume.
SourceFlux estimate_source_flux(std::span<const VisitSet> visit_sets,
                                const std::string& source_zone,
                                std::span<const std::string> dest_patches, double air_volume);

/// Z x Z per-capita movement rates (1/day); alpha(i, j) is the rate from
/// patch i to patch j. Entries are non-negative and the diagonal is zero.
class FluxMatrix {
 public:
  FluxMatrix() = default;
  explicit FluxMatrix(std::size_t patches) : n_(patches), a_(patches * patches, 0.0) {}

  std::size_t size() const noexcept { return n_; }
  double operator()(std::size_t from, std::size_t to) const { return a_[from * n_ + to]; }
  double& operator()(std::size_t from, std::size_t to) { return a_[from * n_ + to]; }

  /// Throws Errc::validation on negative / non-finite entries or a non-zero diagonal.
  void validate() const;

 private:
  std::size_t n_ = 0;
  std::vector<double> a_;
};

/// alpha(source, i) = flux_i / N_source; with return factor rho,
/// alpha(i, source) = rho * flux_i / N_i. Patches absent from `flux` get no
/// edge. Throws Errc::validation for a non-positive source population, an
/// unknown patch id, or rho outside [0, 1].
FluxMatrix to_rate_matrix(const SourceFlux& flux, std::span<const geo::Patch> patches,
                          const std::string& source_patch, double return_factor = 1.0);

/// CSV `from,to,rate_per_day` for the persons/day vector.
void write_source_flux_csv(const std::string& path, const std::string& source_zone,
                           const SourceFlux& flux);

/// CSV `from,to,rate_per_day` listing the non-zero per-capita rates.
std::string format_rate_csv(const FluxMatrix& alpha, std::span<const geo::Patch> patches);
void write_rate_csv(const std::string& path, const FluxMatrix& alpha,
                    std::span<const geo::Patch> patches);
FluxMatrix load_rate_csv(const std::string& path, std::span<const geo::Patch> patches);

}  // namespace vbrisk::flux
