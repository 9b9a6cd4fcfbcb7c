#include <gtest/gtest.h>

#include <algorithm>

#include "support.hpp"
#include "vbrisk/coarsegeo.hpp"
#include "vbrisk/epimodel.hpp"
#include "vbrisk/error.hpp"
#include "vbrisk/flux.hpp"
#include "vbrisk/random.hpp"

using namespace vbrisk;
using namespace vbrisk::flux;
namespace ts = testing_support;

namespace {

std::vector<geo::Patch> three_zones() {
  return {{"A", "A", ts::box(2, 0, 3, 1), 1000, 1500},
          {"B", "B", ts::box(4, 0, 5, 1), 500, 750},
          {"PR", "PR", ts::box(0, 0, 1, 1), 1e6, 1.5e6}};
}

// each marker word pulls hard towards one zone; "mixword" is uninformative
coarsegeo::ZoneModel marker_model() {
  coarsegeo::ZoneModel m;
  m.tokens = {"aword", "bword", "prword", "mixword"};
  for (std::uint32_t i = 0; i < m.tokens.size(); ++i) m.vocabulary[m.tokens[i]] = i;
  m.idf = {1, 1, 1, 1};
  m.labels = {"A", "B", "PR"};
  m.weights = {{10, 0, 0, 1}, {0, 10, 0, 1}, {0, 0, 10, 1}};
  m.intercepts = {0, 0, 0};
  m.priors = {1.0 / 3, 1.0 / 3, 1.0 / 3};
  return m;
}

VisitSet vs(const std::string& u, std::set<std::string> z) { return {u, std::move(z)}; }

}  // namespace

TEST(VisitSets, GeoOnlyUser) {
  const auto zones = three_zones();
  const geo::RegionIndex index(zones);
  const std::vector<ingest::ActivityEvent> ev{ts::geo_event("u", 0.5, 0.5), ts::geo_event("u", 2.5, 0.5)};
  EXPECT_EQ(build_visit_sets(ev, index, nullptr), (std::vector<VisitSet>{vs("u", {"A", "PR"})}));
}

TEST(VisitSets, LowConfidenceTextOmitted) {
  const auto zones = three_zones();
  const geo::RegionIndex index(zones);
  const auto model = marker_model();
  const std::vector<ingest::ActivityEvent> ev{ts::text_event("u", "aword")};
  EXPECT_EQ(build_visit_sets(ev, index, &model, {.min_confidence = 0.9}).size(), 1u);
  const std::vector<ingest::ActivityEvent> weak{ts::text_event("u", "mixword")};
  EXPECT_TRUE(build_visit_sets(weak, index, &model, {.min_confidence = 0.9}).empty());
}

TEST(VisitSets, TwentyUserHandLabeledFixture) {
  using ts::geo_event;
  using ts::text_event;
  const auto zones = three_zones();
  const geo::RegionIndex index(zones);
  const auto model = marker_model();
  auto both = [](std::string u, double lat, std::string text) {
    auto e = ts::geo_event(u, lat, 0.5);
    e.text = std::move(text);
    return e;
  };
  const std::vector<ingest::ActivityEvent> events{
      geo_event("u01", 0.5, 0.5), geo_event("u01", 2.5, 0.5),
      geo_event("u02", 0.5, 0.5), geo_event("u02", 2.5, 0.5), geo_event("u02", 4.5, 0.5),
      geo_event("u03", 2.2, 0.2),
      text_event("u04", "prword"), geo_event("u04", 2.5, 0.5),
      text_event("u05", "mixword"),
      geo_event("u06", 8.0, 8.0),
      geo_event("u07", 8.0, 8.0), text_event("u07", "bword"),
      both("u08", 2.5, "bword"),
      geo_event("u09", 0.1, 0.1), geo_event("u09", 0.9, 0.9),
      text_event("u10", "aword aword"), text_event("u10", "prword"),
      geo_event("u11", 4.0, 0.0),  // corner: boundary counts as inside
      text_event("u12", "mixword prword"),
      geo_event("u13", 3.0, 0.5),  // shared edge between nothing and A
      geo_event("u14", 3.5, 0.5),  // gap between A and B
      text_event("u15", "BWORD"), text_event("u15", "unknown words"),
      geo_event("u16", 4.5, 0.5), text_event("u16", "prword"), text_event("u16", "mixword"),
      text_event("u17", ""),
      both("u18", 9.0, "prword"),  // geo wins even when outside all zones
      geo_event("u19", 0.5, 0.5), geo_event("u19", 0.5, 0.5),
      geo_event("u20", 2.5, 0.5), text_event("u20", "prword"), geo_event("u20", 4.5, 0.5),
  };
  const std::vector<VisitSet> want{
      vs("u01", {"A", "PR"}),       vs("u02", {"A", "B", "PR"}), vs("u03", {"A"}),
      vs("u04", {"A", "PR"}),       vs("u07", {"B"}),            vs("u08", {"A"}),
      vs("u09", {"PR"}),            vs("u10", {"A", "PR"}),      vs("u11", {"B"}),
      vs("u12", {"PR"}),            vs("u13", {"A"}),            vs("u15", {"B"}),
      vs("u16", {"B", "PR"}),       vs("u19", {"PR"}),           vs("u20", {"A", "B", "PR"}),
  };
  const auto got = build_visit_sets(events, index, &model, {.min_confidence = 0.5});
  EXPECT_EQ(got, want);

  auto reversed = events;
  std::reverse(reversed.begin(), reversed.end());
  EXPECT_EQ(build_visit_sets(reversed, index, &model, {.min_confidence = 0.5}), want);
}

TEST(SourceFlux, SingleCountyGetsEverything) {
  const std::vector<VisitSet> v{vs("a", {"PR", "C"}), vs("b", {"PR", "C"})};
  const std::vector<std::string> dests{"C", "D"};
  const auto f = estimate_source_flux(v, "PR", dests, 700);
  EXPECT_EQ(f.persons_per_day, (std::vector<double>{700, 0}));
}

TEST(SourceFlux, TwoUserWorkedExample) {
  const std::vector<VisitSet> v{vs("u1", {"PR", "A"}), vs("u2", {"PR", "A", "B"}), vs("u3", {"A"})};
  const std::vector<std::string> dests{"A", "B"};
  const auto f = estimate_source_flux(v, "PR", dests, 1000);
  EXPECT_EQ(f.sample_size, 2u);
  EXPECT_EQ(f.persons_per_day[0], 1000.0);
  EXPECT_EQ(f.persons_per_day[1], 500.0);
  EXPECT_EQ(f.user_counts, (std::vector<std::size_t>{2, 1}));
}

TEST(SourceFlux, ZeroVolumeAndEmptySample) {
  const std::vector<VisitSet> v{vs("u1", {"PR", "A"})};
  const std::vector<std::string> dests{"A"};
  EXPECT_EQ(estimate_source_flux(v, "PR", dests, 0).persons_per_day[0], 0.0);
  const std::vector<VisitSet> none{vs("u1", {"A"}), vs("u2", {"PR"})};
  try {
    estimate_source_flux(none, "PR", dests, 10);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::empty_sample);
  }
  EXPECT_THROW(estimate_source_flux(v, "PR", dests, -1), Error);
}

TEST(SourceFlux, ScalingAndReorderProperties) {
  Rng rng(12);
  const std::vector<std::string> dests{"A", "B", "C", "D"};
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<VisitSet> v;
    for (int u = 0; u < 40; ++u) {
      VisitSet s{"u" + std::to_string(u), {}};
      if (rng.bernoulli(0.7)) s.zones_visited.insert("PR");
      for (const auto& d : dests) {
        if (rng.bernoulli(0.3)) s.zones_visited.insert(d);
      }
      v.push_back(s);
    }
    v.push_back(vs("anchor", {"PR", "A"}));
    const double vol = rng.uniform(1, 5000);
    const double c = rng.uniform(0.1, 10);
    const auto base = estimate_source_flux(v, "PR", dests, vol);
    const auto scaled = estimate_source_flux(v, "PR", dests, c * vol);
    rng.shuffle(std::span<VisitSet>(v));
    const auto shuffled = estimate_source_flux(v, "PR", dests, vol);
    EXPECT_EQ(shuffled.persons_per_day, base.persons_per_day);
    for (std::size_t i = 0; i < dests.size(); ++i) {
      const double frac = static_cast<double>(base.user_counts[i]) / static_cast<double>(base.sample_size);
      EXPECT_GE(frac, 0.0);
      EXPECT_LE(frac, 1.0);
      EXPECT_EQ(base.persons_per_day[i], frac * vol);
      EXPECT_EQ(scaled.persons_per_day[i], frac * (c * vol));
    }
  }
}

TEST(RateMatrix, PerCapitaDivision) {
  std::vector<geo::Patch> patches{{"PR", "PR", ts::box(0, 0, 1, 1), 1e6, 0},
                                  {"A", "A", ts::box(2, 0, 3, 1), 2e5, 0}};
  SourceFlux f{{"A"}, {100.0}, {1}, 1};
  const auto a = to_rate_matrix(f, patches, "PR", 0.5);
  EXPECT_DOUBLE_EQ(a(0, 1), 1e-4);
  EXPECT_DOUBLE_EQ(a(1, 0), 0.5 * 100.0 / 2e5);
  EXPECT_EQ(a(0, 0), 0.0);
  const auto none = to_rate_matrix(f, patches, "PR", 0.0);
  EXPECT_EQ(none(1, 0), 0.0);
  EXPECT_THROW(to_rate_matrix(f, patches, "PR", 1.5), Error);
  EXPECT_THROW(to_rate_matrix(f, patches, "XX", 1.0), Error);
}

TEST(RateMatrix, ReturnFlowConservesPopulation) {
  auto patches = three_zones();
  std::rotate(patches.begin(), patches.begin() + 2, patches.end());  // PR first
  SourceFlux f{{"A", "B"}, {120.0, 45.0}, {1, 1}, 1};
  auto alpha = to_rate_matrix(f, patches, "PR", 1.0);
  const epi::PatchGraph graph(patches, alpha);
  auto state = epi::disease_free_state(graph);
  epi::seed_prevalence(state, graph, 0, 0.01, 0.18);
  const double before = state.total_humans();
  for (int day = 0; day < 3650; ++day) state = epi::step_rk4(state, graph, {}, 0.1);
  EXPECT_LE(std::abs(state.total_humans() - before) / before, 1e-6);
}

TEST(RateMatrix, CsvRoundTrip) {
  const auto patches = three_zones();
  SourceFlux f{{"A", "B"}, {120.0, 45.0}, {1, 1}, 1};
  const auto a = to_rate_matrix(f, patches, "PR", 0.7);
  const auto dir = ts::scratch_dir("rates");
  write_rate_csv((dir / "r.csv").string(), a, patches);
  const auto back = load_rate_csv((dir / "r.csv").string(), patches);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(back(i, j), a(i, j));
}

TEST(RateMatrix, ValidateRejectsBadEntries) {
  FluxMatrix m(2);
  m(0, 0) = 1.0;
  EXPECT_THROW(m.validate(), Error);
  m(0, 0) = 0.0;
  m(0, 1) = -1.0;
  EXPECT_THROW(m.validate(), Error);
}
