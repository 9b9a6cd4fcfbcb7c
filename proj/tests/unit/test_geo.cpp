#include <gtest/gtest.h>

#include <cmath>
#include <thread>

#include "oracles.hpp"
#include "support.hpp"
#include "vbrisk/error.hpp"
#include "vbrisk/geo.hpp"
#include "vbrisk/geojson.hpp"
#include "vbrisk/random.hpp"

using namespace vbrisk;
using namespace vbrisk::geo;
using testing_support::box;

TEST(Geo, HaversineKnownDistances) {
  EXPECT_EQ(haversine_m({10, 20}, {10, 20}), 0.0);
  // one degree of latitude on the sphere
  EXPECT_NEAR(haversine_m({0, 0}, {1, 0}), kEarthRadiusM * M_PI / 180.0, 1e-6);
  EXPECT_NEAR(haversine_m({0, 0}, {0, 180}), kEarthRadiusM * M_PI, 1e-6);
}

TEST(Geo, HaversineSymmetryAndTriangle) {
  Rng rng(7);
  for (int i = 0; i < 2000; ++i) {
    GeoPoint a{rng.uniform(-89, 89), rng.uniform(-180, 179.9)};
    GeoPoint b{rng.uniform(-89, 89), rng.uniform(-180, 179.9)};
    GeoPoint c{rng.uniform(-89, 89), rng.uniform(-180, 179.9)};
    EXPECT_EQ(haversine_m(a, b), haversine_m(b, a));
    const double ab = haversine_m(a, b), bc = haversine_m(b, c), ac = haversine_m(a, c);
    EXPECT_LE(ac, (ab + bc) * (1 + 1e-6));
  }
}

TEST(Geo, HaversineMatchesOracle) {
  Rng rng(8);
  for (int i = 0; i < 500; ++i) {
    GeoPoint a{rng.uniform(-80, 80), rng.uniform(-180, 179)};
    GeoPoint b{rng.uniform(-80, 80), rng.uniform(-180, 179)};
    EXPECT_NEAR(haversine_m(a, b), oracle::great_circle_m({a.lat, a.lon}, {b.lat, b.lon}), 1e-6);
  }
}

TEST(Geo, DestinationTravelsRequestedDistance) {
  Rng rng(9);
  for (int i = 0; i < 200; ++i) {
    GeoPoint o{rng.uniform(-60, 60), rng.uniform(-170, 170)};
    const double d = rng.uniform(1, 5000);
    EXPECT_NEAR(haversine_m(o, destination(o, rng.uniform(0, 360), d)), d, 1e-6);
  }
}

TEST(Geo, PointInUnitSquare) {
  const Polygon sq = box(0, 0, 1, 1);
  EXPECT_TRUE(point_in_polygon({0.5, 0.5}, sq));
  EXPECT_FALSE(point_in_polygon({2.0, 0.5}, sq));
  EXPECT_FALSE(point_in_polygon({0.5, -0.1}, sq));
}

TEST(Geo, BoundaryCountsAsInside) {
  const Polygon sq = box(0, 0, 1, 1);
  EXPECT_TRUE(point_in_polygon({0.0, 0.5}, sq));
  EXPECT_TRUE(point_in_polygon({1.0, 1.0}, sq));
  EXPECT_TRUE(point_in_polygon({0.5, 1.0}, sq));
}

TEST(Geo, HoleIsExcluded) {
  Polygon p = box(0, 0, 10, 10);
  p.rings.push_back(box(4, 4, 6, 6).rings[0]);
  EXPECT_FALSE(point_in_polygon({5, 5}, p));
  EXPECT_TRUE(point_in_polygon({2, 2}, p));
}

TEST(Geo, DegenerateRingThrows) {
  Polygon p{{{{0, 0}, {1, 1}}}};
  try {
    point_in_polygon({0, 0}, p);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::malformed_geometry);
  }
}

TEST(Geo, PointInPolygonMatchesRayCastOracle) {
  Rng rng(11);
  for (int shape = 0; shape < 50; ++shape) {
    // random star-shaped polygon around a centre
    const GeoPoint c{rng.uniform(-40, 40), rng.uniform(-100, 100)};
    const int n = static_cast<int>(rng.between(3, 12));
    Ring ring;
    std::vector<oracle::LatLon> oring;
    for (int k = 0; k < n; ++k) {
      const double ang = 2 * M_PI * (k + rng.uniform(0.05, 0.95)) / n;
      const double r = rng.uniform(0.2, 2.0);
      ring.push_back({c.lat + r * std::sin(ang), c.lon + r * std::cos(ang)});
      oring.push_back({ring.back().lat, ring.back().lon});
    }
    const Polygon poly{{ring}};
    for (int i = 0; i < 100; ++i) {
      const GeoPoint p{c.lat + rng.uniform(-2.5, 2.5), c.lon + rng.uniform(-2.5, 2.5)};
      EXPECT_EQ(point_in_polygon(p, poly), oracle::ray_cast_inside({p.lat, p.lon}, {oring}));
    }
  }
}

TEST(Geo, SelfIntersectionDetected) {
  const Polygon bowtie{{{{0, 0}, {1, 1}, {0, 1}, {1, 0}}}};
  EXPECT_TRUE(has_self_intersection(bowtie));
  EXPECT_FALSE(has_self_intersection(box(0, 0, 1, 1)));
}

TEST(Geo, LocateSingleNoneAndOverlap) {
  std::vector<Region> regions{{"b", "B", box(0, 0, 2, 2)}, {"a", "A", box(1, 1, 3, 3)},
                              {"c", "C", box(10, 10, 11, 11)}};
  EXPECT_EQ(locate({0.5, 0.5}, regions), "b");
  EXPECT_EQ(locate({10.5, 10.5}, regions), "c");
  EXPECT_EQ(locate({50, 50}, regions), std::nullopt);
  // overlapping: smallest id wins
  EXPECT_EQ(locate({1.5, 1.5}, regions), "a");
  const RegionIndex idx(regions);
  EXPECT_EQ(idx.locate_all({1.5, 1.5}).size(), 2u);
}

TEST(Geo, LocateDeterministicAcrossThreads) {
  std::vector<Region> regions;
  for (int i = 0; i < 20; ++i) {
    regions.push_back({"r" + std::to_string(i), "", box(i, 0, i + 1, 1)});
  }
  const RegionIndex idx(regions);
  Rng rng(3);
  std::vector<GeoPoint> pts;
  for (int i = 0; i < 2000; ++i) pts.push_back({rng.uniform(-1, 21), rng.uniform(-0.5, 1.5)});
  std::vector<std::optional<std::string>> serial;
  for (const auto& p : pts) serial.push_back(idx.locate(p));
  std::vector<std::optional<std::string>> threaded(pts.size());
  std::vector<std::thread> workers;
  for (int t = 0; t < 4; ++t) {
    workers.emplace_back([&, t] {
      for (std::size_t i = t; i < pts.size(); i += 4) threaded[i] = idx.locate(pts[i]);
    });
  }
  for (auto& w : workers) w.join();
  EXPECT_EQ(serial, threaded);
}

TEST(Geo, PatchValidation) {
  Patch p{"x", "X", box(0, 0, 1, 1), 0.0, 1.0};
  EXPECT_THROW(p.validate(), Error);
  p.human_population = 10;
  EXPECT_NO_THROW(p.validate());
  p.vector_capacity = -1;
  EXPECT_THROW(p.validate(), Error);
}

TEST(GeoJson, LoadsPatchesWithDefaults) {
  const std::string text = R"({"type":"FeatureCollection","features":[
    {"type":"Feature","properties":{"id":"A","name":"Alpha","population":1000},
     "geometry":{"type":"Polygon","coordinates":[[[0,0],[1,0],[1,1],[0,1],[0,0]]]}},
    {"type":"Feature","properties":{"id":"B","population":50,"vector_capacity":7},
     "geometry":{"type":"MultiPolygon","coordinates":[[[[2,2],[3,2],[3,3],[2,3]]]]}}]})";
  const auto patches = patches_from_geojson(text);
  ASSERT_EQ(patches.size(), 2u);
  EXPECT_EQ(patches[0].name, "Alpha");
  EXPECT_DOUBLE_EQ(patches[0].vector_capacity, 1500.0);
  EXPECT_EQ(patches[1].name, "B");
  EXPECT_DOUBLE_EQ(patches[1].vector_capacity, 7.0);
  // GeoJSON order is lon, lat
  EXPECT_TRUE(point_in_polygon({0.5, 0.9}, patches[0].geometry));
}

TEST(GeoJson, RejectsDuplicatesAndMissingPopulation) {
  const std::string dup = R"({"type":"FeatureCollection","features":[
    {"type":"Feature","properties":{"id":"A"},"geometry":{"type":"Polygon","coordinates":[[[0,0],[1,0],[1,1]]]}},
    {"type":"Feature","properties":{"id":"A"},"geometry":{"type":"Polygon","coordinates":[[[0,0],[1,0],[1,1]]]}}]})";
  EXPECT_THROW(regions_from_geojson(dup), Error);
  const std::string nopop = R"({"type":"FeatureCollection","features":[
    {"type":"Feature","properties":{"id":"A"},"geometry":{"type":"Polygon","coordinates":[[[0,0],[1,0],[1,1]]]}}]})";
  EXPECT_THROW(patches_from_geojson(nopop), Error);
}

TEST(GeoJson, FixtureNeighborhoodsLoad) {
  const auto nb = load_regions(testing_support::fixture("g1/neighborhoods.geojson").string());
  EXPECT_EQ(nb.size(), 10u);
  const auto zones = load_patches(testing_support::fixture("g1/zones.geojson").string());
  EXPECT_EQ(zones.size(), 4u);
}
