#include <gtest/gtest.h>

#include <algorithm>

#include "oracles.hpp"
#include "support.hpp"
#include "vbrisk/error.hpp"
#include "vbrisk/ingest.hpp"
#include "vbrisk/random.hpp"

using namespace vbrisk;
using namespace vbrisk::ingest;
namespace ts = testing_support;

TEST(Events, EmptyInput) {
  const auto r = parse_events("");
  EXPECT_TRUE(r.events.empty());
  EXPECT_EQ(r.rejected, 0u);
}

TEST(Events, ThreeValidOneMissingBoth) {
  const std::string text =
      R"({"user_id":"a","ts":"2016-01-01T00:00:00Z","lat":1.5,"lon":2.5}
{"user_id":"b","ts":"2016-01-01T00:00:01Z","text":"hola"}
{"user_id":"c","ts":"2016-01-01T00:00:02Z"}
{"user_id":"d","ts":"2016-01-01T00:00:03Z","lat":1,"lon":2,"text":"x"}
)";
  const auto r = parse_events(text);
  ASSERT_EQ(r.events.size(), 3u);
  EXPECT_EQ(r.rejected, 1u);
  EXPECT_EQ(r.rejected_lines, std::vector<std::size_t>{3});
  EXPECT_EQ(r.events[0].user_id, "a");
  EXPECT_EQ(r.events[1].user_id, "b");
  EXPECT_EQ(r.events[2].user_id, "d");
}

TEST(Events, MostlyMalformedIsFormatError) {
  const std::string text = "{bad\n{\"user_id\":\"a\"}\n{\"user_id\":\"b\",\"ts\":\"2016-01-01T00:00:00Z\",\"text\":\"t\"}\n";
  try {
    parse_events(text);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::format);
  }
}

TEST(Events, UnreadableFileIsIoError) {
  try {
    load_events("/nonexistent/dir/events.jsonl");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::io);
  }
}

TEST(Events, WriteThenLoadIdentity) {
  Rng rng(21);
  std::vector<ActivityEvent> events;
  for (int i = 0; i < 100; ++i) {
    ActivityEvent e;
    e.user_id = "user" + std::to_string(rng.below(10));
    e.timestamp = Timestamp{std::chrono::seconds{1451606400 + static_cast<long>(rng.below(31536000))}};
    const auto kind = rng.below(3);
    if (kind != 1) e.geo = geo::GeoPoint{rng.uniform(-60, 60), rng.uniform(-179, 179)};
    if (kind != 0) e.text = "w" + std::to_string(rng.below(1000)) + " \"quoted\", and ünïcode";
    events.push_back(e);
  }
  const auto dir = ts::scratch_dir("events_roundtrip");
  write_events((dir / "e.jsonl").string(), events);
  const auto back = load_events((dir / "e.jsonl").string());
  EXPECT_EQ(back.rejected, 0u);
  EXPECT_EQ(back.events, events);
}

TEST(Profiles, RoundTripWithUnknown) {
  const auto dir = ts::scratch_dir("profiles");
  const std::vector<UserProfile> p{{"a", "PR"}, {"b", std::nullopt}, {"c,d", "FL"}};
  write_profiles((dir / "p.csv").string(), p);
  const auto back = load_profiles((dir / "p.csv").string());
  ASSERT_EQ(back.size(), 3u);
  EXPECT_EQ(back[0].profile_home, "PR");
  EXPECT_FALSE(back[1].profile_home);
  EXPECT_EQ(back[2].user_id, "c,d");
}

TEST(Graph, RoundTripMergesRepeatedUsers) {
  const auto dir = ts::scratch_dir("graph");
  const std::string text = "{\"user\":\"a\",\"followers\":[\"b\"]}\n{\"user\":\"a\",\"followers\":[\"c\"]}\n";
  ts::fs::path p = dir / "g.jsonl";
  {
    std::ofstream(p) << text;
  }
  const auto g = load_graph(p.string());
  ASSERT_TRUE(g.contains("a"));
  auto f = g.followers.at("a");
  std::sort(f.begin(), f.end());
  EXPECT_EQ(f, (std::vector<std::string>{"b", "c"}));
  write_graph((dir / "g2.jsonl").string(), g);
  EXPECT_EQ(load_graph((dir / "g2.jsonl").string()).followers.at("a").size(), 2u);
}

namespace {
KeepPredicate keep_set(std::set<std::string> s) {
  return [s = std::move(s)](const std::string& u) { return s.count(u) != 0; };
}
}  // namespace

TEST(Snowball, SeedWithoutFollowers) {
  SocialGraph g;
  g.followers["s"] = {};
  const std::vector<std::string> seeds{"s"};
  EXPECT_EQ(snowball_sample(g, seeds, keep_set({"s"})), (std::set<std::string>{"s"}));
}

TEST(Snowball, ChainStopsAtUnkeptFollower) {
  // s -> a -> b: a follows s, b follows a; a is kept, b is not
  SocialGraph g;
  g.followers["s"] = {"a"};
  g.followers["a"] = {"b"};
  g.followers["b"] = {"c"};
  const std::vector<std::string> seeds{"s"};
  EXPECT_EQ(snowball_sample(g, seeds, keep_set({"s", "a"})), (std::set<std::string>{"s", "a", "b"}));
}

TEST(Snowball, SelfEdgesIgnored) {
  SocialGraph g;
  g.followers["s"] = {"s", "a"};
  const std::vector<std::string> seeds{"s"};
  EXPECT_EQ(snowball_sample(g, seeds, keep_set({"s"})), (std::set<std::string>{"s", "a"}));
}

TEST(Snowball, BadSeedsAreConfigErrors) {
  SocialGraph g;
  g.followers["s"] = {};
  const std::vector<std::string> unknown{"zz"};
  try {
    snowball_sample(g, unknown, keep_set({"zz"}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::config);
  }
  const std::vector<std::string> unkept{"s"};
  EXPECT_THROW(snowball_sample(g, unkept, keep_set({})), Error);
}

TEST(Snowball, MatchesBfsOracleAndIsPermutationInvariant) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const int n = 200;
    SocialGraph g;
    std::set<std::string> kept;
    for (int i = 0; i < n; ++i) {
      const std::string u = "u" + std::to_string(i);
      g.followers[u];
      if (rng.bernoulli(0.6)) kept.insert(u);
    }
    for (int e = 0; e < 500; ++e) {
      g.followers["u" + std::to_string(rng.below(n))].push_back("u" + std::to_string(rng.below(n)));
    }
    std::vector<std::string> seeds;
    for (const auto& k : kept) {
      if (seeds.size() < 3) seeds.push_back(k);
    }
    const auto keep = keep_set(kept);
    const auto got = snowball_sample(g, seeds, keep);
    const auto want = oracle::bfs_snowball(g.followers, seeds, [&](const std::string& u) { return kept.count(u) != 0; });
    EXPECT_EQ(got, want) << "seed " << seed;

    SocialGraph shuffled = g;
    for (auto& [u, f] : shuffled.followers) rng.shuffle(std::span<std::string>(f));
    EXPECT_EQ(snowball_sample(shuffled, seeds, keep), got);
  }
}

TEST(Snowball, ProfilePredicate) {
  const std::vector<UserProfile> profiles{{"a", "PR"}, {"b", "FL"}, {"c", std::nullopt}};
  const auto keep = profile_home_in(profiles, {"PR"});
  EXPECT_TRUE(keep("a"));
  EXPECT_FALSE(keep("b"));
  EXPECT_FALSE(keep("c"));
  EXPECT_FALSE(keep("unknown"));
}

TEST(AirTraffic, SingleRowAndDuplicates) {
  EXPECT_DOUBLE_EQ(parse_air_traffic("source,dest_region,persons_per_day\nPR,FL,1000\n").volume("PR", "FL"), 1000.0);
  const auto a = parse_air_traffic("source,dest_region,persons_per_day\nPR,FL,1000\nPR,FL,250\nPR,NY,5\n");
  EXPECT_DOUBLE_EQ(a.volume("PR", "FL"), 1250.0);
  EXPECT_DOUBLE_EQ(a.total_from("PR"), 1255.0);
  EXPECT_DOUBLE_EQ(a.volume("PR", "TX"), 0.0);
}

TEST(AirTraffic, ValidationErrors) {
  for (const char* bad : {"source,dest_region\nPR,FL\n", "source,dest_region,persons_per_day\nPR,FL,-1\n",
                          "source,dest_region,persons_per_day\nPR,FL,lots\n"}) {
    try {
      parse_air_traffic(bad);
      FAIL() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::validation) << bad;
    }
  }
}
