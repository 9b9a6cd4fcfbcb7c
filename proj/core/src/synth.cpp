#include "vbrisk/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "json_io.hpp"
#include "vbrisk/error.hpp"
#include "vbrisk/geojson.hpp"
#include "vbrisk/random.hpp"

namespace vbrisk::synth {
namespace {

using detail::json;
using detail::ordered_json;

constexpr double kHomeJitterM = 50.0;

const std::vector<std::string>& filler_words() {
  static const std::vector<std::string> words{
      "the", "a",    "today", "great", "love",  "day", "time", "going", "with",   "friends",
      "so",  "good", "now",   "just",  "fun",   "new", "see",  "night", "family", "happy"};
  return words;
}

geo::GeoPoint sample_in(const geo::Polygon& poly, Rng& rng, const std::string& what) {
  const auto b = poly.bounds();
  for (int attempt = 0; attempt < 10000; ++attempt) {
    const geo::GeoPoint p{rng.uniform(b.min_lat, b.max_lat), rng.uniform(b.min_lon, b.max_lon)};
    if (geo::point_in_polygon(p, poly)) return p;
  }
  fail(Errc::config, "synth: cannot place points inside '" + what + "'");
}

// Uniform in a disc of the given radius (slightly shrunk so the bound holds
// after rounding in destination()).
geo::GeoPoint jitter(const geo::GeoPoint& c, double radius_m, Rng& rng) {
  const double d = radius_m * 0.999 * std::sqrt(rng.uniform());
  return geo::destination(c, rng.uniform(0.0, 360.0), d);
}

std::vector<std::string> make_vocabulary(const std::string& zone, std::size_t count,
                                         std::set<std::string>& taken, std::uint64_t seed) {
  static const std::vector<std::string> syllables{"ka", "lo", "mi", "ra", "to", "ne", "su", "pa",
                                                  "ve", "di", "zo", "ba", "ri", "fe", "gu", "ho",
                                                  "ju", "ce", "wa", "ny"};
  std::uint64_t h = seed;
  for (char c : zone) h = Rng::mix(h ^ static_cast<unsigned char>(c));
  Rng rng(h);
  std::vector<std::string> out;
  while (out.size() < count) {
    std::string w;
    const auto n = rng.between(2, 4);
    for (std::int64_t k = 0; k < n; ++k) w += syllables[rng.below(syllables.size())];
    if (taken.insert(w).second) out.push_back(std::move(w));
  }
  return out;
}

std::string make_text(const std::vector<std::string>& vocab, Rng& rng,
                      const std::vector<std::string>* noise = nullptr) {
  std::vector<std::string> words;
  const auto zone_words = rng.between(2, 4);
  for (std::int64_t k = 0; k < zone_words; ++k) words.push_back(vocab[rng.below(vocab.size())]);
  const auto fillers = rng.between(2, 4);
  for (std::int64_t k = 0; k < fillers; ++k) {
    words.push_back(filler_words()[rng.below(filler_words().size())]);
  }
  if (noise && !noise->empty()) words.push_back((*noise)[rng.below(noise->size())]);
  rng.shuffle(std::span<std::string>(words));
  std::string text;
  for (const auto& w : words) {
    if (!text.empty()) text += ' ';
    text += w;
  }
  return text;
}

Timestamp local_instant(const SynthConfig& cfg, std::int64_t day, int hour, Rng& rng) {
  const std::int64_t local = (cfg.start_day + day) * 86400 + hour * 3600 +
                             static_cast<std::int64_t>(rng.below(3600));
  const auto utc = local - static_cast<std::int64_t>(std::llround(cfg.utc_offset_hours * 3600.0));
  return Timestamp(std::chrono::seconds(utc));
}

bool weekend_day(const SynthConfig& cfg, std::int64_t day) {
  // 1970-01-01 was a Thursday.
  const std::int64_t wd = ((cfg.start_day + day) % 7 + 7 + 4) % 7;  // 0 = Sunday
  return wd == 0 || wd == 6;
}

double weight_of(const std::map<std::string, double>& weights, const std::string& id) {
  const auto it = weights.find(id);
  return it == weights.end() ? 1.0 : it->second;
}

struct Place {
  geo::GeoPoint point;
  std::optional<std::string> neighborhood;
};

}  // namespace

void SynthConfig::validate() const {
  auto fraction = [](double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0)) fail(Errc::config, fmt::format("synth: {} must lie in [0, 1]", name));
  };
  fraction(home_rate, "home_rate");
  fraction(travel_fraction, "travel_fraction");
  fraction(source_resident_fraction, "source_resident_fraction");
  fraction(neighborhood_home_fraction, "neighborhood_home_fraction");
  fraction(neighborhood_visit_fraction, "neighborhood_visit_fraction");
  fraction(profile_missing_fraction, "profile_missing_fraction");
  if (n_users == 0) fail(Errc::config, "synth: n_users must be > 0");
  if (min_geo_events < 5 || max_geo_events < min_geo_events) {
    fail(Errc::config, "synth: need 5 <= min_geo_events <= max_geo_events");
  }
  if (max_text_events < min_text_events) fail(Errc::config, "synth: min_text_events > max_text_events");
  if (span_days == 0) fail(Errc::config, "synth: span_days must be > 0");
  if (max_events_per_user && *max_events_per_user == 0) fail(Errc::config, "synth: max_events_per_user must be > 0");
  if (words_per_zone == 0) fail(Errc::config, "synth: words_per_zone must be > 0");
  if (zones.size() < 2) fail(Errc::config, "synth: need the source zone and at least one other zone");
  bool has_source = false;
  for (const auto& z : zones) has_source = has_source || z.id == source_zone;
  if (!has_source) fail(Errc::config, "synth: source zone '" + source_zone + "' is not among the zones");
  if (!neighborhoods.empty()) {
    const bool known = std::any_of(zones.begin(), zones.end(),
                                   [&](const geo::Patch& z) { return z.id == neighborhood_zone; });
    if (!known) fail(Errc::config, "synth: neighborhood_zone '" + neighborhood_zone + "' is not a zone");
  }
  for (const auto& [zone, words] : vocabulary_per_zone) {
    if (words.empty()) fail(Errc::config, "synth: empty vocabulary for zone '" + zone + "'");
  }
}

SynthOutput synth_generate(const SynthConfig& cfg) {
  cfg.validate();
  Rng root(cfg.seed);
  SynthOutput out;

  // Vocabulary: configured lists first; generated words depend only on the
  // zone id (not the seed) and avoid clashing with configured ones.
  std::map<std::string, std::vector<std::string>> vocab = cfg.vocabulary_per_zone;
  std::set<std::string> taken;
  for (const auto& [zone, words] : vocab) taken.insert(words.begin(), words.end());
  for (const auto& f : filler_words()) taken.insert(f);
  for (const auto& z : cfg.zones) {
    if (!vocab.count(z.id)) vocab[z.id] = make_vocabulary(z.id, cfg.words_per_zone, taken, 0);
  }

  std::vector<const geo::Patch*> others;
  std::vector<double> other_weights;
  const geo::Patch* source = nullptr;
  const geo::Patch* metro = nullptr;
  for (const auto& z : cfg.zones) {
    if (z.id == cfg.source_zone) {
      source = &z;
    } else {
      others.push_back(&z);
      other_weights.push_back(z.human_population);
    }
    if (z.id == cfg.neighborhood_zone) metro = &z;
  }
  std::vector<double> home_nb_weights, visit_nb_weights;
  for (const auto& nb : cfg.neighborhoods) {
    home_nb_weights.push_back(weight_of(cfg.neighborhood_home_weights, nb.id));
    visit_nb_weights.push_back(weight_of(cfg.neighborhood_visit_weights, nb.id));
  }
  const geo::RegionIndex nb_index(cfg.neighborhoods);

  auto place_in = [&](const geo::Patch& zone, double nb_fraction, const std::vector<double>& nb_weights,
                      Rng& rng) -> Place {
    if (metro == &zone && !cfg.neighborhoods.empty() && rng.bernoulli(nb_fraction)) {
      const std::size_t k = rng.weighted(nb_weights);
      const auto& nb = cfg.neighborhoods[k];
      return {sample_in(nb.geometry, rng, nb.id), nb.id};
    }
    const auto p = sample_in(zone.geometry, rng, zone.id);
    std::optional<std::string> nb;
    if (metro == &zone) nb = nb_index.locate(p);
    return {p, nb};
  };

  const int width = static_cast<int>(std::to_string(cfg.n_users).size());
  const auto user_id = [&](std::size_t i) { return fmt::format("u{:0{}}", i + 1, width); };
  const std::int64_t span = static_cast<std::int64_t>(cfg.span_days);
  const std::string source_label =
      cfg.profile_labels.count(cfg.source_zone) ? cfg.profile_labels.at(cfg.source_zone) : cfg.source_zone;

  std::vector<std::pair<ingest::ActivityEvent, std::size_t>> events;  // with generation order
  std::map<std::string, std::vector<std::size_t>> residents;
  for (std::size_t i = 0; i < cfg.n_users; ++i) {
    Rng rng = root.fork(i);
    UserTruth t;
    t.user_id = user_id(i);
    t.traveler = rng.bernoulli(cfg.travel_fraction);
    const bool lives_in_source = t.traveler && rng.bernoulli(cfg.source_resident_fraction);
    const geo::Patch& home_zone = lives_in_source ? *source : *others[rng.weighted(other_weights)];
    t.home_zone = home_zone.id;
    const Place home = place_in(home_zone, cfg.neighborhood_home_fraction, home_nb_weights, rng);
    t.home = home.point;
    t.home_neighborhood = home.neighborhood;
    residents[t.home_zone].push_back(i);

    const Place work = place_in(home_zone, 0.0, home_nb_weights, rng);
    const Place poi_a = place_in(home_zone, 0.0, home_nb_weights, rng);
    const Place poi_b = place_in(home_zone, 0.0, home_nb_weights, rng);

    struct TripWindow {
      std::int64_t first_day;
      std::int64_t days;
    };
    std::vector<TripWindow> windows;
    if (t.traveler) {
      const auto n_trips = rng.between(1, 3);
      for (std::int64_t k = 0; k < n_trips; ++k) {
        const geo::Patch& dest = lives_in_source ? *others[rng.weighted(other_weights)] : *source;
        const Place stop = place_in(dest, cfg.neighborhood_visit_fraction, visit_nb_weights, rng);
        t.trips.push_back(Trip{dest.id, stop.neighborhood, stop.point});
        const auto days = rng.between(2, 7);
        windows.push_back({rng.between(0, std::max<std::int64_t>(0, span - days)), days});
      }
    }

    auto emit_geo = [&](const geo::GeoPoint& p, Timestamp ts) {
      ingest::ActivityEvent ev;
      ev.user_id = t.user_id;
      ev.timestamp = ts;
      ev.geo = jitter(p, kHomeJitterM, rng);
      events.emplace_back(std::move(ev), events.size());
    };

    const auto n_geo = rng.between(static_cast<std::int64_t>(cfg.min_geo_events),
                                   static_cast<std::int64_t>(cfg.max_geo_events));
    for (std::int64_t k = 0; k < n_geo; ++k) {
      const auto day = rng.between(0, span - 1);
      if (rng.uniform() < cfg.home_rate) {
        // Mostly evenings and nights at home.
        int hour;
        if (rng.bernoulli(0.7)) {
          const auto h = rng.between(0, 12);
          hour = static_cast<int>(h < 5 ? 19 + h : h - 5);
        } else {
          hour = static_cast<int>(rng.between(8, 18));
        }
        emit_geo(t.home, local_instant(cfg, day, hour, rng));
        continue;
      }
      const double r = rng.uniform();
      if (r < 0.6) {
        auto d = day;
        for (int tries = 0; tries < 8 && weekend_day(cfg, d); ++tries) d = rng.between(0, span - 1);
        emit_geo(work.point, local_instant(cfg, d, static_cast<int>(rng.between(9, 17)), rng));
      } else {
        const auto& poi = r < 0.8 ? poi_a : poi_b;
        emit_geo(poi.point, local_instant(cfg, day, static_cast<int>(rng.between(10, 21)), rng));
      }
    }
    // Trip stops come on top of the regular activity, unless every geo event
    // is pinned at home.
    if (cfg.home_rate < 1.0) {
      for (std::size_t k = 0; k < t.trips.size(); ++k) {
        const auto n = rng.between(1, 3);
        for (std::int64_t e = 0; e < n; ++e) {
          const auto day = windows[k].first_day + rng.between(0, windows[k].days - 1);
          emit_geo(t.trips[k].stop, local_instant(cfg, day, static_cast<int>(rng.between(8, 22)), rng));
        }
      }
    }

    const auto n_text = rng.between(static_cast<std::int64_t>(cfg.min_text_events),
                                    static_cast<std::int64_t>(cfg.max_text_events));
    for (std::int64_t k = 0; k < n_text; ++k) {
      std::string zone = t.home_zone;
      std::int64_t day = rng.between(0, span - 1);
      if (!t.trips.empty() && rng.bernoulli(0.4)) {
        const auto trip = rng.below(t.trips.size());
        zone = t.trips[trip].zone;
        day = windows[trip].first_day + rng.between(0, windows[trip].days - 1);
      }
      ingest::ActivityEvent ev;
      ev.user_id = t.user_id;
      ev.timestamp = local_instant(cfg, day, static_cast<int>(rng.between(7, 23)), rng);
      ev.text = make_text(vocab.at(zone), rng);
      events.emplace_back(std::move(ev), events.size());
    }

    ingest::UserProfile prof{t.user_id, std::nullopt};
    if (!rng.bernoulli(cfg.profile_missing_fraction)) {
      const auto it = cfg.profile_labels.find(t.home_zone);
      prof.profile_home = it == cfg.profile_labels.end() ? t.home_zone : it->second;
    }
    if (prof.profile_home == source_label) out.seeds.push_back(t.user_id);
    out.profiles.push_back(std::move(prof));
    out.truth.push_back(std::move(t));
  }

  std::stable_sort(events.begin(), events.end(), [](const auto& a, const auto& b) {
    return std::tie(a.first.timestamp, a.first.user_id, a.second) <
           std::tie(b.first.timestamp, b.first.user_id, b.second);
  });
  if (cfg.max_events_per_user) {
    // walk newest to oldest, dropping whatever exceeds the cap
    std::map<std::string, std::size_t> kept;
    std::vector<bool> keep(events.size());
    for (std::size_t i = events.size(); i-- > 0;) keep[i] = ++kept[events[i].first.user_id] <= *cfg.max_events_per_user;
    std::size_t w = 0;
    for (std::size_t i = 0; i < events.size(); ++i)
      if (keep[i]) events[w++] = std::move(events[i]);
    events.resize(w);
  }
  out.events.reserve(events.size());
  for (auto& [ev, order] : events) out.events.push_back(std::move(ev));

  // Follower graph: mostly same-zone followers plus a few outside accounts.
  Rng grng = root.fork(0x67726170680000ULL);
  std::vector<std::string> outsider_ids;
  for (std::size_t k = 0; k < cfg.outsiders; ++k) outsider_ids.push_back(fmt::format("x{:04}", k + 1));
  const std::size_t everyone = cfg.n_users + cfg.outsiders;
  auto id_of = [&](std::size_t k) { return k < cfg.n_users ? user_id(k) : outsider_ids[k - cfg.n_users]; };
  for (std::size_t i = 0; i < everyone; ++i) {
    std::set<std::string> followers;
    const bool outsider = i >= cfg.n_users;
    const auto n = outsider ? grng.between(0, 2) : grng.between(1, 6);
    const auto* same = outsider ? nullptr : &residents[out.truth[i].home_zone];
    for (std::int64_t k = 0; k < n; ++k) {
      std::size_t f;
      if (same && same->size() > 1 && grng.bernoulli(0.7)) {
        f = (*same)[grng.below(same->size())];
      } else {
        f = static_cast<std::size_t>(grng.below(everyone));
      }
      if (f != i) followers.insert(id_of(f));
    }
    out.graph.followers[id_of(i)].assign(followers.begin(), followers.end());
  }

  Rng crng = root.fork(0x636f72707573ULL);
  std::vector<std::string> zone_ids;
  for (const auto& [zone, words] : vocab) {
    if (std::any_of(cfg.zones.begin(), cfg.zones.end(), [&](const geo::Patch& z) { return z.id == zone; })) {
      zone_ids.push_back(zone);
    }
  }
  for (const auto& zone : zone_ids) {
    for (std::size_t d = 0; d < cfg.corpus_docs_per_zone; ++d) {
      const std::vector<std::string>* noise = nullptr;
      if (crng.bernoulli(0.1)) noise = &vocab.at(zone_ids[crng.below(zone_ids.size())]);
      out.corpus.push_back({make_text(vocab.at(zone), crng, noise), zone});
    }
  }
  return out;
}

SynthConfig synth_config_from_json(std::string_view text, const std::string& base_dir) {
  const json j = detail::parse_json(std::string(text), "synth config");
  if (!j.is_object()) fail(Errc::config, "synth config: expected a JSON object");
  static const std::set<std::string> known{
      "seed", "n_users", "home_rate", "travel_fraction", "source_resident_fraction", "source_zone",
      "zones", "neighborhoods", "neighborhood_zone", "neighborhood_home_weights",
      "neighborhood_visit_weights", "neighborhood_home_fraction", "neighborhood_visit_fraction",
      "profile_labels", "profile_missing_fraction", "vocabulary_per_zone", "words_per_zone",
      "min_geo_events", "max_geo_events", "min_text_events", "max_text_events",
      "corpus_docs_per_zone", "outsiders", "utc_offset_hours", "start", "span_days",
      "max_events_per_user"};
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) fail(Errc::config, "synth config: unknown key '" + key + "'");
  }
  auto resolve = [&](const std::string& rel) {
    std::filesystem::path p(rel);
    if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
    if (!std::filesystem::exists(p)) fail(Errc::config, "synth config: geometry file not found: " + p.string());
    return p.string();
  };

  SynthConfig c;
  try {
    c.seed = j.value("seed", c.seed);
    c.n_users = j.value("n_users", c.n_users);
    c.home_rate = j.value("home_rate", c.home_rate);
    c.travel_fraction = j.value("travel_fraction", c.travel_fraction);
    c.source_resident_fraction = j.value("source_resident_fraction", c.source_resident_fraction);
    c.source_zone = j.value("source_zone", c.source_zone);
    if (!j.contains("zones")) fail(Errc::config, "synth config: 'zones' is required");
    c.zones = geo::load_patches(resolve(j.at("zones").get<std::string>()));
    if (j.contains("neighborhoods")) {
      c.neighborhoods = geo::load_regions(resolve(j.at("neighborhoods").get<std::string>()));
    }
    c.neighborhood_zone = j.value("neighborhood_zone", c.neighborhood_zone);
    c.neighborhood_home_weights = j.value("neighborhood_home_weights", c.neighborhood_home_weights);
    c.neighborhood_visit_weights = j.value("neighborhood_visit_weights", c.neighborhood_visit_weights);
    c.neighborhood_home_fraction = j.value("neighborhood_home_fraction", c.neighborhood_home_fraction);
    c.neighborhood_visit_fraction = j.value("neighborhood_visit_fraction", c.neighborhood_visit_fraction);
    c.profile_labels = j.value("profile_labels", c.profile_labels);
    c.profile_missing_fraction = j.value("profile_missing_fraction", c.profile_missing_fraction);
    c.vocabulary_per_zone = j.value("vocabulary_per_zone", c.vocabulary_per_zone);
    c.words_per_zone = j.value("words_per_zone", c.words_per_zone);
    c.min_geo_events = j.value("min_geo_events", c.min_geo_events);
    c.max_geo_events = j.value("max_geo_events", c.max_geo_events);
    c.min_text_events = j.value("min_text_events", c.min_text_events);
    c.max_text_events = j.value("max_text_events", c.max_text_events);
    c.corpus_docs_per_zone = j.value("corpus_docs_per_zone", c.corpus_docs_per_zone);
    c.outsiders = j.value("outsiders", c.outsiders);
    c.utc_offset_hours = j.value("utc_offset_hours", c.utc_offset_hours);
    c.span_days = j.value("span_days", c.span_days);
    if (j.contains("max_events_per_user")) c.max_events_per_user = j.at("max_events_per_user").get<std::size_t>();
    if (j.contains("start")) {
      const auto ts = parse_iso8601(j.at("start").get<std::string>() + "T00:00:00Z");
      if (!ts) fail(Errc::config, "synth config: 'start' must be YYYY-MM-DD");
      c.start_day = std::chrono::floor<std::chrono::days>(*ts).time_since_epoch().count();
    }
  } catch (const json::exception& e) {
    fail(Errc::config, std::string("synth config: ") + e.what());
  }
  c.validate();
  return c;
}

SynthConfig load_synth_config(const std::string& path) {
  const auto dir = std::filesystem::path(path).parent_path().string();
  return synth_config_from_json(detail::read_text(path), dir.empty() ? "." : dir);
}

std::string truth_to_json(std::span<const UserTruth> truth) {
  ordered_json arr = ordered_json::array();
  for (const auto& t : truth) {
    ordered_json o;
    o["user_id"] = t.user_id;
    o["home_zone"] = t.home_zone;
    o["home_neighborhood"] = t.home_neighborhood ? ordered_json(*t.home_neighborhood) : ordered_json();
    o["lat"] = t.home.lat;
    o["lon"] = t.home.lon;
    o["traveler"] = t.traveler;
    ordered_json trips = ordered_json::array();
    for (const auto& trip : t.trips) {
      ordered_json tj;
      tj["zone"] = trip.zone;
      tj["neighborhood"] = trip.neighborhood ? ordered_json(*trip.neighborhood) : ordered_json();
      tj["lat"] = trip.stop.lat;
      tj["lon"] = trip.stop.lon;
      trips.push_back(std::move(tj));
    }
    o["trips"] = std::move(trips);
    arr.push_back(std::move(o));
  }
  return arr.dump(1) + "\n";
}

std::vector<UserTruth> truth_from_json(std::string_view text) {
  const json j = detail::parse_json(std::string(text), "truth");
  std::vector<UserTruth> out;
  try {
    for (const auto& o : j) {
      UserTruth t;
      t.user_id = o.at("user_id").get<std::string>();
      t.home_zone = o.at("home_zone").get<std::string>();
      if (!o.at("home_neighborhood").is_null()) t.home_neighborhood = o["home_neighborhood"].get<std::string>();
      t.home = {o.at("lat").get<double>(), o.at("lon").get<double>()};
      t.traveler = o.at("traveler").get<bool>();
      for (const auto& tj : o.at("trips")) {
        Trip trip;
        trip.zone = tj.at("zone").get<std::string>();
        if (!tj.at("neighborhood").is_null()) trip.neighborhood = tj["neighborhood"].get<std::string>();
        trip.stop = {tj.at("lat").get<double>(), tj.at("lon").get<double>()};
        t.trips.push_back(std::move(trip));
      }
      out.push_back(std::move(t));
    }
  } catch (const json::exception& e) {
    fail(Errc::format, std::string("truth: ") + e.what());
  }
  return out;
}

std::vector<UserTruth> load_truth(const std::string& path) {
  return truth_from_json(detail::read_text(path));
}

std::map<std::string, geo::GeoPoint> truth_homes(std::span<const UserTruth> truth) {
  std::map<std::string, geo::GeoPoint> out;
  for (const auto& t : truth) out.emplace(t.user_id, t.home);
  return out;
}

std::vector<std::string> load_id_list(const std::string& path) {
  std::istringstream in(detail::read_text(path));
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

void write_synth(const std::string& dir, const SynthOutput& out) {
  const std::filesystem::path d(dir);
  ingest::write_events((d / "events.jsonl").string(), out.events);
  ingest::write_profiles((d / "profiles.csv").string(), out.profiles);
  ingest::write_graph((d / "graph.jsonl").string(), out.graph);
  detail::write_text((d / "corpus.csv").string(), coarsegeo::format_corpus(out.corpus));
  std::string seeds;
  for (const auto& s : out.seeds) seeds += s + "\n";
  detail::write_text((d / "seeds.txt").string(), seeds);
  detail::write_text((d / "truth.json").string(), truth_to_json(out.truth));
}

}  // namespace vbrisk::synth
