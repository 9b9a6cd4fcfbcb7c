#include "vbrisk/homeloc/cascade.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <thread>

#include <spdlog/spdlog.h>

#include "json_io.hpp"
#include "vbrisk/error.hpp"
#include "vbrisk/random.hpp"

namespace vbrisk::homeloc {
namespace {

using detail::json;
using detail::ordered_json;

constexpr const char* kCascadeFormat = "vbrisk-cascade/1";

ordered_json network_to_json(const Network& net) {
  ordered_json layers = ordered_json::array();
  for (const auto& L : net.layers()) {
    ordered_json l;
    l["inputs"] = L.inputs;
    l["outputs"] = L.outputs;
    l["weights"] = L.weights;
    l["bias"] = L.bias;
    layers.push_back(std::move(l));
  }
  ordered_json j;
  j["dropout"] = net.dropout();
  j["layers"] = std::move(layers);
  return j;
}

Network network_from_json(const json& j) {
  std::vector<DenseLayer> layers;
  for (const auto& l : j.at("layers")) {
    DenseLayer L;
    L.inputs = l.at("inputs").get<std::size_t>();
    L.outputs = l.at("outputs").get<std::size_t>();
    L.weights = l.at("weights").get<std::vector<double>>();
    L.bias = l.at("bias").get<std::vector<double>>();
    layers.push_back(std::move(L));
  }
  return Network::from_layers(std::move(layers), j.at("dropout").get<double>());
}

}  // namespace

std::vector<double> FeatureNorm::apply(const Features& f) const {
  std::vector<double> out(kFeatureCount);
  for (std::size_t k = 0; k < kFeatureCount; ++k) out[k] = (f[k] - mean[k]) / scale[k];
  return out;
}

FeatureNorm FeatureNorm::fit(std::span<const ClusterRecord> records) {
  FeatureNorm norm;
  norm.scale.fill(1.0);
  if (records.empty()) return norm;
  const double n = static_cast<double>(records.size());
  for (std::size_t k = 0; k < kFeatureCount; ++k) {
    double sum = 0.0;
    for (const auto& r : records) sum += r.features[k];
    const double mean = sum / n;
    double sq = 0.0;
    for (const auto& r : records) sq += (r.features[k] - mean) * (r.features[k] - mean);
    const double sd = std::sqrt(sq / n);
    norm.mean[k] = mean;
    norm.scale[k] = sd > 1e-12 ? sd : 1.0;
  }
  return norm;
}

std::vector<std::size_t> forest_prune(std::span<const ClusterRecord> records,
                                      const CascadeModel& model) {
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (model.forest.keeps(model.norm.apply(records[i].features))) keep.push_back(i);
  }
  return keep;
}

std::vector<double> scorer_scores(std::span<const ClusterRecord> records,
                                  const CascadeModel& model) {
  std::vector<double> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(model.scorer.predict(model.norm.apply(r.features)));
  return out;
}

std::optional<std::size_t> scorer_rank(std::span<const ClusterRecord> records,
                                       std::span<const double> scores) {
  if (records.size() != scores.size()) fail(Errc::validation, "scorer_rank: size mismatch");
  if (records.empty()) return std::nullopt;
  std::size_t best = 0;
  for (std::size_t i = 1; i < records.size(); ++i) {
    const auto& a = records[i];
    const auto& b = records[best];
    if (scores[i] > scores[best] ||
        (scores[i] == scores[best] &&
         (a.first_event < b.first_event ||
          (a.first_event == b.first_event && a.cluster_index < b.cluster_index)))) {
      best = i;
    }
  }
  return best;
}

std::vector<double> verifier_input(const ClusterRecord& candidate, std::span<const double> scores,
                                   std::size_t candidate_index, const CascadeModel& model) {
  auto x = model.norm.apply(candidate.features);
  double runner_up = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (i != candidate_index) runner_up = std::max(runner_up, scores[i]);
  }
  x.push_back(scores[candidate_index]);
  x.push_back(runner_up);
  x.push_back(std::log1p(static_cast<double>(scores.size())));
  return x;
}

HomePrediction verifier_decide(const ClusterRecord& candidate, double probability,
                               double threshold) {
  HomePrediction p;
  p.user_id = candidate.user_id;
  p.score = probability;
  if (probability > threshold) p.home = candidate.centroid;
  return p;
}

HomePrediction predict_user(const std::string& user_id, std::span<const ClusterRecord> records,
                            const CascadeModel& model) {
  if (!model.trained()) fail(Errc::config, "cascade model is not trained");
  std::vector<ClusterRecord> surviving;
  for (std::size_t i : forest_prune(records, model)) surviving.push_back(records[i]);
  if (surviving.empty()) return HomePrediction{user_id, std::nullopt, 0.0};
  const auto scores = scorer_scores(surviving, model);
  const std::size_t best = *scorer_rank(surviving, scores);
  const double p = model.verifier.predict(verifier_input(surviving[best], scores, best, model));
  auto out = verifier_decide(surviving[best], p, model.accept_threshold);
  out.user_id = user_id;
  return out;
}

CascadeModel train_cascade(std::span<const ClusterRecord> records, const CascadeOptions& options,
                           std::uint64_t seed, TrainingReport* report) {
  std::vector<ClusterRecord> labeled;
  for (const auto& r : records) {
    if (r.label) labeled.push_back(r);
  }
  if (labeled.empty()) fail(Errc::validation, "cascade: no labeled training records");
  for (const auto& r : labeled) {
    for (double v : r.features) {
      if (!std::isfinite(v)) fail(Errc::validation, "cascade: non-finite feature in " + r.user_id);
    }
  }

  CascadeModel model;
  model.seed = seed;
  model.accept_threshold = options.accept_threshold;
  model.norm = FeatureNorm::fit(labeled);

  std::vector<std::vector<double>> x;
  std::vector<bool> y;
  for (const auto& r : labeled) {
    x.push_back(model.norm.apply(r.features));
    y.push_back(*r.label);
  }

  auto forest = forest_train_detailed(x, y, options.forest, Rng::mix(seed ^ 0x1));
  model.forest = std::move(forest.forest);

  // Out-of-bag votes stand in for the test-time prune on training rows.
  std::vector<std::size_t> surviving;
  for (std::size_t i = 0; i < labeled.size(); ++i) {
    const bool keep = forest.oob_trees[i] > 0 ? forest.oob_home_votes[i] > 0
                                              : model.forest.keeps(x[i]);
    if (keep) surviving.push_back(i);
  }
  if (surviving.empty()) fail(Errc::validation, "cascade: forest pruned every training record");

  std::vector<std::vector<double>> xs;
  std::vector<double> ysc;
  for (std::size_t i : surviving) {
    xs.push_back(x[i]);
    ysc.push_back(y[i] ? 1.0 : 0.0);
  }
  auto scorer = train_network(xs, ysc, options.scorer, Rng::mix(seed ^ 0x2));
  model.scorer = std::move(scorer.network);

  std::map<std::string, std::vector<std::size_t>> by_user;
  for (std::size_t i : surviving) by_user[labeled[i].user_id].push_back(i);
  std::vector<std::vector<double>> xv;
  std::vector<double> yv;
  for (const auto& [user, idx] : by_user) {
    std::vector<ClusterRecord> recs;
    for (std::size_t i : idx) recs.push_back(labeled[i]);
    const auto scores = scorer_scores(recs, model);
    const std::size_t best = *scorer_rank(recs, scores);
    xv.push_back(verifier_input(recs[best], scores, best, model));
    yv.push_back(*recs[best].label ? 1.0 : 0.0);
  }
  auto verifier = train_network(xv, yv, options.verifier, Rng::mix(seed ^ 0x3));
  model.verifier = std::move(verifier.network);

  if (report) {
    report->records = labeled.size();
    report->surviving = surviving.size();
    report->positives = static_cast<std::size_t>(std::count(y.begin(), y.end(), true));
    report->surviving_positives = static_cast<std::size_t>(
        std::count_if(surviving.begin(), surviving.end(), [&](std::size_t i) { return y[i]; }));
    report->candidates = xv.size();
    report->scorer_loss = std::move(scorer.loss_history);
    report->verifier_loss = std::move(verifier.loss_history);
  }
  return model;
}

std::vector<HomePrediction> predict_homes(std::span<const ingest::ActivityEvent> events,
                                          const CascadeModel& model,
                                          const PredictOptions& options) {
  if (!model.trained()) fail(Errc::config, "cascade model is not trained");
  const LocationIndex index(events, options.dbscan.eps_m);

  std::map<std::string, std::vector<ingest::ActivityEvent>> by_user;
  for (const auto& ev : events) {
    auto& list = by_user[ev.user_id];
    if (ev.geo) list.push_back(ev);
  }
  std::vector<const std::pair<const std::string, std::vector<ingest::ActivityEvent>>*> users;
  for (const auto& entry : by_user) users.push_back(&entry);

  if (!options.utc_offset_hours) {
    spdlog::warn("no timezone configured; using fixed UTC offset {}", kDefaultUtcOffsetHours);
  }
  std::vector<HomePrediction> out(users.size());
  auto work = [&](std::size_t i) {
    const auto& [user, evs] = *users[i];
    if (evs.size() < options.min_geo_events) {
      out[i] = HomePrediction{user, std::nullopt, 0.0};
      return;
    }
    const auto clusters = dbscan_user(evs, options.dbscan);
    const auto recs = extract_records(evs, clusters, index,
                                      options.utc_offset_hours.value_or(kDefaultUtcOffsetHours));
    out[i] = predict_user(user, recs, model);
  };

  const std::size_t jobs = std::max<std::size_t>(1, std::min(options.jobs, users.size()));
  if (jobs == 1) {
    for (std::size_t i = 0; i < users.size(); ++i) work(i);
  } else {
    std::vector<std::exception_ptr> errors(jobs);
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < jobs; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < users.size(); i += jobs) work(i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  return out;
}

std::string cascade_to_json(const CascadeModel& model) {
  ordered_json j;
  j["format"] = kCascadeFormat;
  j["seed"] = model.seed;
  j["accept_threshold"] = model.accept_threshold;
  j["norm"] = {{"mean", model.norm.mean}, {"scale", model.norm.scale}};
  ordered_json trees = ordered_json::array();
  for (const auto& t : model.forest.trees) {
    ordered_json nodes = ordered_json::array();
    for (const auto& n : t.nodes) {
      nodes.push_back(ordered_json::array({n.feature, n.threshold, n.left, n.right, n.home_fraction}));
    }
    trees.push_back(std::move(nodes));
  }
  j["forest"] = std::move(trees);
  j["scorer"] = network_to_json(model.scorer);
  j["verifier"] = network_to_json(model.verifier);
  return j.dump() + "\n";
}

CascadeModel cascade_from_json(std::string_view text) {
  const json j = detail::parse_json(std::string(text), "cascade model");
  CascadeModel m;
  try {
    if (j.at("format").get<std::string>() != kCascadeFormat) {
      fail(Errc::format, "cascade model: unsupported format tag");
    }
    m.seed = j.at("seed").get<std::uint64_t>();
    m.accept_threshold = j.at("accept_threshold").get<double>();
    m.norm.mean = j.at("norm").at("mean").get<Features>();
    m.norm.scale = j.at("norm").at("scale").get<Features>();
    for (const auto& t : j.at("forest")) {
      DecisionTree tree;
      for (const auto& n : t) {
        TreeNode node;
        node.feature = n.at(0).get<int>();
        node.threshold = n.at(1).get<double>();
        node.left = n.at(2).get<int>();
        node.right = n.at(3).get<int>();
        node.home_fraction = n.at(4).get<double>();
        tree.nodes.push_back(node);
      }
      const auto count = static_cast<int>(tree.nodes.size());
      for (const auto& node : tree.nodes) {
        if (node.feature >= static_cast<int>(kFeatureCount) ||
            (node.feature >= 0 && (node.left <= 0 || node.right <= 0 || node.left >= count ||
                                   node.right >= count))) {
          fail(Errc::format, "cascade model: malformed tree node");
        }
      }
      m.forest.trees.push_back(std::move(tree));
    }
    m.scorer = network_from_json(j.at("scorer"));
    m.verifier = network_from_json(j.at("verifier"));
  } catch (const json::exception& e) {
    fail(Errc::format, std::string("cascade model: ") + e.what());
  }
  if (m.scorer.inputs() != kFeatureCount || m.verifier.inputs() != kVerifierInputs) {
    fail(Errc::format, "cascade model: network input widths do not match the feature layout");
  }
  for (double s : m.norm.scale) {
    if (!(s > 0.0)) fail(Errc::format, "cascade model: normalization scale must be > 0");
  }
  return m;
}

void save_cascade(const std::string& path, const CascadeModel& model) {
  detail::write_text(path, cascade_to_json(model));
}

CascadeModel load_cascade(const std::string& path) {
  return cascade_from_json(detail::read_text(path));
}

std::string predictions_to_json(std::span<const HomePrediction> predictions) {
  ordered_json arr = ordered_json::array();
  for (const auto& p : predictions) {
    ordered_json o;
    o["user_id"] = p.user_id;
    o["verdict"] = p.known() ? "home" : "unknown";
    if (p.home) {
      o["lat"] = p.home->lat;
      o["lon"] = p.home->lon;
    }
    o["score"] = p.score;
    arr.push_back(std::move(o));
  }
  return arr.dump(1) + "\n";
}

std::vector<HomePrediction> predictions_from_json(std::string_view text) {
  const json j = detail::parse_json(std::string(text), "predictions");
  if (!j.is_array()) fail(Errc::format, "predictions: expected a JSON array");
  std::vector<HomePrediction> out;
  try {
    for (const auto& o : j) {
      HomePrediction p;
      p.user_id = o.at("user_id").get<std::string>();
      const auto verdict = o.at("verdict").get<std::string>();
      if (verdict == "home") {
        p.home = geo::GeoPoint{o.at("lat").get<double>(), o.at("lon").get<double>()};
        if (!geo::is_valid(*p.home)) fail(Errc::validation, "predictions: invalid home for " + p.user_id);
      } else if (verdict != "unknown") {
        fail(Errc::format, "predictions: verdict must be 'home' or 'unknown'");
      }
      p.score = o.value("score", 0.0);
      out.push_back(std::move(p));
    }
  } catch (const json::exception& e) {
    fail(Errc::format, std::string("predictions: ") + e.what());
  }
  return out;
}

void save_predictions(const std::string& path, std::span<const HomePrediction> predictions) {
  detail::write_text(path, predictions_to_json(predictions));
}

std::vector<HomePrediction> load_predictions(const std::string& path) {
  return predictions_from_json(detail::read_text(path));
}

}  // namespace vbrisk::homeloc
