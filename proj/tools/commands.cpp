#include "commands.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "run_meta.hpp"
#include "vbrisk/coarsegeo.hpp"
#include "vbrisk/csv.hpp"
#include "vbrisk/error.hpp"
#include "vbrisk/flux.hpp"
#include "vbrisk/geojson.hpp"
#include "vbrisk/homeloc/cascade.hpp"
#include "vbrisk/ingest.hpp"
#include "vbrisk/random.hpp"
#include "vbrisk/riskmap.hpp"

namespace vbrisk::tool {
namespace {

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Errc::io, "cannot write " + path.string());
  out << text;
  if (!out) fail(Errc::io, "failed writing " + path.string());
}

std::vector<ingest::ActivityEvent> read_events(const std::string& path) {
  auto res = ingest::load_events(path);
  if (res.rejected > 0) {
    spdlog::warn("{}: skipped {} malformed record(s)", path, res.rejected);
  }
  return std::move(res.events);
}

std::vector<epi::PatchRisk> load_county_risk(const std::string& path) {
  const auto rows = csv::read_file(path);
  if (rows.empty()) fail(Errc::validation, path + ": missing header row");
  const csv::Header header(rows[0]);
  const auto id = header.require("patch_id");
  const auto ih = header.require("I_h_steady");
  const auto risk = header.require("risk");
  std::vector<epi::PatchRisk> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() < rows[0].size()) fail(Errc::validation, fmt::format("{}: short row {}", path, r + 1));
    try {
      out.push_back({row[id], std::stod(row[ih]), std::stod(row[risk])});
    } catch (const std::exception&) {
      fail(Errc::validation, fmt::format("{}: bad number on row {}", path, r + 1));
    }
  }
  return out;
}

}  // namespace

synth::SynthOutput run_synth(const SynthArgs& a) {
  synth::SynthConfig cfg = a.inline_config ? *a.inline_config : synth::load_synth_config(a.config);
  if (a.seed) cfg.seed = *a.seed;
  if (a.n_users) cfg.n_users = *a.n_users;
  auto out = synth::synth_generate(cfg);
  ensure_dir(a.out);
  synth::write_synth(a.out.string(), out);
  spdlog::info("synth-data: {} users, {} events -> {}", out.truth.size(), out.events.size(), a.out.string());
  return out;
}

void run_snowball(const SnowballArgs& a) {
  const auto graph = ingest::load_graph(a.graph);
  const auto profiles = ingest::load_profiles(a.profiles);
  const auto seeds = synth::load_id_list(a.seeds);
  const auto keep = ingest::profile_home_in(profiles, std::set<std::string>(a.keep.begin(), a.keep.end()));
  const auto sample = ingest::snowball_sample(graph, seeds, keep);
  ensure_dir(a.out);
  std::string text;
  for (const auto& u : sample) text += u + "\n";
  write_file(a.out / "sample.txt", text);
  spdlog::info("snowball: {} seeds -> {} users", seeds.size(), sample.size());
}

void run_fit_zones(const FitZonesArgs& a) {
  if (!(a.holdout >= 0.0 && a.holdout < 1.0)) fail(Errc::config, "--holdout must lie in [0, 1)");
  const auto corpus = coarsegeo::load_corpus(a.corpus);
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t n_test = 0;
  if (a.holdout > 0.0) {
    Rng rng(a.seed);
    rng.shuffle(std::span<std::size_t>(order));
    n_test = static_cast<std::size_t>(a.holdout * static_cast<double>(corpus.size()));
  }
  std::vector<coarsegeo::LabeledText> train, test;
  for (std::size_t k = 0; k < order.size(); ++k) (k < n_test ? test : train).push_back(corpus[order[k]]);
  std::sort(test.begin(), test.end(), [](const auto& x, const auto& y) {
    return std::tie(x.zone_label, x.text) < std::tie(y.zone_label, y.text);
  });

  coarsegeo::FitOptions opt;
  opt.inverse_regularization = a.inverse_regularization;
  opt.max_epochs = a.max_epochs;
  const auto fit = coarsegeo::fit_detailed(train, opt);
  ensure_dir(a.out);
  coarsegeo::save_model((a.out / "zone_model.json").string(), fit.model);

  ordered_json m;
  m["train_documents"] = train.size();
  m["holdout_documents"] = test.size();
  m["epochs"] = fit.epochs;
  m["converged"] = fit.converged;
  m["final_objective"] = fit.loss_history.back();
  if (!test.empty()) {
    std::size_t hits = 0;
    for (const auto& doc : test) hits += coarsegeo::predict_zone(doc.text, fit.model).zone == doc.zone_label;
    m["holdout_accuracy"] = static_cast<double>(hits) / static_cast<double>(test.size());
  }
  write_file(a.out / "zone_metrics.json", m.dump(2) + "\n");
  spdlog::info("fit-zones: {} labels, {} tokens", fit.model.labels.size(), fit.model.tokens.size());
}

void run_flux(const FluxArgs& a) {
  auto events = read_events(a.events);
  if (!a.sample.empty()) {
    const auto ids = synth::load_id_list(a.sample);
    const std::set<std::string> keep(ids.begin(), ids.end());
    std::erase_if(events, [&](const ingest::ActivityEvent& ev) { return !keep.count(ev.user_id); });
  }
  const auto patches = geo::load_patches(a.zones);
  const geo::RegionIndex index(patches);
  std::optional<coarsegeo::ZoneModel> model;
  if (!a.zone_model.empty()) model = coarsegeo::load_model(a.zone_model);

  flux::VisitSetOptions vopt;
  vopt.use_text = model.has_value();
  vopt.min_confidence = a.min_confidence;
  const auto visits = flux::build_visit_sets(events, index, model ? &*model : nullptr, vopt);

  const auto air = ingest::load_air_traffic(a.air_traffic);
  const double volume = a.dest_region.empty() ? air.total_from(a.source) : air.volume(a.source, a.dest_region);
  if (!(volume > 0.0)) {
    fail(Errc::validation, fmt::format("no air traffic from '{}' to '{}'", a.source,
                                       a.dest_region.empty() ? "*" : a.dest_region));
  }
  std::vector<std::string> dests;
  for (const auto& p : patches) {
    if (p.id != a.source) dests.push_back(p.id);
  }
  const auto sf = flux::estimate_source_flux(visits, a.source, dests, volume);
  const auto alpha = flux::to_rate_matrix(sf, patches, a.source, a.return_factor);

  ensure_dir(a.out);
  flux::write_source_flux_csv((a.out / "source_flux.csv").string(), a.source, sf);
  flux::write_rate_csv((a.out / "rates.csv").string(), alpha, patches);
  ordered_json s;
  s["source"] = a.source;
  s["air_volume"] = volume;
  s["users_with_visits"] = visits.size();
  s["sample_size"] = sf.sample_size;
  ordered_json counts = ordered_json::object();
  for (std::size_t i = 0; i < sf.dest_patches.size(); ++i) counts[sf.dest_patches[i]] = sf.user_counts[i];
  s["user_counts"] = counts;
  write_file(a.out / "flux_summary.json", s.dump(2) + "\n");
  spdlog::info("flux-estimate: U = {} users seen in {} and a destination", sf.sample_size, a.source);
}

void run_county_risk(const CountyRiskArgs& a) {
  auto patches = geo::load_patches(a.patches);
  auto alpha = flux::load_rate_csv(a.rates, patches);
  const epi::ModelConfig cfg = a.inline_model        ? *a.inline_model
                               : a.model_config.empty() ? epi::ModelConfig{}
                                                        : epi::load_model_config(a.model_config);
  cfg.params.validate();
  std::optional<std::size_t> source;
  for (std::size_t i = 0; i < patches.size(); ++i) {
    if (patches[i].id == a.source) source = i;
  }
  if (!source) fail(Errc::validation, "source patch '" + a.source + "' is not among the patches");
  const epi::PatchGraph graph(patches, std::move(alpha),
                              cfg.pin_source ? source : std::optional<std::size_t>{});
  auto init = epi::disease_free_state(graph);
  epi::seed_prevalence(init, graph, *source, cfg.source_prevalence, cfg.params.phi);
  epi::SteadyOptions so;
  so.tol = a.tol;
  so.t_max = a.t_max;
  so.dt = a.dt;
  const auto ss = epi::integrate_to_steady(init, graph, cfg.params, so);

  ensure_dir(a.out);
  ordered_json s;
  s["converged"] = ss.converged;
  s["t_elapsed_days"] = ss.t_elapsed;
  s["t_onset_days"] = ss.t_onset;
  s["residual"] = ss.residual;
  s["steps"] = ss.steps;
  s["params"] = ordered_json::parse(epi::model_config_to_json(cfg));
  write_file(a.out / "steady_state.json", s.dump(2) + "\n");

  const auto scores = epi::risk_scores(ss, graph);  // throws when not converged
  const auto ranked = epi::rank_patches(scores.patches);
  write_file(a.out / "county_risk.csv", epi::format_risk_csv(ranked));
  riskmap::CountyReport report{patches, scores.patches};
  write_file(a.out / "county_risk.geojson", riskmap::format_county_geojson(report));
  spdlog::info("county-risk: steady state after {} days; highest {} ({})", ss.t_elapsed,
               ranked.front().patch_id, epi::RiskScores::caveat);
}

void run_cluster(const ClusterArgs& a) {
  const auto events = read_events(a.events);
  homeloc::DbscanOptions opt{a.eps_m, a.min_pts};
  std::string text;
  std::size_t users = 0, clusters = 0;
  for (const auto& [user, evs] : homeloc::group_geo_events(events)) {
    if (evs.size() < a.min_geo_events) continue;
    ++users;
    const auto cl = homeloc::dbscan_user(evs, opt);
    for (std::size_t c = 0; c < cl.size(); ++c) {
      ordered_json o;
      o["user_id"] = user;
      o["cluster"] = c;
      o["lat"] = cl[c].centroid.lat;
      o["lon"] = cl[c].centroid.lon;
      o["size"] = cl[c].members.size();
      text += o.dump() + "\n";
      ++clusters;
    }
  }
  ensure_dir(a.out);
  write_file(a.out / "clusters.jsonl", text);
  spdlog::info("cluster: {} users, {} clusters", users, clusters);
}

void run_features(const FeaturesArgs& a) {
  const auto events = read_events(a.events);
  if (!a.tz) spdlog::warn("no --tz given; using fixed UTC offset {}", homeloc::kDefaultUtcOffsetHours);
  const auto users = homeloc::build_user_records(events, a.tz.value_or(homeloc::kDefaultUtcOffsetHours));
  std::vector<homeloc::ClusterRecord> records;
  for (const auto& u : users) records.insert(records.end(), u.records.begin(), u.records.end());
  if (!a.truth.empty()) {
    const auto truth = synth::load_truth(a.truth);
    homeloc::label_by_home(records, synth::truth_homes(truth));
  }
  ensure_dir(a.out);
  write_file(a.out / a.file_name, homeloc::format_records_csv(records));
  spdlog::info("features: {} records from {} users", records.size(), users.size());
}

void run_train_cascade(const TrainArgs& a) {
  const auto records = homeloc::load_records_csv(a.records);
  homeloc::CascadeOptions opt;
  opt.forest.trees = a.trees;
  opt.scorer.epochs = a.scorer_epochs;
  opt.verifier.epochs = a.verifier_epochs;
  opt.scorer.dropout = a.dropout;
  opt.verifier.dropout = a.dropout;
  homeloc::TrainingReport rep;
  const auto model = homeloc::train_cascade(records, opt, a.seed, &rep);
  ensure_dir(a.out);
  homeloc::save_cascade((a.out / "cascade.json").string(), model);
  ordered_json r;
  r["seed"] = a.seed;
  r["records"] = rep.records;
  r["positives"] = rep.positives;
  r["surviving"] = rep.surviving;
  r["surviving_positives"] = rep.surviving_positives;
  r["candidates"] = rep.candidates;
  r["scorer_final_loss"] = rep.scorer_loss.empty() ? 0.0 : rep.scorer_loss.back();
  r["verifier_final_loss"] = rep.verifier_loss.empty() ? 0.0 : rep.verifier_loss.back();
  write_file(a.out / "training_report.json", r.dump(2) + "\n");
  spdlog::info("train-cascade: {} records, {} survive pruning", rep.records, rep.surviving);
}

void run_predict_homes(const PredictArgs& a) {
  const auto events = read_events(a.events);
  const auto model = homeloc::load_cascade(a.model);
  homeloc::PredictOptions opt;
  opt.utc_offset_hours = a.tz;
  opt.jobs = a.jobs;
  const auto preds = homeloc::predict_homes(events, model, opt);
  ensure_dir(a.out);
  homeloc::save_predictions((a.out / "predictions.json").string(), preds);

  ordered_json s;
  const auto known = static_cast<std::size_t>(
      std::count_if(preds.begin(), preds.end(), [](const auto& p) { return p.known(); }));
  s["users"] = preds.size();
  s["home_verdicts"] = known;
  if (!a.truth.empty()) {
    const auto homes = synth::truth_homes(synth::load_truth(a.truth));
    std::size_t within = 0;
    for (const auto& p : preds) {
      const auto it = homes.find(p.user_id);
      if (p.home && it != homes.end() && geo::haversine_m(*p.home, it->second) <= 100.0) ++within;
    }
    s["accepted_fraction"] = preds.empty() ? 0.0 : static_cast<double>(known) / static_cast<double>(preds.size());
    s["within_100m_of_truth"] = known == 0 ? 0.0 : static_cast<double>(within) / static_cast<double>(known);
  }
  write_file(a.out / "homes_summary.json", s.dump(2) + "\n");
  spdlog::info("predict-homes: {} of {} users received a home", known, preds.size());
}

void run_neighborhood_risk(const NeighborhoodArgs& a) {
  if (a.unit != "events" && a.unit != "users") fail(Errc::config, "--unit must be 'events' or 'users'");
  if (a.top_k == 0) fail(Errc::config, "--top-k must be >= 1");
  auto events = read_events(a.visitors);
  if (!a.profiles.empty()) {
    events = riskmap::events_of_residents(events, ingest::load_profiles(a.profiles), a.source_label);
  }
  const auto nbhd = geo::load_regions(a.neighborhoods);
  auto preds = homeloc::load_predictions(a.homes);
  if (!a.within.empty()) {
    const auto areas = geo::load_regions(a.within);
    const auto it = std::find_if(areas.begin(), areas.end(),
                                 [&](const geo::Region& r) { return r.id == a.within_id; });
    if (it == areas.end()) fail(Errc::config, "--within-id '" + a.within_id + "' not found in " + a.within);
    events = riskmap::events_within(events, it->geometry);
    preds = riskmap::homes_within(preds, it->geometry);
  }

  riskmap::ReportInputs in;
  in.visitors = riskmap::visitor_shares(
      events, nbhd, a.unit == "users" ? riskmap::VisitorUnit::users : riskmap::VisitorUnit::events);
  in.residents = riskmap::resident_shares(preds, nbhd);
  in.risk_set = riskmap::intersect_high_risk(*in.visitors, *in.residents, a.top_k);
  if (!a.county_risk.empty()) {
    if (a.patches.empty()) fail(Errc::config, "--county-risk needs --patches for the geometry");
    in.county = riskmap::CountyReport{geo::load_patches(a.patches), load_county_risk(a.county_risk)};
  }
  riskmap::emit_report(in, a.out.string());
  spdlog::info("neighborhood-risk: {} high-risk neighborhood(s)", in.risk_set.neighborhoods.size());
}

}  // namespace vbrisk::tool
