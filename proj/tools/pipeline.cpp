#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "commands.hpp"
#include "run_meta.hpp"
#include "vbrisk/error.hpp"

namespace vbrisk::tool {
namespace {

using json = nlohmann::json;

std::string resolve(const fs::path& base, const std::string& rel) {
  fs::path p(rel);
  if (p.is_relative()) p = base / p;
  if (!fs::exists(p)) fail(Errc::config, "pipeline config: file not found: " + p.string());
  return p.lexically_normal().string();
}

}  // namespace

fs::path run_pipeline(const PipelineArgs& a, std::uint64_t* seed_out, std::uint64_t* train_seed_out) {
  std::ifstream in(a.config, std::ios::binary);
  if (!in) fail(Errc::config, "cannot read pipeline config '" + a.config + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  json cfg;
  try {
    cfg = json::parse(buf.str());
  } catch (const json::exception& e) {
    fail(Errc::config, std::string("pipeline config: ") + e.what());
  }
  if (!cfg.is_object()) fail(Errc::config, "pipeline config: expected a JSON object");
  static const std::set<std::string> known{
      "seed",          "train_seed",  "synth",          "air_traffic", "dest_region",
      "keep_profiles", "zone_fit",    "min_confidence", "return_factor", "epi",
      "steady",        "utc_offset_hours", "cascade",   "top_k",       "visitor_unit",
      "out"};
  for (const auto& [key, value] : cfg.items()) {
    if (!known.count(key)) fail(Errc::config, "pipeline config: unknown key '" + key + "'");
  }
  const fs::path base = fs::path(a.config).parent_path().empty() ? fs::path(".") : fs::path(a.config).parent_path();

  try {
    const std::uint64_t seed = cfg.at("seed").get<std::uint64_t>();
    const std::uint64_t train_seed = cfg.value("train_seed", seed + 1);
    if (train_seed == seed) fail(Errc::config, "pipeline config: train_seed must differ from seed");
    if (seed_out) *seed_out = seed;
    if (train_seed_out) *train_seed_out = train_seed;

    const fs::path out = a.out ? *a.out : fs::path(cfg.value("out", std::string("pipeline_out")));
    ensure_dir(out);

    const json& sj = cfg.at("synth");
    auto synth_cfg = synth::synth_config_from_json(sj.dump(), base.string());
    const std::string source = synth_cfg.source_zone;
    const std::string zones_path = resolve(base, sj.at("zones").get<std::string>());
    const std::string nbhd_path = resolve(base, sj.at("neighborhoods").get<std::string>());
    const double tz = cfg.value("utc_offset_hours", synth_cfg.utc_offset_hours);

    // 1. data: evaluation set and an independent training set
    synth_cfg.seed = seed;
    SynthArgs eval_args;
    eval_args.inline_config = synth_cfg;
    eval_args.out = out / "data";
    const auto eval = run_synth(eval_args);
    synth_cfg.seed = train_seed;
    SynthArgs train_args;
    train_args.inline_config = synth_cfg;
    train_args.out = out / "train";
    run_synth(train_args);
    const fs::path data = out / "data";

    // 2. snowball sample from profile-matching seeds
    SnowballArgs sb;
    sb.graph = (data / "graph.jsonl").string();
    sb.profiles = (data / "profiles.csv").string();
    sb.seeds = (data / "seeds.txt").string();
    sb.keep = cfg.value("keep_profiles", sb.keep);
    sb.out = out / "snowball";
    run_snowball(sb);

    // 3. coarse zone classifier
    FitZonesArgs fz;
    fz.corpus = (data / "corpus.csv").string();
    const json zf = cfg.value("zone_fit", json::object());
    fz.inverse_regularization = zf.value("C", fz.inverse_regularization);
    fz.max_epochs = zf.value("max_epochs", fz.max_epochs);
    fz.holdout = zf.value("holdout", 0.2);
    fz.seed = seed;
    fz.out = out / "zones";
    run_fit_zones(fz);

    // 4. population flux
    FluxArgs fx;
    fx.events = (data / "events.jsonl").string();
    fx.zones = zones_path;
    fx.source = source;
    fx.air_traffic = resolve(base, cfg.at("air_traffic").get<std::string>());
    fx.dest_region = cfg.value("dest_region", std::string());
    fx.zone_model = (out / "zones" / "zone_model.json").string();
    fx.sample = (out / "snowball" / "sample.txt").string();
    fx.min_confidence = cfg.value("min_confidence", fx.min_confidence);
    fx.return_factor = cfg.value("return_factor", fx.return_factor);
    fx.out = out / "flux";
    run_flux(fx);

    // 5. county risk
    CountyRiskArgs cr;
    cr.patches = zones_path;
    cr.rates = (out / "flux" / "rates.csv").string();
    cr.source = source;
    if (cfg.contains("epi")) cr.inline_model = epi::model_config_from_json(cfg.at("epi").dump());
    const json st = cfg.value("steady", json::object());
    cr.tol = st.value("tol", cr.tol);
    cr.t_max = st.value("t_max", cr.t_max);
    cr.dt = st.value("dt", cr.dt);
    cr.out = out / "county";
    run_county_risk(cr);

    // 6. home-location cascade, trained on the independent set
    FeaturesArgs fe;
    fe.events = (out / "train" / "events.jsonl").string();
    fe.truth = (out / "train" / "truth.json").string();
    fe.tz = tz;
    fe.out = out / "homes";
    fe.file_name = "train_records.csv";
    run_features(fe);

    TrainArgs tr;
    tr.records = (out / "homes" / "train_records.csv").string();
    tr.seed = seed;
    const json cc = cfg.value("cascade", json::object());
    tr.trees = cc.value("trees", tr.trees);
    tr.scorer_epochs = cc.value("scorer_epochs", tr.scorer_epochs);
    tr.verifier_epochs = cc.value("verifier_epochs", tr.verifier_epochs);
    tr.dropout = cc.value("dropout", tr.dropout);
    tr.out = out / "homes";
    run_train_cascade(tr);

    PredictArgs pr;
    pr.events = (data / "events.jsonl").string();
    pr.model = (out / "homes" / "cascade.json").string();
    pr.tz = tz;
    pr.jobs = a.jobs;
    pr.truth = (data / "truth.json").string();
    pr.out = out / "homes";
    run_predict_homes(pr);

    // 7. neighborhood shares, intersection and the report
    NeighborhoodArgs nb;
    nb.visitors = (data / "events.jsonl").string();
    nb.profiles = (data / "profiles.csv").string();
    nb.source_label = synth_cfg.profile_labels.count(source) ? synth_cfg.profile_labels.at(source) : source;
    nb.homes = (out / "homes" / "predictions.json").string();
    nb.neighborhoods = nbhd_path;
    nb.top_k = cfg.value("top_k", nb.top_k);
    nb.unit = cfg.value("visitor_unit", nb.unit);
    if (!synth_cfg.neighborhood_zone.empty()) {
      nb.within = zones_path;
      nb.within_id = synth_cfg.neighborhood_zone;
    }
    nb.county_risk = (out / "county" / "county_risk.csv").string();
    nb.patches = zones_path;
    nb.out = out / "report";
    run_neighborhood_risk(nb);

    spdlog::info("pipeline: {} users -> {}", eval.truth.size(), out.string());
    return out;
  } catch (const json::exception& e) {
    fail(Errc::config, std::string("pipeline config: ") + e.what());
  }
}

}  // namespace vbrisk::tool
