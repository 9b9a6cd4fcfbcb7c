#include <cstdio>
#include <functional>
#include <iostream>
#include <map>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "commands.hpp"
#include "run_meta.hpp"
#include "vbrisk/error.hpp"

using namespace vbrisk;
using namespace vbrisk::tool;

namespace {

struct Command {
  CLI::App* app;
  std::function<void(RunMeta&)> run;
  std::function<fs::path()> out;
};

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("vbrisk"));
  spdlog::set_pattern("%l: %v");

  CLI::App app{"Vector-borne disease importation risk: county and neighborhood scale."};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", std::string(VBRISK_VERSION));
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));

  std::vector<Command> commands;

  SynthArgs synth;
  std::string synth_out;
  {
    auto* s = app.add_subcommand("synth-data", "Generate a seeded synthetic dataset with planted truth");
    s->add_option("--config", synth.config, "Generator JSON config")->required()->check(CLI::ExistingFile);
    s->add_option("--seed", synth.seed, "Override the config seed");
    s->add_option("--n-users", synth.n_users, "Override the number of users");
    s->add_option("--out", synth_out, "Output directory")->required();
    commands.push_back({s, [&](RunMeta& m) {
                          synth.out = synth_out;
                          m.add_config(synth.config);
                          const auto out = run_synth(synth);
                          (void)out;
                        },
                        [&] { return fs::path(synth_out); }});
  }

  SnowballArgs snow;
  std::string snow_out;
  {
    auto* s = app.add_subcommand("snowball", "Offline snowball walk over a follower graph");
    s->add_option("--graph", snow.graph, "Follower graph (NDJSON)")->required()->check(CLI::ExistingFile);
    s->add_option("--profiles", snow.profiles, "Profiles CSV")->required()->check(CLI::ExistingFile);
    s->add_option("--seeds", snow.seeds, "Seed user ids, one per line")->required()->check(CLI::ExistingFile);
    s->add_option("--keep", snow.keep, "Profile zones that are expanded")->delimiter(',')->capture_default_str();
    s->add_option("--out", snow_out, "Output directory")->required();
    commands.push_back({s, [&](RunMeta&) { snow.out = snow_out; run_snowball(snow); },
                        [&] { return fs::path(snow_out); }});
  }

  FitZonesArgs fz;
  std::string fz_out;
  {
    auto* s = app.add_subcommand("fit-zones", "Train the coarse zone text classifier");
    s->add_option("--corpus", fz.corpus, "CSV zone_label,text")->required()->check(CLI::ExistingFile);
    s->add_option("--C", fz.inverse_regularization, "Inverse l2 regularization")->capture_default_str();
    s->add_option("--max-epochs", fz.max_epochs, "Gradient-descent epochs")->capture_default_str();
    s->add_option("--holdout", fz.holdout, "Held-out fraction for accuracy")->capture_default_str();
    s->add_option("--seed", fz.seed, "Seed for the held-out split")->capture_default_str();
    s->add_option("--out", fz_out, "Output directory")->required();
    commands.push_back({s, [&](RunMeta& m) { m.seeds["split"] = fz.seed; fz.out = fz_out; run_fit_zones(fz); },
                        [&] { return fs::path(fz_out); }});
  }

  FluxArgs fx;
  std::string fx_out;
  {
    auto* s = app.add_subcommand("flux-estimate", "Estimate persons/day and movement rates from the source");
    s->add_option("--events", fx.events, "Events (NDJSON)")->required()->check(CLI::ExistingFile);
    s->add_option("--zones", fx.zones, "Zone/patch GeoJSON with populations")->required()->check(CLI::ExistingFile);
    s->add_option("--source", fx.source, "Source zone id")->capture_default_str();
    s->add_option("--air-traffic", fx.air_traffic, "CSV source,dest_region,persons_per_day")
        ->required()
        ->check(CLI::ExistingFile);
    s->add_option("--dest-region", fx.dest_region, "Air-traffic destination region (default: all)");
    s->add_option("--zone-model", fx.zone_model, "Zone classifier for text-only events")->check(CLI::ExistingFile);
    s->add_option("--sample", fx.sample, "Restrict to these user ids")->check(CLI::ExistingFile);
    s->add_option("--min-confidence", fx.min_confidence, "Text prediction threshold")->capture_default_str();
    s->add_option("--return-factor", fx.return_factor, "Return-flux factor rho")->capture_default_str();
    s->add_option("--out", fx_out, "Output directory")->required();
    commands.push_back({s, [&](RunMeta&) { fx.out = fx_out; run_flux(fx); }, [&] { return fs::path(fx_out); }});
  }

  CountyRiskArgs cr;
  std::string cr_out;
  {
    auto* s = app.add_subcommand("county-risk", "Integrate the metapopulation model to steady state");
    s->add_option("--patches", cr.patches, "Patch GeoJSON")->required()->check(CLI::ExistingFile);
    s->add_option("--rates", cr.rates, "CSV from,to,rate_per_day")->required()->check(CLI::ExistingFile);
    s->add_option("--source", cr.source, "Source patch id")->capture_default_str();
    s->add_option("--model-config", cr.model_config, "Model parameters JSON")->check(CLI::ExistingFile);
    s->add_option("--tol", cr.tol, "Steady-state tolerance")->capture_default_str();
    s->add_option("--t-max", cr.t_max, "Integration horizon, days")->capture_default_str();
    s->add_option("--dt", cr.dt, "RK4 step, days")->capture_default_str();
    s->add_option("--out", cr_out, "Output directory")->required();
    commands.push_back({s, [&](RunMeta& m) {
                          if (!cr.model_config.empty()) m.add_config(cr.model_config);
                          cr.out = cr_out;
                          run_county_risk(cr);
                        },
                        [&] { return fs::path(cr_out); }});
  }

  ClusterArgs cl;
  std::string cl_out;
  {
    auto* s = app.add_subcommand("cluster", "DBSCAN geo-tags per user");
    s->add_option("--events", cl.events, "Events (NDJSON)")->required()->check(CLI::ExistingFile);
    s->add_option("--eps", cl.eps_m, "Radius, meters")->capture_default_str();
    s->add_option("--min-pts", cl.min_pts, "DBSCAN min_pts")->capture_default_str();
    s->add_option("--min-geo-events", cl.min_geo_events, "Skip users with fewer geo-tags")->capture_default_str();
    s->add_option("--out", cl_out, "Output directory")->required();
    commands.push_back({s, [&](RunMeta&) { cl.out = cl_out; run_cluster(cl); }, [&] { return fs::path(cl_out); }});
  }

  FeaturesArgs fe;
  std::string fe_out;
  {
    auto* s = app.add_subcommand("features", "Per-cluster feature records");
    s->add_option("--events", fe.events, "Events (NDJSON)")->required()->check(CLI::ExistingFile);
    s->add_option("--truth", fe.truth, "truth.json for training labels")->check(CLI::ExistingFile);
    s->add_option("--tz", fe.tz, "Fixed UTC offset in hours");
    s->add_option("--out", fe_out, "Output directory")->required();
    commands.push_back({s, [&](RunMeta&) { fe.out = fe_out; run_features(fe); }, [&] { return fs::path(fe_out); }});
  }

  TrainArgs tr;
  std::string tr_out;
  {
    auto* s = app.add_subcommand("train-cascade", "Train forest, scorer and verifier");
    s->add_option("--records", tr.records, "Labeled records CSV")->required()->check(CLI::ExistingFile);
    s->add_option("--seed", tr.seed, "Training seed")->required();
    s->add_option("--trees", tr.trees, "Forest size")->capture_default_str();
    s->add_option("--scorer-epochs", tr.scorer_epochs, "Scorer epochs")->capture_default_str();
    s->add_option("--verifier-epochs", tr.verifier_epochs, "Verifier epochs")->capture_default_str();
    s->add_option("--dropout", tr.dropout, "Dropout rate")->capture_default_str();
    s->add_option("--out", tr_out, "Output directory")->required();
    commands.push_back({s, [&](RunMeta& m) { m.seeds["train"] = tr.seed; tr.out = tr_out; run_train_cascade(tr); },
                        [&] { return fs::path(tr_out); }});
  }

  PredictArgs pr;
  std::string pr_out;
  {
    auto* s = app.add_subcommand("predict-homes", "Run the trained cascade on events");
    s->add_option("--events", pr.events, "Events (NDJSON)")->required()->check(CLI::ExistingFile);
    s->add_option("--model", pr.model, "cascade.json")->required()->check(CLI::ExistingFile);
    s->add_option("--tz", pr.tz, "Fixed UTC offset in hours");
    s->add_option("--jobs", pr.jobs, "Worker threads (output does not depend on it)")->capture_default_str();
    s->add_option("--truth", pr.truth, "truth.json for accuracy figures")->check(CLI::ExistingFile);
    s->add_option("--out", pr_out, "Output directory")->required();
    commands.push_back({s, [&](RunMeta&) { pr.out = pr_out; run_predict_homes(pr); },
                        [&] { return fs::path(pr_out); }});
  }

  NeighborhoodArgs nb;
  std::string nb_out;
  {
    auto* s = app.add_subcommand("neighborhood-risk", "Visitor and resident shares, high-risk intersection");
    s->add_option("--visitors", nb.visitors, "Events (NDJSON)")->required()->check(CLI::ExistingFile);
    s->add_option("--profiles", nb.profiles, "Profiles CSV to keep only source residents")->check(CLI::ExistingFile);
    s->add_option("--source-label", nb.source_label, "Profile label of the source zone")->capture_default_str();
    s->add_option("--homes", nb.homes, "predictions.json")->required()->check(CLI::ExistingFile);
    s->add_option("--neighborhoods", nb.neighborhoods, "Neighborhood GeoJSON")->required()->check(CLI::ExistingFile);
    s->add_option("--top-k", nb.top_k, "Rows per table considered high risk")->capture_default_str();
    s->add_option("--unit", nb.unit, "Visitor share unit")->check(CLI::IsMember({"events", "users"}))->capture_default_str();
    s->add_option("--within", nb.within, "GeoJSON with the metro area to restrict both tables to")
        ->check(CLI::ExistingFile);
    s->add_option("--within-id", nb.within_id, "Feature id of the metro area in --within");
    s->add_option("--county-risk", nb.county_risk, "county_risk.csv to include")->check(CLI::ExistingFile);
    s->add_option("--patches", nb.patches, "Patch GeoJSON for the county report")->check(CLI::ExistingFile);
    s->add_option("--out", nb_out, "Output directory")->required();
    commands.push_back({s, [&](RunMeta&) { nb.out = nb_out; run_neighborhood_risk(nb); },
                        [&] { return fs::path(nb_out); }});
  }

  PipelineArgs pl;
  std::string pl_out;
  fs::path pl_used;
  {
    auto* s = app.add_subcommand("pipeline", "Run every stage from one config file");
    s->add_option("--config", pl.config, "Pipeline JSON config")->required()->check(CLI::ExistingFile);
    s->add_option("--out", pl_out, "Output directory (default: config 'out' or pipeline_out)");
    s->add_option("--jobs", pl.jobs, "Worker threads (output does not depend on it)")->capture_default_str();
    commands.push_back({s, [&](RunMeta& m) {
                          m.add_config(pl.config);
                          if (!pl_out.empty()) pl.out = fs::path(pl_out);
                          std::uint64_t seed = 0, train_seed = 0;
                          pl_used = run_pipeline(pl, &seed, &train_seed);
                          m.seeds["seed"] = seed;
                          m.seeds["train_seed"] = train_seed;
                        },
                        [&] { return pl_used; }});
  }

  // Name unknown flags even when required ones are missing too.
  for (int i = 1; i < argc; ++i) {
    CLI::App* sub = nullptr;
    for (auto& cmd : commands) {
      if (cmd.app->get_name() == argv[i]) sub = cmd.app;
    }
    if (!sub) continue;
    for (int k = i + 1; k < argc; ++k) {
      std::string arg = argv[k];
      if (arg == "--") break;
      if (arg.size() < 2 || arg[0] != '-' || (arg[1] >= '0' && arg[1] <= '9') || arg[1] == '.') continue;
      arg = arg.substr(0, arg.find('='));
      if (!sub->get_option_no_throw(arg) && !app.get_option_no_throw(arg)) {
        std::cerr << "error[usage]: unknown option '" << arg << "' for '" << sub->get_name() << "'\n";
        return 2;
      }
    }
    break;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help, --version
    std::cerr << "error[usage]: " << e.what() << "\n";
    return 2;
  }
  spdlog::set_level(spdlog::level::from_str(log_level));

  for (auto& cmd : commands) {
    if (!cmd.app->parsed()) continue;
    try {
      RunMeta meta;
      meta.command = cmd.app->get_name();
      meta.args = collect_args(*cmd.app);
      if (pr.jobs == 0 || pl.jobs == 0) fail(Errc::config, "--jobs must be >= 1");
      cmd.run(meta);
      meta.args.erase("jobs");  // results never depend on it
      write_run_meta(cmd.out(), meta);
      return 0;
    } catch (const Error& e) {
      std::cerr << "error[" << to_string(e.code()) << "]: " << e.what() << "\n";
      return e.exit_code();
    } catch (const std::exception& e) {
      std::cerr << "error[internal]: " << e.what() << "\n";
      return 1;
    }
  }
  return 2;
}
