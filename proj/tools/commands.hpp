#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "vbrisk/epimodel.hpp"
#include "vbrisk/synth.hpp"

namespace vbrisk::tool {

namespace fs = std::filesystem;

struct SynthArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> n_users;
  std::optional<synth::SynthConfig> inline_config;  // used instead of `config`
  fs::path out;
};
synth::SynthOutput run_synth(const SynthArgs& a);

struct SnowballArgs {
  std::string graph;
  std::string profiles;
  std::string seeds;
  std::vector<std::string> keep{"PR", "FL"};
  fs::path out;
};
void run_snowball(const SnowballArgs& a);

struct FitZonesArgs {
  std::string corpus;
  double inverse_regularization = 1.0;
  std::size_t max_epochs = 1000;
  double holdout = 0.0;
  std::uint64_t seed = 0;
  fs::path out;
};
void run_fit_zones(const FitZonesArgs& a);

struct FluxArgs {
  std::string events;
  std::string zones;
  std::string source = "PR";
  std::string air_traffic;
  std::string dest_region;  // empty: every destination of the source
  std::string zone_model;   // empty: geo-tags only
  std::string sample;       // empty: every user
  double min_confidence = 0.5;
  double return_factor = 1.0;
  fs::path out;
};
void run_flux(const FluxArgs& a);

struct CountyRiskArgs {
  std::string patches;
  std::string rates;
  std::string source = "PR";
  std::string model_config;
  std::optional<epi::ModelConfig> inline_model;
  double tol = 1e-9;
  double t_max = 200'000.0;
  double dt = 0.1;
  fs::path out;
};
void run_county_risk(const CountyRiskArgs& a);

struct ClusterArgs {
  std::string events;
  double eps_m = 100.0;
  std::size_t min_pts = 1;
  std::size_t min_geo_events = 5;
  fs::path out;
};
void run_cluster(const ClusterArgs& a);

struct FeaturesArgs {
  std::string events;
  std::string truth;
  std::optional<double> tz;
  fs::path out;
  std::string file_name = "records.csv";
};
void run_features(const FeaturesArgs& a);

struct TrainArgs {
  std::string records;
  std::uint64_t seed = 0;
  std::size_t trees = 100;
  std::size_t scorer_epochs = 60;
  std::size_t verifier_epochs = 80;
  double dropout = 0.3;
  fs::path out;
};
void run_train_cascade(const TrainArgs& a);

struct PredictArgs {
  std::string events;
  std::string model;
  std::optional<double> tz;
  std::size_t jobs = 1;
  std::string truth;  // optional: adds accuracy figures to the summary
  fs::path out;
};
void run_predict_homes(const PredictArgs& a);

struct NeighborhoodArgs {
  std::string visitors;
  std::string profiles;  // with `source_label`, keeps only that zone's residents
  std::string source_label = "PR";
  std::string homes;
  std::string neighborhoods;
  std::size_t top_k = 5;
  std::string unit = "events";
  std::string within;       // optional GeoJSON holding the metro area
  std::string within_id;    // feature id inside `within`
  std::string county_risk;  // optional county_risk.csv to include in the report
  std::string patches;      // geometry for the county report
  fs::path out;
};
void run_neighborhood_risk(const NeighborhoodArgs& a);

struct PipelineArgs {
  std::string config;
  std::optional<fs::path> out;
  std::size_t jobs = 1;
};
/// Returns the output directory used.
fs::path run_pipeline(const PipelineArgs& a, std::uint64_t* seed_out, std::uint64_t* train_seed_out);

}  // namespace vbrisk::tool
