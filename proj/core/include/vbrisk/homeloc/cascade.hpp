#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vbrisk/homeloc/clustering.hpp"
#include "vbrisk/homeloc/learners.hpp"

namespace vbrisk::homeloc {

/// Per-feature z-score statistics from the training records.
struct FeatureNorm {
  Features mean{};
  Features scale{};  // standard deviation, 1 where a feature is constant

  std::vector<double> apply(const Features& f) const;
  static FeatureNorm fit(std::span<const ClusterRecord> records);

  friend bool operator==(const FeatureNorm&, const FeatureNorm&) = default;
};

/// Verifier input: 10 normalized features, the candidate's scorer output,
/// the runner-up score (0 without one) and log1p of the surviving count.
inline constexpr std::size_t kVerifierInputs = kFeatureCount + 3;

struct CascadeOptions {
  ForestOptions forest;
  NetworkOptions scorer{.optimizer = Optimizer::sgd, .learning_rate = 0.05, .epochs = 60};
  NetworkOptions verifier{.optimizer = Optimizer::rmsprop, .learning_rate = 1e-3, .epochs = 80};
  double accept_threshold = 0.5;  // accept iff verifier probability > threshold
};

struct CascadeModel {
  FeatureNorm norm;
  Forest forest;
  Network scorer;
  Network verifier;
  std::uint64_t seed = 0;
  double accept_threshold = 0.5;

  bool trained() const noexcept {
    return !forest.trees.empty() && scorer.trained() && verifier.trained();
  }
  friend bool operator==(const CascadeModel&, const CascadeModel&) = default;
};

struct HomePrediction {
  std::string user_id;
  std::optional<geo::GeoPoint> home;  // empty = unknown
  double score = 0.0;                 // verifier probability, 0 when no candidate

  bool known() const noexcept { return home.has_value(); }
  friend bool operator==(const HomePrediction&, const HomePrediction&) = default;
};

/// Indices of the records that at least one tree votes home on.
std::vector<std::size_t> forest_prune(std::span<const ClusterRecord> records, const CascadeModel& model);

/// Scorer probability per record.
std::vector<double> scorer_scores(std::span<const ClusterRecord> records, const CascadeModel& model);

/// Index of the highest-scoring record; ties go to the earliest first event,
/// then the lower cluster index. Empty input gives nullopt.
std::optional<std::size_t> scorer_rank(std::span<const ClusterRecord> records,
                                       std::span<const double> scores);

/// Verifier features for `candidate` among the surviving `scores`.
std::vector<double> verifier_input(const ClusterRecord& candidate, std::span<const double> scores,
                                   std::size_t candidate_index, const CascadeModel& model);

/// Home verdict iff probability > threshold (strict).
HomePrediction verifier_decide(const ClusterRecord& candidate, double probability,
                               double threshold = 0.5);

/// Full cascade for one user's records: prune, rank, verify.
HomePrediction predict_user(const std::string& user_id, std::span<const ClusterRecord> records,
                            const CascadeModel& model);

struct TrainingReport {
  std::size_t records = 0;
  std::size_t surviving = 0;
  std::size_t positives = 0;
  std::size_t surviving_positives = 0;
  std::size_t candidates = 0;
  std::vector<double> scorer_loss;
  std::vector<double> verifier_loss;
};

/// Trains forest, scorer and verifier on labeled records (unlabeled ones are
/// skipped). Scorer training uses the records that survive out-of-bag pruning;
/// the verifier sees each user's candidate. Single-threaded and
/// bit-reproducible for a fixed seed.
CascadeModel train_cascade(std::span<const ClusterRecord> records, const CascadeOptions& options,
                           std::uint64_t seed, TrainingReport* report = nullptr);

struct PredictOptions {
  std::optional<double> utc_offset_hours;
  DbscanOptions dbscan;
  std::size_t min_geo_events = kMinGeoEvents;
  std::size_t jobs = 1;
};

/// dbscan -> extract -> prune -> rank -> decide for every user with any
/// event; users with fewer than `min_geo_events` geo events are unknown.
/// Sorted by user id; independent of `jobs`. Errc::config if untrained.
std::vector<HomePrediction> predict_homes(std::span<const ingest::ActivityEvent> events,
                                          const CascadeModel& model,
                                          const PredictOptions& options = {});

std::string cascade_to_json(const CascadeModel& model);
CascadeModel cascade_from_json(std::string_view text);
void save_cascade(const std::string& path, const CascadeModel& model);
CascadeModel load_cascade(const std::string& path);

/// JSON array of {"user_id", "verdict": "home"|"unknown", "lat", "lon", "score"}.
std::string predictions_to_json(std::span<const HomePrediction> predictions);
std::vector<HomePrediction> predictions_from_json(std::string_view text);
void save_predictions(const std::string& path, std::span<const HomePrediction> predictions);
std::vector<HomePrediction> load_predictions(const std::string& path);

}  // namespace vbrisk::homeloc
