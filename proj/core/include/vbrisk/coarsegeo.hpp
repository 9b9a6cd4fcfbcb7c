#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace vbrisk::coarsegeo {

/// Sorted (column, value) pairs.
struct SparseVector {
  std::vector<std::pair<std::uint32_t, double>> entries;

  bool empty() const noexcept { return entries.empty(); }
  double norm() const noexcept;

  friend bool operator==(const SparseVector&, const SparseVector&) = default;
};

/// Lowercases ASCII, splits on ASCII non-alphanumerics. Bytes >= 0x80 are
/// kept inside tokens so UTF-8 words survive intact.
std::vector<std::string> tokenize(std::string_view text);

/// Bag-of-unigrams multinomial logistic-regression zone classifier.
struct ZoneModel {
  std::vector<std::string> tokens;  // column -> token
  std::unordered_map<std::string, std::uint32_t> vocabulary;  // token -> column
  std::vector<double> idf;          // per column, >= 0
  std::vector<std::string> labels;  // sorted, unique
  std::vector<std::vector<double>> weights;  // [label][column]
  std::vector<double> intercepts;            // [label]
  std::vector<double> priors;                // training label frequencies
  double inverse_regularization = 1.0;

  bool fitted() const noexcept { return !labels.empty(); }
  std::optional<std::uint32_t> column(std::string_view token) const;
  /// Label with the largest prior; ties go to the lexicographically smallest.
  std::size_t majority_label() const;
};

/// Binary TF times idf over distinct in-vocabulary tokens, then l2
/// normalised. Empty or all out-of-vocabulary text gives the zero vector.
SparseVector featurize(std::string_view text, const ZoneModel& model);

struct LabeledText {
  std::string text;
  std::string zone_label;
};

struct FitOptions {
  /// Inverse l2 strength C: objective = mean log-loss + ||W||^2 / (2 C N).
  double inverse_regularization = 1.0;
  std::size_t max_epochs = 1000;
  double gradient_tolerance = 1e-6;
};

struct FitResult {
  ZoneModel model;
  std::vector<double> loss_history;  // objective before each epoch, plus the final value
  std::size_t epochs = 0;
  bool converged = false;  // gradient norm fell below tolerance
};

/// idf(t) = ln((1 + N) / (1 + df_t)) + 1. Full-batch gradient descent with
/// the fixed step 1 / L, where L bounds the objective's curvature, so the
/// objective never increases between epochs. Needs >= 2 distinct labels
/// (Errc::validation otherwise).
FitResult fit_detailed(std::span<const LabeledText> corpus, const FitOptions& options = {});
ZoneModel fit(std::span<const LabeledText> corpus, const FitOptions& options = {});

struct ZonePrediction {
  std::string zone;
  double confidence = 0.0;
};

/// Softmax probability per label, in `model.labels` order. Zero-vector
/// input yields the training priors.
std::vector<double> zone_probabilities(std::string_view text, const ZoneModel& model);

/// Argmax of zone_probabilities; ties go to the lexicographically smallest
/// label. Zero-vector input returns the majority label with its prior.
ZonePrediction predict_zone(std::string_view text, const ZoneModel& model);

std::string model_to_json(const ZoneModel& model);
ZoneModel model_from_json(std::string_view text);
void save_model(const std::string& path, const ZoneModel& model);
ZoneModel load_model(const std::string& path);

/// CSV with header `zone_label,text`.
std::vector<LabeledText> parse_corpus(std::string_view text);
std::vector<LabeledText> load_corpus(const std::string& path);
std::string format_corpus(std::span<const LabeledText> corpus);

}  // namespace vbrisk::coarsegeo
