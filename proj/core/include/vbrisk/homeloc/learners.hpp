#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace vbrisk::homeloc {

// ---- random forest --------------------------------------------------------

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;  // go left when x[feature] <= threshold
  int left = -1;
  int right = -1;
  double home_fraction = 0.0;  // leaves only

  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // root at 0

  double leaf_value(std::span<const double> x) const;
  /// A tree votes home when the training majority of its leaf is home
  /// (ties count as home).
  bool votes_home(std::span<const double> x) const { return leaf_value(x) >= 0.5; }

  friend bool operator==(const DecisionTree&, const DecisionTree&) = default;
};

struct Forest {
  std::vector<DecisionTree> trees;

  std::size_t home_votes(std::span<const double> x) const;
  /// Kept iff at least one tree votes home.
  bool keeps(std::span<const double> x) const;

  friend bool operator==(const Forest&, const Forest&) = default;
};

struct ForestOptions {
  std::size_t trees = 100;
  std::size_t features_per_split = 3;  // round(sqrt(10))
  std::size_t max_depth = 64;
  std::size_t min_samples_split = 2;
};

struct ForestTraining {
  Forest forest;
  /// Per training row: trees whose bootstrap left the row out, and how many
  /// of those voted home.
  std::vector<std::size_t> oob_trees;
  std::vector<std::size_t> oob_home_votes;
};

/// Bootstrap-aggregated Gini trees grown to purity. Rows are feature vectors
/// of equal width. Both classes are required (Errc::validation otherwise).
ForestTraining forest_train_detailed(std::span<const std::vector<double>> x,
                                     const std::vector<bool>& y, const ForestOptions& options,
                                     std::uint64_t seed);
Forest forest_train(std::span<const std::vector<double>> x, const std::vector<bool>& y,
                    const ForestOptions& options, std::uint64_t seed);

// ---- feed-forward network -------------------------------------------------

enum class Optimizer { sgd, rmsprop };

struct NetworkOptions {
  std::vector<std::size_t> hidden{64, 64, 32, 16};  // one dropout layer after each
  double dropout = 0.3;
  Optimizer optimizer = Optimizer::sgd;
  double learning_rate = 0.05;
  std::size_t epochs = 60;
  std::size_t batch_size = 32;
  double rms_decay = 0.9;
  double rms_epsilon = 1e-7;
};

struct DenseLayer {
  std::size_t inputs = 0;
  std::size_t outputs = 0;
  std::vector<double> weights;  // row-major [output][input]
  std::vector<double> bias;

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

/// ReLU hidden layers, sigmoid output. Dropout only acts during training.
class Network {
 public:
  Network() = default;
  Network(std::size_t inputs, const NetworkOptions& options);

  double predict(std::span<const double> x) const;

  std::size_t inputs() const noexcept { return layers_.empty() ? 0 : layers_.front().inputs; }
  std::size_t dense_layers() const noexcept { return layers_.size(); }
  std::size_t dropout_layers() const noexcept { return layers_.empty() ? 0 : layers_.size() - 1; }
  double dropout() const noexcept { return dropout_; }
  bool trained() const noexcept { return !layers_.empty(); }

  const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
  static Network from_layers(std::vector<DenseLayer> layers, double dropout);

  friend bool operator==(const Network&, const Network&) = default;

 private:
  friend struct NetworkTrainer;
  std::vector<DenseLayer> layers_;
  double dropout_ = 0.0;
};

struct NetworkTraining {
  Network network;
  std::vector<double> loss_history;  // mean training cross-entropy per epoch
};

/// Minibatch training of a binary classifier on cross-entropy. Shuffle order,
/// initial weights and dropout masks all derive from `seed`.
NetworkTraining train_network(std::span<const std::vector<double>> x, std::span<const double> y,
                              const NetworkOptions& options, std::uint64_t seed);

}  // namespace vbrisk::homeloc
