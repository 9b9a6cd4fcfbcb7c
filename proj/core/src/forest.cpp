#include <algorithm>
#include <cmath>
#include <numeric>

#include "vbrisk/error.hpp"
#include "vbrisk/homeloc/learners.hpp"
#include "vbrisk/random.hpp"

namespace vbrisk::homeloc {
namespace {

struct Builder {
  std::span<const std::vector<double>> x;
  const std::vector<bool>& y;
  const ForestOptions& opt;
  Rng& rng;
  std::size_t width;
  DecisionTree tree;

  static double gini(double pos, double n) {
    if (n <= 0) return 0.0;
    const double p = pos / n;
    return 2.0 * p * (1.0 - p);
  }

  int grow(std::vector<std::size_t>& rows, std::size_t depth) {
    const int id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    double pos = 0;
    for (std::size_t r : rows) pos += y[r] ? 1.0 : 0.0;
    const double n = static_cast<double>(rows.size());
    const double frac = pos / n;
    tree.nodes[id].home_fraction = frac;
    if (pos == 0 || pos == n || depth >= opt.max_depth || rows.size() < opt.min_samples_split) {
      return id;
    }

    // Random feature order; stop once `features_per_split` non-constant
    // features were examined (constant ones do not count, as in common RF
    // implementations).
    std::vector<std::size_t> features(width);
    std::iota(features.begin(), features.end(), 0);
    rng.shuffle(std::span<std::size_t>(features));

    const double parent = gini(pos, n);
    double best_score = parent - 1e-12;
    int best_feature = -1;
    double best_threshold = 0.0;
    std::size_t examined = 0;
    std::vector<std::size_t> sorted(rows);
    for (std::size_t f : features) {
      if (examined >= opt.features_per_split) break;
      std::sort(sorted.begin(), sorted.end(), [&](std::size_t a, std::size_t b) {
        return x[a][f] < x[b][f] || (x[a][f] == x[b][f] && a < b);
      });
      if (x[sorted.front()][f] == x[sorted.back()][f]) continue;
      ++examined;
      double left_pos = 0;
      for (std::size_t k = 0; k + 1 < sorted.size(); ++k) {
        left_pos += y[sorted[k]] ? 1.0 : 0.0;
        const double a = x[sorted[k]][f];
        const double b = x[sorted[k + 1]][f];
        if (a == b) continue;
        const double nl = static_cast<double>(k + 1);
        const double nr = n - nl;
        const double score = (nl * gini(left_pos, nl) + nr * gini(pos - left_pos, nr)) / n;
        if (score < best_score) {
          best_score = score;
          best_feature = static_cast<int>(f);
          double mid = a + (b - a) / 2.0;
          if (!(mid < b)) mid = a;
          best_threshold = mid;
        }
      }
    }
    if (best_feature < 0) return id;

    std::vector<std::size_t> left, right;
    for (std::size_t r : rows) {
      (x[r][static_cast<std::size_t>(best_feature)] <= best_threshold ? left : right).push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();
    tree.nodes[id].feature = best_feature;
    tree.nodes[id].threshold = best_threshold;
    const int l = grow(left, depth + 1);
    const int r = grow(right, depth + 1);
    tree.nodes[id].left = l;
    tree.nodes[id].right = r;
    return id;
  }
};

}  // namespace

double DecisionTree::leaf_value(std::span<const double> x) const {
  if (nodes.empty()) return 0.0;
  std::size_t i = 0;
  while (nodes[i].feature >= 0) {
    const auto f = static_cast<std::size_t>(nodes[i].feature);
    i = static_cast<std::size_t>(x[f] <= nodes[i].threshold ? nodes[i].left : nodes[i].right);
  }
  return nodes[i].home_fraction;
}

std::size_t Forest::home_votes(std::span<const double> x) const {
  std::size_t votes = 0;
  for (const auto& t : trees) votes += t.votes_home(x) ? 1 : 0;
  return votes;
}

bool Forest::keeps(std::span<const double> x) const {
  return std::any_of(trees.begin(), trees.end(), [&](const DecisionTree& t) { return t.votes_home(x); });
}

ForestTraining forest_train_detailed(std::span<const std::vector<double>> x,
                                     const std::vector<bool>& y, const ForestOptions& options,
                                     std::uint64_t seed) {
  if (x.size() != y.size()) fail(Errc::validation, "forest: feature and label counts differ");
  if (x.empty()) fail(Errc::validation, "forest: empty training set");
  const std::size_t width = x.front().size();
  for (const auto& row : x) {
    if (row.size() != width) fail(Errc::validation, "forest: ragged feature rows");
    for (double v : row) {
      if (!std::isfinite(v)) fail(Errc::validation, "forest: non-finite feature value");
    }
  }
  const auto positives = static_cast<std::size_t>(std::count(y.begin(), y.end(), true));
  if (positives == 0 || positives == y.size()) {
    fail(Errc::validation, "forest: training data must contain both home and non-home records");
  }
  if (options.trees == 0 || options.features_per_split == 0) {
    fail(Errc::config, "forest: trees and features_per_split must be >= 1");
  }

  ForestTraining out;
  out.oob_trees.assign(x.size(), 0);
  out.oob_home_votes.assign(x.size(), 0);
  Rng root(seed);
  const std::size_t n = x.size();
  for (std::size_t t = 0; t < options.trees; ++t) {
    Rng rng = root.fork(t);
    std::vector<std::size_t> rows(n);
    std::vector<char> in_bag(n, 0);
    for (auto& r : rows) {
      r = static_cast<std::size_t>(rng.below(n));
      in_bag[r] = 1;
    }
    Builder b{x, y, options, rng, width, {}};
    b.grow(rows, 0);
    for (std::size_t i = 0; i < n; ++i) {
      if (in_bag[i]) continue;
      ++out.oob_trees[i];
      if (b.tree.votes_home(x[i])) ++out.oob_home_votes[i];
    }
    out.forest.trees.push_back(std::move(b.tree));
  }
  return out;
}

Forest forest_train(std::span<const std::vector<double>> x, const std::vector<bool>& y,
                    const ForestOptions& options, std::uint64_t seed) {
  return forest_train_detailed(x, y, options, seed).forest;
}

}  // namespace vbrisk::homeloc
