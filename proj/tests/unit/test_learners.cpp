#include <gtest/gtest.h>

#include <cmath>

#include "vbrisk/error.hpp"
#include "vbrisk/homeloc/learners.hpp"
#include "vbrisk/random.hpp"

using namespace vbrisk;
using namespace vbrisk::homeloc;

namespace {

struct Data {
  std::vector<std::vector<double>> x;
  std::vector<bool> yb;
  std::vector<double> yd;
};

// label = x0 + x1 > 1 on the unit square, three noise columns
Data linear_data(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  Data d;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> row{rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform()};
    const bool y = row[0] + row[1] > 1.0;
    d.x.push_back(row);
    d.yb.push_back(y);
    d.yd.push_back(y ? 1.0 : 0.0);
  }
  return d;
}

}  // namespace

TEST(Forest, RequiresBothClasses) {
  const std::vector<std::vector<double>> x{{1}, {2}};
  const std::vector<bool> y{true, true};
  try {
    forest_train(x, y, {}, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::validation);
  }
}

TEST(Forest, LearnsSeparableRule) {
  const auto train = linear_data(400, 1);
  const auto test = linear_data(200, 2);
  const auto f = forest_train(train.x, train.yb, {.trees = 30}, 9);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < test.x.size(); ++i) {
    hits += (2 * f.home_votes(test.x[i]) > f.trees.size()) == test.yb[i];
  }
  EXPECT_GE(static_cast<double>(hits) / 200.0, 0.9);
}

TEST(Forest, FullyGrownTreesMemorizeTheirBootstrap) {
  const auto d = linear_data(100, 3);
  const auto f = forest_train(d.x, d.yb, {.trees = 20}, 4);
  // every training row is in some bootstrap sample, so at least one tree
  // reproduces its label; positives are therefore always kept
  for (std::size_t i = 0; i < d.x.size(); ++i) {
    if (d.yb[i]) EXPECT_TRUE(f.keeps(d.x[i]));
  }
}

TEST(Forest, OobBookkeeping) {
  const auto d = linear_data(150, 5);
  const auto t = forest_train_detailed(d.x, d.yb, {.trees = 25}, 6);
  ASSERT_EQ(t.oob_trees.size(), d.x.size());
  std::size_t total = 0;
  for (std::size_t i = 0; i < d.x.size(); ++i) {
    EXPECT_LE(t.oob_home_votes[i], t.oob_trees[i]);
    EXPECT_LE(t.oob_trees[i], 25u);
    total += t.oob_trees[i];
  }
  // each bootstrap leaves out about (1 - 1/n)^n of the rows
  EXPECT_NEAR(static_cast<double>(total) / (25.0 * 150.0), std::exp(-1.0), 0.05);
}

TEST(Forest, Deterministic) {
  const auto d = linear_data(120, 7);
  EXPECT_EQ(forest_train(d.x, d.yb, {.trees = 10}, 1), forest_train(d.x, d.yb, {.trees = 10}, 1));
  EXPECT_NE(forest_train(d.x, d.yb, {.trees = 10}, 1), forest_train(d.x, d.yb, {.trees = 10}, 2));
}

TEST(Network, ArchitectureAndInference) {
  const Network n(13, NetworkOptions{});
  EXPECT_EQ(n.inputs(), 13u);
  EXPECT_EQ(n.dense_layers(), 5u);
  EXPECT_EQ(n.dropout_layers(), 4u);
  const std::vector<std::size_t> widths{64, 64, 32, 16, 1};
  for (std::size_t k = 0; k < 5; ++k) EXPECT_EQ(n.layers()[k].outputs, widths[k]);
  const std::vector<double> x(13, 0.3);
  const double p = n.predict(x);
  EXPECT_EQ(p, n.predict(x));  // dropout inactive at inference
  EXPECT_GT(p, 0.0);
  EXPECT_LT(p, 1.0);
}

TEST(Network, SgdAndRmsPropLearn) {
  const auto train = linear_data(600, 8);
  const auto test = linear_data(300, 9);
  for (auto opt : {Optimizer::sgd, Optimizer::rmsprop}) {
    NetworkOptions o;
    o.optimizer = opt;
    o.learning_rate = opt == Optimizer::sgd ? 0.05 : 1e-3;
    o.epochs = 60;
    const auto r = train_network(train.x, train.yd, o, 3);
    EXPECT_LT(r.loss_history.back(), r.loss_history.front());
    std::size_t hits = 0;
    for (std::size_t i = 0; i < test.x.size(); ++i) hits += (r.network.predict(test.x[i]) > 0.5) == test.yb[i];
    EXPECT_GE(static_cast<double>(hits) / 300.0, 0.85) << (opt == Optimizer::sgd ? "sgd" : "rmsprop");
  }
}

TEST(Network, SeedReproducible) {
  const auto d = linear_data(100, 10);
  NetworkOptions o;
  o.epochs = 3;
  EXPECT_EQ(train_network(d.x, d.yd, o, 5).network, train_network(d.x, d.yd, o, 5).network);
  EXPECT_NE(train_network(d.x, d.yd, o, 5).network, train_network(d.x, d.yd, o, 6).network);
}

TEST(Network, FromLayersRoundTrip) {
  const Network n(4, NetworkOptions{.hidden = {3}});
  const auto copy = Network::from_layers(n.layers(), n.dropout());
  EXPECT_EQ(copy, n);
  EXPECT_THROW(Network::from_layers({}, 0.3), Error);
}
