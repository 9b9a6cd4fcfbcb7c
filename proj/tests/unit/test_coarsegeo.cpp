#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "oracles.hpp"
#include "vbrisk/coarsegeo.hpp"
#include "vbrisk/error.hpp"
#include "vbrisk/random.hpp"

using namespace vbrisk;
using namespace vbrisk::coarsegeo;

namespace {

std::vector<LabeledText> disjoint_corpus() {
  std::vector<LabeledText> c;
  const std::vector<std::string> a{"playa", "coqui", "mofongo", "viejo"};
  const std::vector<std::string> b{"gator", "brickell", "heat", "wynwood"};
  for (int i = 0; i < 10; ++i) {
    c.push_back({a[i % 4] + " " + a[(i + 1) % 4] + " shared", "A"});
    c.push_back({b[i % 4] + " " + b[(i + 2) % 4] + " shared", "B"});
  }
  return c;
}

// hand-set model with known idf values
ZoneModel two_token_model() {
  ZoneModel m;
  m.tokens = {"alpha", "beta"};
  m.vocabulary = {{"alpha", 0}, {"beta", 1}};
  m.idf = {2.0, 1.0};
  m.labels = {"X", "Y"};
  m.weights = {{1.0, 0.0}, {0.0, 1.0}};
  m.intercepts = {0.0, 0.0};
  m.priors = {0.5, 0.5};
  return m;
}

}  // namespace

TEST(Tokenize, LowercasesAndSplits) {
  EXPECT_EQ(tokenize("Hello, WORLD!! x2"), (std::vector<std::string>{"hello", "world", "x2"}));
  EXPECT_TRUE(tokenize("  ,,, ").empty());
}

TEST(Featurize, EmptyTextIsZero) {
  EXPECT_TRUE(featurize("", two_token_model()).empty());
  EXPECT_TRUE(featurize("unknown words only", two_token_model()).empty());
}

TEST(Featurize, BinaryTermFrequency) {
  const auto m = two_token_model();
  const auto once = featurize("alpha", m);
  const auto five = featurize("alpha alpha ALPHA alpha alpha", m);
  EXPECT_EQ(once, five);
  ASSERT_EQ(once.entries.size(), 1u);
  EXPECT_DOUBLE_EQ(once.entries[0].second, 1.0);
}

TEST(Featurize, HandComputedNormalization) {
  const auto v = featurize("beta alpha", two_token_model());
  ASSERT_EQ(v.entries.size(), 2u);
  EXPECT_NEAR(v.entries[0].second, 2.0 / std::sqrt(5.0), 1e-15);
  EXPECT_NEAR(v.entries[1].second, 1.0 / std::sqrt(5.0), 1e-15);
}

TEST(Fit, IdfMatchesBruteForce) {
  const auto corpus = disjoint_corpus();
  const auto model = fit(corpus);
  std::vector<std::vector<std::string>> docs;
  for (const auto& d : corpus) docs.push_back(tokenize(d.text));
  const auto want = oracle::brute_idf(docs);
  ASSERT_EQ(model.tokens.size(), want.size());
  for (const auto& [tok, idf] : want) {
    const auto col = model.column(tok);
    ASSERT_TRUE(col) << tok;
    EXPECT_NEAR(model.idf[*col], idf, 1e-12) << tok;
  }
}

TEST(Fit, SeparableCorpusTrainsPerfectly) {
  const auto corpus = disjoint_corpus();
  const auto model = fit(corpus);
  for (const auto& d : corpus) EXPECT_EQ(predict_zone(d.text, model).zone, d.zone_label) << d.text;
  const auto p = predict_zone("coqui playa", model);
  EXPECT_EQ(p.zone, "A");
  EXPECT_GT(p.confidence, 0.5);
}

TEST(Fit, DeterministicWeights) {
  const auto a = fit(disjoint_corpus());
  const auto b = fit(disjoint_corpus());
  EXPECT_EQ(a.weights, b.weights);
  EXPECT_EQ(a.intercepts, b.intercepts);
}

TEST(Fit, LossNonIncreasing) {
  const auto r = fit_detailed(disjoint_corpus(), {.inverse_regularization = 1.0, .max_epochs = 300});
  ASSERT_GT(r.loss_history.size(), 2u);
  for (std::size_t i = 1; i < r.loss_history.size(); ++i) {
    EXPECT_LE(r.loss_history[i], r.loss_history[i - 1] + 1e-12) << "epoch " << i;
  }
}

TEST(Fit, SingleLabelRejected) {
  const std::vector<LabeledText> c{{"a b", "A"}, {"c", "A"}};
  try {
    fit(c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::validation);
  }
}

TEST(Predict, EmptyTextFallsBackToMajority) {
  auto corpus = disjoint_corpus();
  corpus.push_back({"gator", "B"});
  const auto model = fit(corpus);
  const auto p = predict_zone("", model);
  EXPECT_EQ(p.zone, "B");
  EXPECT_NEAR(p.confidence, 11.0 / 21.0, 1e-12);
}

TEST(Predict, TieGoesToSmallestLabel) {
  auto m = two_token_model();
  m.weights = {{0.0, 0.0}, {0.0, 0.0}};
  const auto p = predict_zone("alpha", m);
  EXPECT_EQ(p.zone, "X");
  EXPECT_DOUBLE_EQ(p.confidence, 0.5);
}

TEST(Predict, ProbabilitiesSumToOne) {
  const auto model = fit(disjoint_corpus());
  Rng rng(1);
  for (int i = 0; i < 200; ++i) {
    std::string text;
    for (int k = 0; k < 5; ++k) text += model.tokens[rng.below(model.tokens.size())] + " ";
    const auto p = zone_probabilities(text, model);
    EXPECT_NEAR(std::accumulate(p.begin(), p.end(), 0.0), 1.0, 1e-9);
  }
}

TEST(Predict, InvariantToOrderAndDuplication) {
  const auto model = fit(disjoint_corpus());
  const auto a = zone_probabilities("coqui heat playa", model);
  const auto b = zone_probabilities("playa playa heat coqui COQUI", model);
  EXPECT_EQ(a, b);
}

TEST(Featurize, NormInvariantOnFuzz) {
  const auto model = fit(disjoint_corpus());
  Rng rng(77);
  const std::string alphabet = "abcdefghijklmnopqrstuvwxyz ,.!ABCDE0123456789\xc3\xb1";
  for (int i = 0; i < 2000; ++i) {
    std::string text;
    const auto len = rng.below(60);
    for (std::uint64_t k = 0; k < len; ++k) {
      if (rng.bernoulli(0.2)) {
        text += model.tokens[rng.below(model.tokens.size())] + " ";
      } else {
        text += alphabet[rng.below(alphabet.size())];
      }
    }
    const double n = featurize(text, model).norm();
    EXPECT_TRUE(n == 0.0 || std::abs(n - 1.0) <= 1e-9) << n;
  }
}

TEST(Model, JsonRoundTrip) {
  const auto model = fit(disjoint_corpus());
  const auto back = model_from_json(model_to_json(model));
  EXPECT_EQ(back.tokens, model.tokens);
  EXPECT_EQ(back.labels, model.labels);
  EXPECT_EQ(back.weights, model.weights);
  EXPECT_EQ(back.idf, model.idf);
  EXPECT_EQ(model_to_json(back), model_to_json(model));
}

TEST(Corpus, CsvRoundTrip) {
  const auto c = disjoint_corpus();
  const auto back = parse_corpus(format_corpus(c));
  ASSERT_EQ(back.size(), c.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    EXPECT_EQ(back[i].text, c[i].text);
    EXPECT_EQ(back[i].zone_label, c[i].zone_label);
  }
}
