#include <benchmark/benchmark.h>

#include <cmath>
#include <string>
#include <vector>

#include "vbrisk/coarsegeo.hpp"
#include "vbrisk/epimodel.hpp"
#include "vbrisk/homeloc/clustering.hpp"
#include "vbrisk/homeloc/learners.hpp"
#include "vbrisk/random.hpp"

using namespace vbrisk;

namespace {

epi::PatchGraph county_graph(std::size_t n) {
  Rng rng(1);
  std::vector<geo::Patch> patches;
  for (std::size_t i = 0; i < n; ++i) {
    const double lat = static_cast<double>(i / 10), lon = static_cast<double>(i % 10);
    const double nh = rng.uniform(1e4, 2e6);
    patches.push_back({"p" + std::to_string(i), "", {{{{lat, lon}, {lat, lon + 0.9}, {lat + 0.9, lon + 0.9},
                                                        {lat + 0.9, lon}}}}, nh, 1.5 * nh});
  }
  flux::FluxMatrix a(n);
  for (std::size_t i = 1; i < n; ++i) {
    if (!rng.bernoulli(0.2)) continue;
    a(0, i) = rng.uniform(1e-6, 1e-4);
    a(i, 0) = rng.uniform(1e-6, 1e-4);
  }
  return epi::PatchGraph(patches, a, 0);
}

void BM_Rhs(benchmark::State& state) {
  const auto g = county_graph(static_cast<std::size_t>(state.range(0)));
  auto s = epi::disease_free_state(g);
  epi::seed_prevalence(s, g, 0, 0.01, 0.18);
  epi::EpiState d(g.size());
  for (auto _ : state) {
    epi::rhs_into(s, g, {}, d);
    benchmark::DoNotOptimize(d);
  }
}
BENCHMARK(BM_Rhs)->Arg(4)->Arg(68)->Arg(400);

void BM_StepRk4(benchmark::State& state) {
  const auto g = county_graph(68);
  auto s = epi::disease_free_state(g);
  epi::seed_prevalence(s, g, 0, 0.01, 0.18);
  for (auto _ : state) {
    s = epi::step_rk4(s, g, {}, 0.1);
    benchmark::DoNotOptimize(s);
  }
}
BENCHMARK(BM_StepRk4);

void BM_Dbscan(benchmark::State& state) {
  Rng rng(2);
  std::vector<ingest::ActivityEvent> ev;
  for (int64_t i = 0; i < state.range(0); ++i) {
    ingest::ActivityEvent e;
    e.user_id = "u";
    e.geo = geo::GeoPoint{25.7 + rng.uniform(-0.02, 0.02), -80.2 + rng.uniform(-0.02, 0.02)};
    ev.push_back(e);
  }
  for (auto _ : state) benchmark::DoNotOptimize(homeloc::dbscan_user(ev));
}
BENCHMARK(BM_Dbscan)->Arg(50)->Arg(500);

void BM_Featurize(benchmark::State& state) {
  std::vector<coarsegeo::LabeledText> corpus;
  for (int z = 0; z < 4; ++z)
    for (int d = 0; d < 50; ++d)
      corpus.push_back({"word" + std::to_string(z) + "a word" + std::to_string(z) + "b common " + std::to_string(d),
                        "zone" + std::to_string(z)});
  const auto model = coarsegeo::fit(corpus, {.max_epochs = 50});
  const std::string text = "common word1a word2b something else entirely word3a";
  for (auto _ : state) benchmark::DoNotOptimize(coarsegeo::featurize(text, model));
}
BENCHMARK(BM_Featurize);

void BM_ForestTrain(benchmark::State& state) {
  Rng rng(3);
  std::vector<std::vector<double>> x;
  std::vector<bool> y;
  for (int i = 0; i < 500; ++i) {
    std::vector<double> row(10);
    for (auto& v : row) v = rng.uniform();
    y.push_back(row[0] + row[1] > 1.0);
    x.push_back(std::move(row));
  }
  for (auto _ : state) benchmark::DoNotOptimize(homeloc::forest_train(x, y, {.trees = 20}, 1));
}
BENCHMARK(BM_ForestTrain)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
