#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "support.hpp"
#include "vbrisk/epimodel.hpp"
#include "vbrisk/error.hpp"
#include "vbrisk/random.hpp"

using namespace vbrisk;
using namespace vbrisk::epi;
using C = Compartment;
namespace ts = testing_support;

namespace {

std::vector<geo::Patch> make_patches(std::size_t n, double base = 1e4) {
  std::vector<geo::Patch> out;
  for (std::size_t i = 0; i < n; ++i) {
    const double nh = base * static_cast<double>(i + 1);
    out.push_back({"p" + std::to_string(i), "", ts::box(i, 0, i + 0.5, 0.5), nh, 1.5 * nh});
  }
  return out;
}

flux::FluxMatrix random_alpha(std::size_t n, Rng& rng, double scale, bool dense) {
  flux::FluxMatrix a(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j && (dense || rng.bernoulli(0.5))) a(i, j) = rng.uniform(0, scale);
  return a;
}

EpiState random_state(const PatchGraph& g, Rng& rng) {
  EpiState s(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double nh = g.human_population()[i];
    s(i, C::E_h) = rng.uniform(0, 0.01) * nh;
    s(i, C::I_h) = rng.uniform(0, 0.01) * nh;
    s(i, C::A_h) = rng.uniform(0, 0.01) * nh;
    s(i, C::R_h) = rng.uniform(0, 0.05) * nh;
    s(i, C::S_h) = nh - s(i, C::E_h) - s(i, C::I_h) - s(i, C::A_h) - s(i, C::R_h);
    const double nv = g.vector_capacity()[i];
    s(i, C::I_v) = rng.uniform(0, 0.02) * nv;
    s(i, C::S_v) = nv - s(i, C::I_v);
  }
  return s;
}

oracle::State to_oracle(const EpiState& s) {
  oracle::State o(s.patches(), std::vector<double>(7));
  for (std::size_t i = 0; i < s.patches(); ++i)
    for (std::size_t c = 0; c < 7; ++c) o[i][c] = s(i, static_cast<C>(c));
  return o;
}

oracle::Params to_oracle(const EpiParams& p) {
  return {p.b, p.beta_hv, p.beta_vh, p.delta, p.gamma, p.phi, p.mu};
}

std::vector<std::vector<double>> to_oracle(const flux::FluxMatrix& a) {
  std::vector<std::vector<double>> m(a.size(), std::vector<double>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a.size(); ++j) m[i][j] = a(i, j);
  return m;
}

}  // namespace

TEST(Rhs, DiseaseFreeEquilibriumIsExactlyZero) {
  Rng rng(1);
  auto patches = make_patches(4);
  // balanced flux: symmetric per-capita exchange with equal populations
  for (auto& p : patches) {
    p.human_population = 5e4;
    p.vector_capacity = 7.5e4;
  }
  flux::FluxMatrix a(4);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j)
      if (i != j) a(i, j) = 1e-3;
  const PatchGraph g(patches, a);
  const auto d = rhs(disease_free_state(g), g, {});
  for (double v : d.values()) EXPECT_EQ(v, 0.0);
  const PatchGraph zero(make_patches(3), flux::FluxMatrix(3));
  const auto dz = rhs(disease_free_state(zero), zero, {});
  for (double v : dz.values()) EXPECT_EQ(v, 0.0);
}

TEST(Rhs, IncubationSplitFromTuningTable) {
  const PatchGraph g(make_patches(1, 1000), flux::FluxMatrix(1));
  EpiState s = disease_free_state(g);
  s(0, C::S_h) = 900;
  s(0, C::E_h) = 100;
  const auto d = rhs(s, g, {});
  EXPECT_NEAR(d(0, C::I_h), 0.2 * 0.82 * 100, 1e-12);
  EXPECT_NEAR(d(0, C::A_h), 0.2 * 0.18 * 100, 1e-12);
  EXPECT_NEAR(d(0, C::I_h), 16.4, 1e-12);
  EXPECT_NEAR(d(0, C::A_h), 3.6, 1e-12);
  EXPECT_NEAR(d(0, C::E_h), -20.0, 1e-12);
}

TEST(Rhs, FluxContributionsCancel) {
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const PatchGraph g(make_patches(2), random_alpha(2, rng, 0.05, true));
    const auto s = random_state(g, rng);
    EpiParams none{.b = 0, .beta_hv = 0, .beta_vh = 0, .delta = 0, .gamma = 0, .phi = 0, .mu = 0};
    const auto d = rhs(s, g, none);
    double total = 0, scale = 0;
    for (std::size_t i = 0; i < 2; ++i)
      for (std::size_t c = 0; c < kHumanCompartments; ++c) {
        total += d(i, static_cast<C>(c));
        scale += std::abs(d(i, static_cast<C>(c)));
      }
    EXPECT_LE(std::abs(total), 1e-12 * std::max(1.0, scale));
  }
}

TEST(Rhs, MatchesOracleDerivative) {
  Rng rng(3);
  const PatchGraph g(make_patches(5), random_alpha(5, rng, 0.01, false));
  const auto s = random_state(g, rng);
  const EpiParams p{};
  const auto d = rhs(s, g, p);
  std::vector<double> nh(g.human_population().begin(), g.human_population().end());
  std::vector<double> nv(g.vector_capacity().begin(), g.vector_capacity().end());
  const auto od = oracle::derivative(to_oracle(s), to_oracle(g.alpha()), nh, nv, to_oracle(p), -1);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t c = 0; c < 7; ++c)
      EXPECT_NEAR(d(i, static_cast<C>(c)), od[i][c], 1e-9 * std::max(1.0, std::abs(od[i][c])));
}

TEST(Rk4, ZeroDerivativeIsIdentity) {
  const PatchGraph g(make_patches(3), flux::FluxMatrix(3));
  const auto s = disease_free_state(g);
  EXPECT_EQ(step_rk4(s, g, {}, 0.1), s);
}

TEST(Rk4, PureRecoveryMatchesExponential) {
  const PatchGraph g(make_patches(1, 1000), flux::FluxMatrix(1));
  EpiState s(1);
  s(0, C::I_h) = 100;
  EpiParams p{.b = 0, .beta_hv = 0, .beta_vh = 0, .delta = 0, .gamma = 0.25, .phi = 0, .mu = 0};
  const auto out = step_rk4(s, g, p, 0.1);
  EXPECT_NEAR(out(0, C::I_h), 100 * std::exp(-0.025), 1e-8);
  EXPECT_NEAR(out(0, C::R_h), 100 - 100 * std::exp(-0.025), 1e-8);
}

TEST(Rk4, AgreesWithEulerOracle) {
  Rng rng(4);
  const PatchGraph g(make_patches(3), random_alpha(3, rng, 0.02, true));
  EpiState s = disease_free_state(g);
  s(0, C::I_h) = 50;
  s(1, C::I_v) = 200;
  const EpiParams p{};
  EpiState x = s;
  for (int k = 0; k < 2000; ++k) x = step_rk4(x, g, p, 0.05);  // 100 days
  std::vector<double> nh(g.human_population().begin(), g.human_population().end());
  std::vector<double> nv(g.vector_capacity().begin(), g.vector_capacity().end());
  const auto e = oracle::euler(to_oracle(s), to_oracle(g.alpha()), nh, nv, to_oracle(p), 1e-4, 100.0);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t c = 0; c < 7; ++c) {
      const double ref = e[i][c];
      EXPECT_LE(std::abs(x(i, static_cast<C>(c)) - ref) / std::max(std::abs(ref), 1.0), 1e-4)
          << "patch " << i << " compartment " << c;
    }
}

TEST(Rk4, NegativeInputTriggersStiffnessError) {
  const PatchGraph g(make_patches(1), flux::FluxMatrix(1));
  EpiState s = disease_free_state(g);
  s(0, C::R_h) = -5;
  try {
    step_rk4(s, g, {}, 0.1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::stiffness);
  }
}

TEST(Rk4, NeverReturnsNegativeCompartments) {
  Rng rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    const PatchGraph g(make_patches(3), random_alpha(3, rng, 2.0, true));
    EpiState s = random_state(g, rng);
    for (int k = 0; k < 50; ++k) {
      s = step_rk4(s, g, {}, 1.0);
      for (double v : s.values()) ASSERT_GE(v, 0.0);
    }
  }
}

TEST(Conservation, HumansOverThousandDays) {
  Rng rng(6);
  const PatchGraph g(make_patches(6), random_alpha(6, rng, 0.05, true));
  EpiState s = random_state(g, rng);
  const double before = s.total_humans();
  for (int k = 0; k < 10000; ++k) s = step_rk4(s, g, {}, 0.1);
  EXPECT_LE(std::abs(s.total_humans() - before) / before, 1e-8);
}

TEST(Steady, DiseaseFreeConvergesImmediately) {
  const PatchGraph g(make_patches(3), flux::FluxMatrix(3));
  const auto init = disease_free_state(g);
  const auto ss = integrate_to_steady(init, g, {});
  EXPECT_TRUE(ss.converged);
  EXPECT_EQ(ss.t_onset, 0.0);
  EXPECT_EQ(ss.residual, 0.0);
  EXPECT_EQ(ss.state, init);
}

TEST(Steady, NoVectorsEveryoneRecovers) {
  auto patches = make_patches(1, 1000);
  patches[0].vector_capacity = 0;
  const PatchGraph g(patches, flux::FluxMatrix(1));
  EpiState s = disease_free_state(g);
  s(0, C::S_h) = 900;
  s(0, C::E_h) = 100;
  const auto ss = integrate_to_steady(s, g, {});
  ASSERT_TRUE(ss.converged);
  EXPECT_NEAR(ss.state(0, C::E_h), 0, 1e-6);
  EXPECT_NEAR(ss.state(0, C::I_h), 0, 1e-6);
  EXPECT_NEAR(ss.state(0, C::A_h), 0, 1e-6);
  EXPECT_NEAR(ss.state(0, C::R_h), 100, 1e-6);
  EXPECT_NEAR(ss.state(0, C::S_h), 900, 1e-9);
}

TEST(Steady, VectorTotalsRelaxToCapacity) {
  Rng rng(7);
  auto patches = make_patches(3);
  const PatchGraph g(patches, random_alpha(3, rng, 1e-3, true), 0);
  EpiState s = disease_free_state(g);
  seed_prevalence(s, g, 0, 0.01, 0.18);
  for (std::size_t i = 1; i < 3; ++i) s(i, C::S_v) *= 0.5;  // start far from capacity
  const auto ss = integrate_to_steady(s, g, {});
  ASSERT_TRUE(ss.converged);
  for (std::size_t i = 0; i < 3; ++i) {
    const double nv = g.vector_capacity()[i];
    EXPECT_LE(std::abs(ss.state.vectors(i) - nv) / nv, 1e-6) << i;
  }
}

TEST(Steady, DoublingInfluxNeverLowersInfections) {
  for (std::uint64_t seed = 100; seed < 105; ++seed) {
    Rng rng(seed);
    auto patches = make_patches(4);
    flux::FluxMatrix a(4);
    for (std::size_t i = 1; i < 4; ++i) {
      const double persons = rng.uniform(50, 500);
      a(0, i) = persons / patches[0].human_population;
      a(i, 0) = rng.uniform(0.5, 1.0) * persons / patches[i].human_population;
    }
    flux::FluxMatrix doubled = a;
    for (std::size_t i = 1; i < 4; ++i) doubled(0, i) *= 2;
    const PatchGraph g1(patches, a, 0), g2(patches, doubled, 0);
    EpiState s = disease_free_state(g1);
    seed_prevalence(s, g1, 0, 0.01, 0.18);
    const auto r1 = integrate_to_steady(s, g1, {});
    const auto r2 = integrate_to_steady(s, g2, {});
    ASSERT_TRUE(r1.converged && r2.converged) << seed;
    for (std::size_t i = 1; i < 4; ++i) {
      EXPECT_GE(r2.state(i, C::I_h), r1.state(i, C::I_h) * (1 - 1e-6)) << seed << " patch " << i;
    }
  }
}

TEST(Steady, BitIdenticalReruns) {
  Rng rng(8);
  const PatchGraph g(make_patches(4), random_alpha(4, rng, 1e-3, false), 0);
  EpiState s = disease_free_state(g);
  seed_prevalence(s, g, 0, 0.02, 0.18);
  const auto a = integrate_to_steady(s, g, {});
  const auto b = integrate_to_steady(s, g, {});
  EXPECT_EQ(a.state, b.state);
  EXPECT_EQ(a.steps, b.steps);
}

TEST(Steady, UnconvergedAtHorizon) {
  const PatchGraph g(make_patches(2), flux::FluxMatrix(2));
  EpiState s = disease_free_state(g);
  s(0, C::I_v) = 100;
  s(0, C::S_v) -= 100;
  const auto ss = integrate_to_steady(s, g, {}, {.t_max = 5.0});
  EXPECT_FALSE(ss.converged);
  EXPECT_NEAR(ss.t_elapsed, 5.0, 1e-9);
  try {
    risk_scores(ss, g);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::not_converged);
  }
}

TEST(Risk, FormulaAndCaveat) {
  const PatchGraph g(make_patches(2), flux::FluxMatrix(2));
  SteadyState ss;
  ss.state = disease_free_state(g);
  ss.converged = true;
  auto r = risk_scores(ss, g);
  for (const auto& p : r.patches) EXPECT_EQ(p.risk, 0.0);
  ss.state(1, C::I_h) = 365;
  r = risk_scores(ss, g);
  EXPECT_DOUBLE_EQ(r.patches[1].risk, 100.0);
  EXPECT_EQ(RiskScores::caveat, "relative risk");
}

TEST(Risk, RankMatchesSortOracle) {
  Rng rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<PatchRisk> risks;
    std::vector<std::pair<std::string, double>> plain;
    const auto n = rng.between(1, 30);
    for (std::int64_t i = 0; i < n; ++i) {
      const double v = static_cast<double>(rng.below(8));  // plenty of ties
      const std::string id = "c" + std::to_string(rng.below(1000));
      risks.push_back({id, v * 365 / 100, v});
      plain.emplace_back(id, v);
    }
    const auto ranked = rank_patches(risks);
    const auto want = oracle::sort_desc(plain);
    ASSERT_EQ(ranked.size(), want.size());
    for (std::size_t i = 0; i < want.size(); ++i) {
      EXPECT_EQ(ranked[i].patch_id, want[i].first);
      EXPECT_EQ(ranked[i].risk, want[i].second);
    }
  }
}

TEST(Graph, ValidationErrors) {
  auto patches = make_patches(2);
  EXPECT_THROW(PatchGraph(patches, flux::FluxMatrix(3)), Error);
  patches[1].human_population = 0;
  EXPECT_THROW(PatchGraph(patches, flux::FluxMatrix(2)), Error);
  EXPECT_THROW(PatchGraph({}, flux::FluxMatrix(0)), Error);
}

TEST(Config, JsonRoundTripAndUnknownKeys) {
  ModelConfig c;
  c.params.mu = 0.1;
  c.pin_source = false;
  c.source_prevalence = 0.03;
  const auto back = model_config_from_json(model_config_to_json(c));
  EXPECT_EQ(back.params.mu, 0.1);
  EXPECT_FALSE(back.pin_source);
  EXPECT_EQ(back.source_prevalence, 0.03);
  EXPECT_THROW(model_config_from_json(R"({"bite_rate": 1})"), Error);
  EXPECT_THROW(model_config_from_json(R"({"phi": 1.5})"), Error);
}

TEST(Config, InitialStateFromJson) {
  const PatchGraph g(make_patches(2), flux::FluxMatrix(2));
  const auto s = initial_state_from_json(R"({"patches": {"p1": {"I_h": 7, "S_h": 100}}})", g);
  EXPECT_EQ(s(1, C::I_h), 7);
  EXPECT_EQ(s(1, C::S_h), 100);
  EXPECT_EQ(s(0, C::S_h), g.human_population()[0]);
  EXPECT_THROW(initial_state_from_json(R"({"patches": {"nope": {}}})", g), Error);
}
