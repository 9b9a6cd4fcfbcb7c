#include "vbrisk/epimodel.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "json_io.hpp"
#include "vbrisk/csv.hpp"

namespace vbrisk::epi {
namespace {

using detail::json;

constexpr double kNegativeTolerance = 1e-9;
constexpr int kMaxHalvings = 40;

constexpr std::size_t idx(Compartment c) { return static_cast<std::size_t>(c); }

void check_non_negative(double v, const char* name) {
  if (!std::isfinite(v) || v < 0.0) {
    fail(Errc::validation, fmt::format("epi params: '{}' must be finite and >= 0 (got {})", name, v));
  }
}

// RK4 with a reusable workspace so the steady-state loop does not allocate.
class Stepper {
 public:
  Stepper(const PatchGraph& graph, const EpiParams& params)
      : graph_(graph), params_(params), n_(graph.size()), k2_(n_), k3_(n_), k4_(n_), tmp_(n_),
        trial_(n_) {}

  // Advances `state` by dt. `k1` must hold rhs(state) on entry and holds
  // rhs(state) of the returned state on exit.
  void advance(EpiState& state, EpiState& k1, double dt, double t_now) {
    if (!(dt > 0.0) || !std::isfinite(dt)) fail(Errc::validation, "step_rk4: dt must be > 0");
    double remaining = dt;
    double h = dt;
    int halvings = 0;
    while (remaining > 0.0) {
      h = std::min(h, remaining);
      const auto bad = attempt(state, k1, h);
      if (!bad) {
        std::swap(state, trial_);
        remaining -= h;
        halvings = 0;
        rhs_into(state, graph_, params_, k1);
        continue;
      }
      if (++halvings > kMaxHalvings) {
        const std::size_t patch = *bad / kCompartments;
        std::string dump;
        for (std::size_t c = 0; c < kCompartments; ++c) {
          dump += fmt::format(" {}={}", compartment_name(static_cast<Compartment>(c)),
                              state(patch, static_cast<Compartment>(c)));
        }
        fail(Errc::stiffness,
             fmt::format("step_rk4: no admissible step after {} halvings at t={} (h={}); "
                         "patch '{}' compartment {} would become {}; state:{}",
                         kMaxHalvings, t_now + (dt - remaining), h, graph_.patches()[patch].id,
                         compartment_name(static_cast<Compartment>(*bad % kCompartments)),
                         trial_.values()[*bad], dump));
      }
      h *= 0.5;
    }
  }

 private:
  // Fills trial_ with the RK4 result; returns the first offending index if rejected.
  std::optional<std::size_t> attempt(const EpiState& y, const EpiState& k1, double h) {
    const auto yv = y.values();
    const auto k1v = k1.values();
    auto tv = tmp_.values();
    const std::size_t m = yv.size();

    for (std::size_t i = 0; i < m; ++i) tv[i] = yv[i] + 0.5 * h * k1v[i];
    rhs_into(tmp_, graph_, params_, k2_);
    const auto k2v = k2_.values();
    for (std::size_t i = 0; i < m; ++i) tv[i] = yv[i] + 0.5 * h * k2v[i];
    rhs_into(tmp_, graph_, params_, k3_);
    const auto k3v = k3_.values();
    for (std::size_t i = 0; i < m; ++i) tv[i] = yv[i] + h * k3v[i];
    rhs_into(tmp_, graph_, params_, k4_);
    const auto k4v = k4_.values();

    auto out = trial_.values();
    for (std::size_t i = 0; i < m; ++i) {
      out[i] = yv[i] + (h / 6.0) * (k1v[i] + 2.0 * k2v[i] + 2.0 * k3v[i] + k4v[i]);
    }
    for (std::size_t i = 0; i < m; ++i) {
      if (!(out[i] >= -kNegativeTolerance)) return i;  // also catches NaN
    }
    for (std::size_t i = 0; i < m; ++i) {
      if (out[i] < 0.0) out[i] = 0.0;
    }
    return std::nullopt;
  }

  const PatchGraph& graph_;
  const EpiParams& params_;
  std::size_t n_;
  EpiState k2_, k3_, k4_, tmp_, trial_;
};

}  // namespace

void EpiParams::validate() const {
  check_non_negative(b, "b");
  check_non_negative(beta_hv, "beta_hv");
  check_non_negative(beta_vh, "beta_vh");
  check_non_negative(delta, "delta");
  check_non_negative(gamma, "gamma");
  check_non_negative(phi, "phi");
  check_non_negative(mu, "mu");
  if (phi > 1.0) fail(Errc::validation, "epi params: 'phi' must lie in [0, 1]");
}

std::string_view compartment_name(Compartment c) noexcept {
  switch (c) {
    case Compartment::S_h: return "S_h";
    case Compartment::E_h: return "E_h";
    case Compartment::I_h: return "I_h";
    case Compartment::A_h: return "A_h";
    case Compartment::R_h: return "R_h";
    case Compartment::S_v: return "S_v";
    case Compartment::I_v: return "I_v";
  }
  return "?";
}

double EpiState::humans(std::size_t patch) const {
  double total = 0.0;
  for (std::size_t c = 0; c < kHumanCompartments; ++c) total += v_[patch * kCompartments + c];
  return total;
}

double EpiState::vectors(std::size_t patch) const {
  return (*this)(patch, Compartment::S_v) + (*this)(patch, Compartment::I_v);
}

double EpiState::total_humans() const {
  double total = 0.0;
  for (std::size_t p = 0; p < patches_; ++p) total += humans(p);
  return total;
}

PatchGraph::PatchGraph(std::vector<geo::Patch> patches, flux::FluxMatrix alpha,
                       std::optional<std::size_t> pinned_patch)
    : patches_(std::move(patches)), alpha_(std::move(alpha)), pinned_(pinned_patch) {
  if (patches_.empty()) fail(Errc::validation, "patch graph needs at least one patch");
  if (alpha_.size() != patches_.size()) {
    fail(Errc::validation, fmt::format("patch graph: alpha is {0}x{0} but there are {1} patches",
                                       alpha_.size(), patches_.size()));
  }
  alpha_.validate();
  if (pinned_ && *pinned_ >= patches_.size()) fail(Errc::validation, "patch graph: pinned patch out of range");
  for (const auto& p : patches_) {
    if (!(p.human_population > 0.0) || !std::isfinite(p.human_population)) {
      fail(Errc::validation, "patch '" + p.id + "': human population must be > 0");
    }
    if (!(p.vector_capacity >= 0.0) || !std::isfinite(p.vector_capacity)) {
      fail(Errc::validation, "patch '" + p.id + "': vector capacity must be >= 0");
    }
    n_h_.push_back(p.human_population);
    n_v_.push_back(p.vector_capacity);
  }
  for (std::size_t i = 0; i < patches_.size(); ++i) {
    for (std::size_t j = 0; j < patches_.size(); ++j) {
      if (i != j && alpha_(i, j) != 0.0) edges_.push_back(Edge{i, j, alpha_(i, j)});
    }
  }
}

std::optional<std::size_t> PatchGraph::index_of(std::string_view id) const {
  for (std::size_t i = 0; i < patches_.size(); ++i) {
    if (patches_[i].id == id) return i;
  }
  return std::nullopt;
}

void rhs_into(const EpiState& state, const PatchGraph& graph, const EpiParams& p, EpiState& out) {
  const std::size_t n = graph.size();
  if (out.patches() != n) out = EpiState(n);
  const auto n_h = graph.human_population();
  const auto n_v = graph.vector_capacity();
  const auto x = state.values();
  auto d = out.values();

  for (std::size_t i = 0; i < n; ++i) {
    const double* s = &x[i * kCompartments];
    double* ds = &d[i * kCompartments];
    const double S = s[idx(Compartment::S_h)];
    const double E = s[idx(Compartment::E_h)];
    const double I = s[idx(Compartment::I_h)];
    const double A = s[idx(Compartment::A_h)];
    const double Sv = s[idx(Compartment::S_v)];
    const double Iv = s[idx(Compartment::I_v)];

    const double infect_h = p.b * p.beta_vh * Iv * S / n_h[i];
    const double infect_v = p.b * p.beta_hv * (I + A) * Sv / n_h[i];

    ds[idx(Compartment::S_h)] = -infect_h;
    ds[idx(Compartment::E_h)] = infect_h - p.delta * E;
    ds[idx(Compartment::I_h)] = p.delta * (1.0 - p.phi) * E - p.gamma * I;
    ds[idx(Compartment::A_h)] = p.delta * p.phi * E - p.gamma * A;
    ds[idx(Compartment::R_h)] = p.gamma * (I + A);
    ds[idx(Compartment::S_v)] = -infect_v - p.mu * (Sv - n_v[i]);
    ds[idx(Compartment::I_v)] = infect_v - p.mu * Iv;
  }

  // Human movement: each edge moves alpha * X from `from` to `to`.
  for (const auto& e : graph.edges()) {
    const double* src = &x[e.from * kCompartments];
    double* d_from = &d[e.from * kCompartments];
    double* d_to = &d[e.to * kCompartments];
    for (std::size_t c = 0; c < kHumanCompartments; ++c) {
      const double moved = e.rate * src[c];
      d_to[c] += moved;
      d_from[c] -= moved;
    }
  }

  if (const auto pinned = graph.pinned_patch()) {
    std::fill_n(&d[*pinned * kCompartments], kCompartments, 0.0);
  }
}

EpiState rhs(const EpiState& state, const PatchGraph& graph, const EpiParams& params) {
  EpiState out(graph.size());
  rhs_into(state, graph, params, out);
  return out;
}

double normalized_residual(const EpiState& state, const EpiState& derivative) {
  const auto x = state.values();
  const auto d = derivative.values();
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    worst = std::max(worst, std::abs(d[i]) / std::max(x[i], 1.0));
  }
  return worst;
}

EpiState step_rk4(const EpiState& state, const PatchGraph& graph, const EpiParams& params,
                  double dt) {
  if (state.patches() != graph.size()) fail(Errc::validation, "step_rk4: state/graph size mismatch");
  Stepper stepper(graph, params);
  EpiState y = state;
  EpiState k1 = rhs(y, graph, params);
  stepper.advance(y, k1, dt, 0.0);
  return y;
}

SteadyState integrate_to_steady(const EpiState& init, const PatchGraph& graph,
                                const EpiParams& params, const SteadyOptions& options) {
  if (!(options.tol > 0.0)) fail(Errc::validation, "integrate_to_steady: tol must be > 0");
  if (!(options.t_max > 0.0)) fail(Errc::validation, "integrate_to_steady: t_max must be > 0");
  if (!(options.dt > 0.0)) fail(Errc::validation, "integrate_to_steady: dt must be > 0");
  if (init.patches() != graph.size()) fail(Errc::validation, "integrate_to_steady: state/graph size mismatch");
  params.validate();

  Stepper stepper(graph, params);
  SteadyState out;
  out.state = init;
  EpiState k1 = rhs(out.state, graph, params);
  out.residual = normalized_residual(out.state, k1);

  std::optional<double> onset;
  if (out.residual < options.tol) onset = 0.0;
  double t = 0.0;
  while (true) {
    if (onset && t - *onset >= options.sustain_days - 1e-9) {
      out.converged = true;
      break;
    }
    if (t >= options.t_max) break;
    const double h = std::min(options.dt, options.t_max - t);
    stepper.advance(out.state, k1, h, t);
    ++out.steps;
    t = (t + h > options.t_max) ? options.t_max : t + h;
    out.residual = normalized_residual(out.state, k1);
    if (out.residual < options.tol) {
      if (!onset) onset = t;
    } else {
      onset.reset();
    }
  }
  out.t_elapsed = t;
  out.t_onset = onset.value_or(t);
  return out;
}

EpiState disease_free_state(const PatchGraph& graph) {
  EpiState s(graph.size());
  for (std::size_t i = 0; i < graph.size(); ++i) {
    s(i, Compartment::S_h) = graph.human_population()[i];
    s(i, Compartment::S_v) = graph.vector_capacity()[i];
  }
  return s;
}

void seed_prevalence(EpiState& state, const PatchGraph& graph, std::size_t index,
                     double prevalence, double phi) {
  if (!(prevalence >= 0.0 && prevalence <= 1.0)) {
    fail(Errc::validation, "source prevalence must lie in [0, 1]");
  }
  const double n = graph.human_population()[index];
  const double infected = prevalence * n;
  state(index, Compartment::S_h) = n - infected;
  state(index, Compartment::E_h) = 0.0;
  state(index, Compartment::I_h) = infected * (1.0 - phi);
  state(index, Compartment::A_h) = infected * phi;
  state(index, Compartment::R_h) = 0.0;
}

RiskScores risk_scores(const SteadyState& ss, const PatchGraph& graph) {
  if (!ss.converged) {
    fail(Errc::not_converged,
         fmt::format("risk scores need a converged steady state (residual {} after {} days)",
                     ss.residual, ss.t_elapsed));
  }
  RiskScores out;
  for (std::size_t i = 0; i < graph.size(); ++i) {
    const double infected = ss.state(i, Compartment::I_h);
    out.patches.push_back(
        PatchRisk{graph.patches()[i].id, infected, kMosquitoSeasonDays / 365.0 * infected});
  }
  return out;
}

std::vector<PatchRisk> rank_patches(std::span<const PatchRisk> risks) {
  std::vector<PatchRisk> ranked(risks.begin(), risks.end());
  std::sort(ranked.begin(), ranked.end(), [](const PatchRisk& a, const PatchRisk& b) {
    if (a.risk != b.risk) return a.risk > b.risk;
    return a.patch_id < b.patch_id;
  });
  return ranked;
}

ModelConfig model_config_from_json(std::string_view text) {
  const json doc = detail::parse_json(std::string(text), "model config");
  if (!doc.is_object()) fail(Errc::config, "model config must be a JSON object");
  ModelConfig cfg;
  static const std::vector<std::string> known = {"b",   "beta_hv", "beta_vh",    "delta",
                                                 "gamma", "phi",   "mu", "pin_source",
                                                 "source_prevalence"};
  for (const auto& [key, value] : doc.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      fail(Errc::config, "model config: unknown key '" + key + "'");
    }
    if (key == "pin_source") {
      if (!value.is_boolean()) fail(Errc::config, "model config: 'pin_source' must be a boolean");
      cfg.pin_source = value.get<bool>();
      continue;
    }
    if (!value.is_number()) fail(Errc::config, "model config: '" + key + "' must be numeric");
    const double v = value.get<double>();
    if (key == "b") cfg.params.b = v;
    else if (key == "beta_hv") cfg.params.beta_hv = v;
    else if (key == "beta_vh") cfg.params.beta_vh = v;
    else if (key == "delta") cfg.params.delta = v;
    else if (key == "gamma") cfg.params.gamma = v;
    else if (key == "phi") cfg.params.phi = v;
    else if (key == "mu") cfg.params.mu = v;
    else if (key == "source_prevalence") cfg.source_prevalence = v;
  }
  cfg.params.validate();
  if (!(cfg.source_prevalence >= 0.0 && cfg.source_prevalence <= 1.0)) {
    fail(Errc::validation, "model config: 'source_prevalence' must lie in [0, 1]");
  }
  return cfg;
}

ModelConfig load_model_config(const std::string& path) {
  return model_config_from_json(detail::read_text(path));
}

std::string model_config_to_json(const ModelConfig& cfg) {
  detail::ordered_json j;
  j["b"] = cfg.params.b;
  j["beta_hv"] = cfg.params.beta_hv;
  j["beta_vh"] = cfg.params.beta_vh;
  j["delta"] = cfg.params.delta;
  j["gamma"] = cfg.params.gamma;
  j["phi"] = cfg.params.phi;
  j["mu"] = cfg.params.mu;
  j["pin_source"] = cfg.pin_source;
  j["source_prevalence"] = cfg.source_prevalence;
  return j.dump(2) + "\n";
}

EpiState initial_state_from_json(std::string_view text, const PatchGraph& graph) {
  const json doc = detail::parse_json(std::string(text), "initial state");
  if (!doc.is_object() || !doc.contains("patches") || !doc["patches"].is_object()) {
    fail(Errc::config, "initial state: expected {\"patches\": {...}}");
  }
  EpiState state = disease_free_state(graph);
  for (const auto& [id, comps] : doc["patches"].items()) {
    const auto index = graph.index_of(id);
    if (!index) fail(Errc::config, "initial state: unknown patch '" + id + "'");
    if (!comps.is_object()) fail(Errc::config, "initial state: patch '" + id + "' must be an object");
    for (const auto& [name, value] : comps.items()) {
      bool matched = false;
      for (std::size_t c = 0; c < kCompartments; ++c) {
        if (compartment_name(static_cast<Compartment>(c)) == name) {
          if (!value.is_number() || value.get<double>() < 0.0) {
            fail(Errc::validation, "initial state: " + id + "." + name + " must be >= 0");
          }
          state(*index, static_cast<Compartment>(c)) = value.get<double>();
          matched = true;
        }
      }
      if (!matched) fail(Errc::config, "initial state: unknown compartment '" + name + "'");
    }
  }
  return state;
}

std::string format_risk_csv(std::span<const PatchRisk> ranked) {
  std::string out = "patch_id,I_h_steady,risk\n";
  for (const auto& r : ranked) {
    out += fmt::format("{},{},{}\n", csv::escape(r.patch_id), r.infected_steady, r.risk);
  }
  return out;
}

}  // namespace vbrisk::epi
