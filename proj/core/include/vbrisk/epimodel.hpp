#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vbrisk/flux.hpp"
#include "vbrisk/geo.hpp"

namespace vbrisk::epi {

/// Transmission parameters. Defaults: b, beta_hv, beta_vh, delta (1 / 5 day
/// incubation), gamma and phi take the published tuning values; mu (vector
/// death rate) is not published and defaults to 1/14 per day.
struct EpiParams {
  double b = 0.5;         // bites per day
  double beta_hv = 0.5;   // human -> vector infection probability
  double beta_vh = 0.4;   // vector -> human infection probability
  double delta = 0.2;     // 1 / intrinsic incubation period, per day
  double gamma = 0.25;    // recovery rate, per day
  double phi = 0.18;      // proportion of infections that are asymptomatic
  double mu = 1.0 / 14.0; // vector death rate, per day

  /// All >= 0 and finite, phi in [0, 1]; Errc::validation otherwise.
  void validate() const;
};

enum class Compartment : std::size_t { S_h = 0, E_h, I_h, A_h, R_h, S_v, I_v };

inline constexpr std::size_t kCompartments = 7;
inline constexpr std::size_t kHumanCompartments = 5;

std::string_view compartment_name(Compartment c) noexcept;

/// Seven compartments per patch, stored patch-major.
class EpiState {
 public:
  EpiState() = default;
  explicit EpiState(std::size_t patches) : patches_(patches), v_(patches * kCompartments, 0.0) {}

  std::size_t patches() const noexcept { return patches_; }

  double operator()(std::size_t patch, Compartment c) const {
    return v_[patch * kCompartments + static_cast<std::size_t>(c)];
  }
  double& operator()(std::size_t patch, Compartment c) {
    return v_[patch * kCompartments + static_cast<std::size_t>(c)];
  }

  std::span<double> values() noexcept { return v_; }
  std::span<const double> values() const noexcept { return v_; }

  /// S + E + I + A + R in one patch.
  double humans(std::size_t patch) const;
  /// S_v + I_v in one patch.
  double vectors(std::size_t patch) const;
  /// Humans summed over every patch.
  double total_humans() const;

  friend bool operator==(const EpiState&, const EpiState&) = default;

 private:
  std::size_t patches_ = 0;
  std::vector<double> v_;
};

/// Patches plus movement rates. Validated on construction: Z >= 1, alpha is
/// Z x Z and valid, every patch has N_h > 0 and N_v >= 0. A pinned patch is
/// held at its current compartments (its derivatives are zero).
class PatchGraph {
 public:
  PatchGraph(std::vector<geo::Patch> patches, flux::FluxMatrix alpha,
             std::optional<std::size_t> pinned_patch = std::nullopt);

  std::size_t size() const noexcept { return patches_.size(); }
  const std::vector<geo::Patch>& patches() const noexcept { return patches_; }
  const flux::FluxMatrix& alpha() const noexcept { return alpha_; }
  std::optional<std::size_t> pinned_patch() const noexcept { return pinned_; }
  std::optional<std::size_t> index_of(std::string_view id) const;

  struct Edge {
    std::size_t from;
    std::size_t to;
    double rate;
  };
  /// Non-zero off-diagonal entries of alpha in row-major order.
  std::span<const Edge> edges() const noexcept { return edges_; }

  std::span<const double> human_population() const noexcept { return n_h_; }
  std::span<const double> vector_capacity() const noexcept { return n_v_; }

 private:
  std::vector<geo::Patch> patches_;
  flux::FluxMatrix alpha_;
  std::optional<std::size_t> pinned_;
  std::vector<Edge> edges_;
  std::vector<double> n_h_;
  std::vector<double> n_v_;
};

/// Time derivative of every compartment:
///   S_h' = -b beta_vh I_v S_h / N_h + flux(S)
///   E_h' = +b beta_vh I_v S_h / N_h - delta E_h + flux(E)
///   I_h' = delta (1 - phi) E_h - gamma I_h + flux(I)
///   A_h' = delta phi E_h - gamma A_h + flux(A)
///   R_h' = gamma (I_h + A_h) + flux(R)
///   S_v' = -b beta_hv (I_h + A_h) S_v / N_h - mu (S_v - N_v)
///   I_v' = +b beta_hv (I_h + A_h) S_v / N_h - mu I_v
/// with flux(X)_i = sum_j alpha_ji X_j - sum_j alpha_ij X_i over humans only.
/// N_h and N_v are the patch's fixed population and vector capacity.
EpiState rhs(const EpiState& state, const PatchGraph& graph, const EpiParams& params);
void rhs_into(const EpiState& state, const PatchGraph& graph, const EpiParams& params,
              EpiState& out);

/// Largest |dx/dt| / max(x, 1) over all compartments.
double normalized_residual(const EpiState& state, const EpiState& derivative);

/// Classical RK4 over [t, t + dt]. A stage result with any compartment below
/// -1e-9 is rejected and the sub-step halved (at most 40 consecutive
/// halvings, then Errc::stiffness with a state dump); accepted values in
/// [-1e-9, 0) are clamped to 0.
EpiState step_rk4(const EpiState& state, const PatchGraph& graph, const EpiParams& params,
                  double dt);

struct SteadyOptions {
  double tol = 1e-9;
  double t_max = 200'000.0;  // days
  double dt = 0.1;           // days
  double sustain_days = 10.0;
};

struct SteadyState {
  EpiState state;
  double residual = 0.0;   // normalized residual at the final state
  double t_elapsed = 0.0;  // days integrated
  double t_onset = 0.0;    // start of the sustained sub-tolerance window
  bool converged = false;
  std::size_t steps = 0;
};

/// Integrates with step_rk4 until the normalized residual stays below `tol`
/// for `sustain_days` of model time, or until `t_max`.
SteadyState integrate_to_steady(const EpiState& init, const PatchGraph& graph,
                                const EpiParams& params, const SteadyOptions& options = {});

/// All humans susceptible, S_v = N_v, nothing infected.
EpiState disease_free_state(const PatchGraph& graph);

/// Splits `prevalence` of patch `index` into symptomatic / asymptomatic
/// infections using phi; the remainder is susceptible.
void seed_prevalence(EpiState& state, const PatchGraph& graph, std::size_t index,
                     double prevalence, double phi);

struct PatchRisk {
  std::string patch_id;
  double infected_steady = 0.0;  // I_h at steady state
  double risk = 0.0;             // (100 / 365) * I_h

  friend bool operator==(const PatchRisk&, const PatchRisk&) = default;
};

struct RiskScores {
  std::vector<PatchRisk> patches;  // graph order
  /// Scores compare counties against each other; they are not morbidity forecasts.
  static constexpr std::string_view caveat = "relative risk";
};

inline constexpr double kMosquitoSeasonDays = 100.0;

/// risk_i = (100 / 365) * I_h,i. Throws Errc::not_converged for an
/// unconverged steady state.
RiskScores risk_scores(const SteadyState& ss, const PatchGraph& graph);

/// Descending risk, ties by patch id ascending.
std::vector<PatchRisk> rank_patches(std::span<const PatchRisk> risks);

/// Model configuration read from JSON: EpiParams field names plus
/// `pin_source` (bool) and `source_prevalence` (fraction).
struct ModelConfig {
  EpiParams params;
  bool pin_source = true;
  double source_prevalence = 0.01;
};

ModelConfig model_config_from_json(std::string_view text);
ModelConfig load_model_config(const std::string& path);
std::string model_config_to_json(const ModelConfig& config);

/// Initial state JSON: {"patches": {"<id>": {"S_h": .., "E_h": .., ...}}}.
/// Unlisted patches and compartments start disease-free.
EpiState initial_state_from_json(std::string_view text, const PatchGraph& graph);

/// CSV `patch_id,I_h_steady,risk` in ranked order.
std::string format_risk_csv(std::span<const PatchRisk> ranked);

}  // namespace vbrisk::epi
