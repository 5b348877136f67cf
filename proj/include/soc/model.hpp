#pragma once

// Six-pool soil carbon dynamics: deterministic and lognormal-noise stepping,
// the derived routing algebra, the linear propagator form of one step, the
// measurable-fraction map and the atmospheric flux estimators.
//
// Units: stocks in Mg C ha^-1, time in months, decay rates in y^-1.

#include <array>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>

#include <Eigen/Core>

#include "soc/error.hpp"

namespace soc {

/// Pool order used everywhere: D, R, F, S, H, I.
enum class Pool : std::size_t { D = 0, R, F, S, H, I };

inline constexpr std::size_t kPools = 6;
/// D, R, F, S, H decay; I is inert.
inline constexpr std::size_t kDecayingPools = 5;

inline constexpr std::array<std::string_view, kPools> kPoolNames = {"D", "R", "F", "S", "H", "I"};

struct PoolState {
  double d = 0.0;
  double r = 0.0;
  double f = 0.0;
  double s = 0.0;
  double h = 0.0;
  double i = 0.0;

  double total() const { return d + r + f + s + h + i; }
  std::array<double, kPools> as_array() const { return {d, r, f, s, h, i}; }
  static PoolState from_array(const std::array<double, kPools>& a) {
    return {a[0], a[1], a[2], a[3], a[4], a[5]};
  }
  double operator[](Pool p) const { return as_array()[static_cast<std::size_t>(p)]; }

  /// Every pool finite and non-negative.
  bool valid() const;

  friend bool operator==(const PoolState&, const PoolState&) = default;
};

/// Parameters that the routing fractions are derived from.
struct PrimaryRouting {
  double p_xf = 0.46;       // retained decay of D,R,F,S routed to F
  double p_hs = 0.46;       // retained decay of H routed to S
  double p_clay = 0.16;     // clay proportion
  double r_dpm_rpm = 1.44;  // DPM / RPM ratio of plant inputs
  std::array<double, kDecayingPools> pi_m = {0.49, 0.49, 0.0, 0.0, 0.02};  // manure weights D..H

  void validate() const;
};

struct DerivedRouting {
  double p_pd = 0.0;  // plant input to D (rest to R)
  double r_co2_solid = 0.0;
  double p_uf = 0.0;
  double p_us = 0.0;
  double p_uh = 0.0;
  double p_vf = 0.0;
  double p_vs = 0.0;
  double p_vh = 0.0;
  std::array<double, kDecayingPools> p_m{};  // normalized manure fractions D..H

  /// Share of decayed carbon lost as CO2.
  double co2_share() const { return r_co2_solid / (1.0 + r_co2_solid); }
};

/// CO2-to-solid ratio as a function of clay content.
double co2_solid_ratio(double p_clay);

DerivedRouting derive_routing(const PrimaryRouting& primary);

/// Marginal decay rates (y^-1) and per-treatment multiplicative modifiers.
struct DecayRates {
  std::array<double, kDecayingPools> kappa = {10.0, 0.07, 0.66, 0.66, 0.02};
  std::map<std::string, double, std::less<>> alpha;

  /// kappa_X * alpha_treatment. Throws ValidationError for an unknown treatment.
  double effective(std::size_t pool, std::string_view treatment) const;
  std::array<double, kDecayingPools> effective(std::string_view treatment) const;

  void validate() const;
};

struct Forcing {
  double p = 0.0;         // plant carbon input per month
  double m = 0.0;         // manure carbon input per month
  double rate_mod = 1.0;  // decay-rate modifier
  double dt = 1.0;        // months

  void validate() const;
  friend bool operator==(const Forcing&, const Forcing&) = default;
};

/// Defaults are the means of the default inverse-gamma priors.
struct NoiseParams {
  std::array<double, kDecayingPools> sigma2_process = {0.318 / 402.4, 0.318 / 402.4, 0.318 / 402.4,
                                                       0.318 / 402.4, 0.318 / 402.4};
  /// Order: TOC, POC, ROC.
  std::array<double, 3> sigma2_meas = {0.053 / 9.5, 0.039 / 9.5, 0.290 / 9.5};

  void validate() const;
};

/// Per-pool retention factors exp(-rate_mod * K/12 * dt).
std::array<double, kDecayingPools> retention(const std::array<double, kDecayingPools>& effective_rates,
                                             const Forcing& forcing);

struct DecayedMass {
  double u = 0.0;  // decayed from D, R, F, S
  double v = 0.0;  // decayed from H
};

DecayedMass decayed_masses(const PoolState& state, const DecayRates& rates, std::string_view treatment,
                           const Forcing& forcing);

struct StepResult {
  PoolState next;
  double co2 = 0.0;
};

/// One deterministic step given effective rates already resolved for the plot's treatment.
StepResult step_mean(const PoolState& state, const std::array<double, kDecayingPools>& effective_rates,
                     const DerivedRouting& routing, const Forcing& forcing);

StepResult step_deterministic(const PoolState& state, const DecayRates& rates, const DerivedRouting& routing,
                              std::string_view treatment, const Forcing& forcing);

/// Lognormal multiplicative noise on each decaying pool: mean * exp(-s2/2 + sqrt(s2) * eta).
/// Throws NumericError when a pool's deterministic mean is zero under nonzero variance.
PoolState step_stochastic(const PoolState& state, const DecayRates& rates, const DerivedRouting& routing,
                          const NoiseParams& noise, std::string_view treatment, const Forcing& forcing,
                          std::span<const double, kDecayingPools> eta);

struct Propagator {
  Eigen::Matrix<double, 6, 6> m;
  Eigen::Matrix<double, 6, 1> g;

  Eigen::Matrix<double, 6, 1> apply(const PoolState& state) const;
};

Propagator build_propagator(const DecayRates& rates, const DerivedRouting& routing, std::string_view treatment,
                            const Forcing& forcing);

enum class Measure : std::size_t { TOC = 0, POC, ROC };
inline constexpr std::array<std::string_view, 3> kMeasureNames = {"TOC", "POC", "ROC"};
Measure parse_measure(std::string_view name);

struct Fractions {
  double toc = 0.0;
  double poc = 0.0;
  double roc = 0.0;

  double operator[](Measure m) const;
};

Fractions observe_map(const PoolState& state);

/// Observation rows in (TOC, POC, ROC) order.
Eigen::Matrix<double, 3, 6> observation_matrix();

/// Annualized net loss of soil carbon, Mg C ha^-1 y^-1; negative means sequestration.
double flux_plot(const PoolState& initial, const PoolState& final_state, int t_months);

struct PlotFlux {
  double flux = 0.0;
  double area = 0.0;
};

/// Area-weighted mean of plot fluxes.
double flux_treatment(std::span<const PlotFlux> fluxes);

}  // namespace soc
