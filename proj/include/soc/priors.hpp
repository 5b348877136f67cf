#pragma once

// Parameter model: the default prior table for every scalar parameter and
// per-plot initial condition, sensitivity scenarios, and the inverse-gamma
// constructor that matches a band on the multiplicative process error.

#include <array>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "soc/distributions.hpp"
#include "soc/model.hpp"

namespace soc {

/// A prior on one scalar. When log_scale is set the distribution describes
/// log(value) rather than value (used for the treatment modifiers).
struct Prior {
  Distribution dist;
  bool log_scale = false;

  double log_density(double value) const;
  double draw(Rng& rng) const;

  friend bool operator==(const Prior&, const Prior&) = default;
};

namespace names {
inline constexpr std::array<std::string_view, kDecayingPools> kKappa = {"kappa_D", "kappa_R", "kappa_F", "kappa_S",
                                                                       "kappa_H"};
inline constexpr std::array<std::string_view, kDecayingPools> kPiM = {"pi_M_D", "pi_M_R", "pi_M_F", "pi_M_S",
                                                                     "pi_M_H"};
inline constexpr std::string_view kPxf = "p_XF";
inline constexpr std::string_view kPhs = "p_HS";
inline constexpr std::string_view kPclay = "p_clay";
inline constexpr std::string_view kRdpm = "r_DPM_RPM";
inline constexpr std::array<std::string_view, kDecayingPools> kSigma2Process = {"sigma2_D", "sigma2_R", "sigma2_F",
                                                                               "sigma2_S", "sigma2_H"};
/// TOC, POC, ROC.
inline constexpr std::array<std::string_view, 3> kSigma2Meas = {"sigma2_TOC", "sigma2_POC", "sigma2_ROC"};

std::string alpha(std::string_view treatment);
}  // namespace names

struct PriorTable {
  /// Global parameters keyed by name (see names::).
  std::map<std::string, Prior, std::less<>> parameters;
  /// Plot ids, parallel to `initial`.
  std::vector<std::string> plot_ids;
  /// Initial-condition priors per plot, pool order D..I.
  std::vector<std::array<Prior, kPools>> initial;

  const Prior& at(std::string_view name) const;
  const std::array<Prior, kPools>& initial_for(std::string_view plot_id) const;
  /// Treatment labels that carry an alpha prior, sorted.
  std::vector<std::string> treatments() const;
  /// Total number of prior entries (parameters + 6 per plot).
  std::size_t size() const { return parameters.size() + kPools * initial.size(); }

  friend bool operator==(const PriorTable&, const PriorTable&) = default;
};

PriorTable default_priors(std::span<const std::string> plot_ids, std::span<const std::string> treatments);
/// Plots are named "1".."n_plots".
PriorTable default_priors(std::size_t n_plots, std::span<const std::string> treatments);

enum class Scenario { N, A, B };
Scenario parse_scenario(std::string_view label);
std::string_view to_string(Scenario s);

/// N: unchanged. A: decay-rate prior variances inflated 4x. B: process
/// variances get InverseGamma(102.4, 0.08). Applies to the table it is given.
PriorTable apply_scenario(const PriorTable& table, Scenario scenario);

/// Pr(exp(eta) < lo_mult) and Pr(exp(eta) > hi_mult) when sigma2 ~ ig and
/// eta | sigma2 ~ N(-sigma2/2, sigma2), by quadrature over sigma2.
struct TailProbabilities {
  double lower = 0.0;
  double upper = 0.0;
};
TailProbabilities multiplier_tails(const InverseGamma& ig, double lo_mult, double hi_mult);

struct IgFit {
  InverseGamma ig;
  TailProbabilities tails;
};

/// Finds an inverse gamma whose implied multiplicative-error tails match
/// tail_prob below lo_mult and above hi_mult. When both cannot be matched
/// exactly the tails are balanced (geometric mean on target). Throws
/// ValidationError for bad arguments and NumericError when the best fit
/// leaves either tail outside [tail_prob/2, 2*tail_prob].
IgFit fit_ig_to_multiplier_band(double lo_mult, double hi_mult, double tail_prob);

}  // namespace soc
