#pragma once

// Synthetic experiments: seasonal forcing, parameters drawn from the priors
// (or fixed), stochastic trajectories and lognormal observations.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "soc/io.hpp"
#include "soc/posterior.hpp"

namespace soc {

struct SyntheticSpec {
  int months = 24;
  /// Sampling months; every listed month gets one observation per type in `types`.
  std::vector<int> obs_months = {0, 6, 12, 18, 24};
  std::vector<Measure> types = {Measure::TOC, Measure::POC, Measure::ROC};
  /// Plant input P_t = plant_input * (1 + plant_amplitude * sin(2 pi t / 12)).
  double plant_input = 0.25;
  double plant_amplitude = 0.5;
  /// rate_mod_t = rate_mod * (1 + rate_amplitude * cos(2 pi t / 12)).
  double rate_mod = 1.0;
  double rate_amplitude = 0.3;
  /// Monthly manure input by treatment (absent means none).
  std::map<std::string, double> manure;
  /// When set, used instead of prior draws. Noise variances may be zero here.
  std::optional<ModelParams> fixed_params;
  /// Initial state shared by all plots when set; otherwise drawn per plot.
  std::optional<PoolState> fixed_initial;
  int max_retries = 100;

  void validate() const;
};

SyntheticSpec synthetic_spec_from_json(const Json& j);
Json synthetic_spec_to_json(const SyntheticSpec& spec);

/// Seasonal monthly forcing for one plot.
std::vector<Forcing> seasonal_forcing(const SyntheticSpec& spec, const std::string& treatment);

struct SyntheticTruth {
  std::uint64_t seed = 0;
  ModelParams params;
  std::vector<std::string> plot_ids;
  std::vector<Trajectory> trajectories;
};

struct SyntheticData {
  std::vector<PlotData> plots;
  SyntheticTruth truth;
};

/// `plots` supplies ids, treatments, areas and coordinates; forcing and
/// observations are generated. Plots are returned sorted by id.
SyntheticData generate_synthetic(std::vector<PlotData> plots, const PriorTable& priors, const SyntheticSpec& spec,
                                 std::uint64_t seed);

Json params_to_json(const ModelParams& params);
ModelParams params_from_json(const Json& j);
Json truth_to_json(const SyntheticTruth& truth);
SyntheticTruth truth_from_json(const Json& j);

}  // namespace soc
