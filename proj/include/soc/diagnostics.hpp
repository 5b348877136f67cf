#pragma once

// Convergence and posterior summaries: potential scale reduction, quantile
// summaries, flux posteriors and the trend-surface residual diagnostic.

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "soc/hmc.hpp"
#include "soc/posterior.hpp"

namespace soc {

inline constexpr double kRhatThreshold = 1.01;

/// Between/within-chain potential scale reduction. Needs >= 2 chains of equal
/// length >= 2; throws NumericError when the within-chain variance is zero.
double rhat(const std::vector<std::vector<double>>& chains);

/// Type-7 quantile (linear interpolation between order statistics) of sorted data.
double quantile_sorted(std::span<const double> sorted, double p);

struct SummaryRow {
  std::string name;
  double mean = 0.0;
  double median = 0.0;
  double q05 = 0.0;
  double q25 = 0.0;
  double q75 = 0.0;
  double q95 = 0.0;
  std::optional<double> prob_negative;
  std::optional<double> rhat;

  bool converged() const { return rhat && *rhat < kRhatThreshold; }
};

/// Summary of pooled draws. `tail` adds Pr(value < 0).
SummaryRow summarize(std::string name, std::span<const double> draws, bool tail = false);

/// Per-chain series of a named column.
std::vector<std::vector<double>> column(const std::vector<ChainDraws>& chains, std::string_view name);

/// Summary plus R-hat (when there are >= 2 chains) for a named column.
SummaryRow summarize_column(const std::vector<ChainDraws>& chains, std::string_view name, bool tail = false);

/// Every column, in draw order.
std::vector<SummaryRow> summarize_all(const std::vector<ChainDraws>& chains);

/// Per-chain flux draws keyed by "flux[<treatment>]" and "flux_plot[<id>]".
std::map<std::string, std::vector<std::vector<double>>> flux_draws(const std::vector<ChainDraws>& chains,
                                                                   const std::vector<PlotData>& plots);

/// One row per treatment (name "flux[<treatment>]") with Pr(flux < 0).
std::vector<SummaryRow> flux_posterior(const std::vector<ChainDraws>& chains, const std::vector<PlotData>& plots);

struct SpatialSample {
  double x = 0.0;
  double y = 0.0;
  double value = 0.0;
};

struct TrendPair {
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  double sq_diff = 0.0;
  double rootabs_diff = 0.0;
};

struct TrendSurface {
  /// Coefficients of log value on (1, x, y, xy).
  Eigen::Vector4d coef;
  Eigen::VectorXd residuals;
  /// Unbiased residual variance.
  double sigma2 = 0.0;
  /// All unordered pairs, sorted by (i, j).
  std::vector<TrendPair> pairs;
};

/// Needs >= 5 samples with positive values and a full-rank design.
TrendSurface trend_surface_diagnostic(std::span<const SpatialSample> samples);

}  // namespace soc
