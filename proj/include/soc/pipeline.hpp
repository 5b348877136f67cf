#pragma once

// End-to-end steps shared by the command-line tool and the tests.

#include <iosfwd>
#include <string>
#include <vector>

#include "soc/diagnostics.hpp"
#include "soc/io.hpp"
#include "soc/synthetic.hpp"

namespace soc {

struct FitResult {
  std::vector<ChainDraws> chains;
  std::vector<SummaryRow> summaries;
  std::vector<SummaryRow> flux;
};

/// Samples the posterior and summarizes every coordinate and treatment flux.
/// Progress lines go to `log` when given.
FitResult fit_experiment(const std::vector<PlotData>& plots, const PriorTable& priors, const SamplerConfig& sampler,
                         WorkerPool* pool, std::ostream* log);

/// Writes chain CSVs, report.json and summary.csv; returns the written paths.
std::vector<fs::path> write_fit_outputs(const fs::path& out_dir, const FitResult& fit);

/// Summary table as CSV (name,mean,median,q05,q25,q75,q95,prob_negative,rhat,converged).
std::string summary_csv(const std::vector<SummaryRow>& rows);

/// Parameter rows (everything except latent states) followed by flux rows.
std::vector<SummaryRow> headline_rows(const FitResult& fit, std::size_t n_globals);

/// Plain-text R-hat table.
void print_rhat_table(std::ostream& os, const std::vector<SummaryRow>& rows);

/// Prior-mean parameters; log-scale priors contribute exp(mean of the log).
ModelParams prior_mean_params(const PriorTable& priors, const std::vector<std::string>& treatments);
PoolState prior_mean_initial(const PriorTable& priors, const std::string& plot_id);

/// Monthly trajectories with CO2 and fraction columns:
/// plot_id,month,D,R,F,S,H,I,CO2,TOC,POC,ROC.
std::string trajectories_csv(const std::vector<PlotData>& plots, const std::vector<Trajectory>& trajectories,
                             const ModelParams& params);

/// One spatial sample per plot: the geometric mean of that plot's observations of `type`.
std::vector<SpatialSample> spatial_samples(const std::vector<PlotData>& plots, Measure type);

}  // namespace soc
