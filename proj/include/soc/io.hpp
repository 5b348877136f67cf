#pragma once

// File formats: plot/forcing/observation CSV tables, the JSON experiment
// config, prior tables, draws, the run report and the output manifest.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "soc/diagnostics.hpp"
#include "soc/hmc.hpp"
#include "soc/posterior.hpp"
#include "soc/priors.hpp"

namespace soc {

namespace fs = std::filesystem;
using Json = nlohmann::json;

inline constexpr std::string_view kPlotsHeader = "id,treatment,area,x,y";
inline constexpr std::string_view kForcingHeader = "plot_id,month,P,M,rate_mod";
inline constexpr std::string_view kObservationsHeader = "plot_id,month,type,value";

/// Quotes a CSV field when it holds a comma or a quote.
std::string csv_field(std::string_view s);

/// Shortest text that parses back to the same double.
std::string format_double(double v);

/// Plot rows only; forcing and observations are left empty.
std::vector<PlotData> read_plot_table(const fs::path& path);
void write_plot_table(const fs::path& path, const std::vector<PlotData>& plots);

/// Fills plot.forcing. Months must run 0..T-1 without gaps for every plot.
void read_forcing(const fs::path& path, std::vector<PlotData>& plots);
void write_forcing(const fs::path& path, const std::vector<PlotData>& plots);

/// Fills plot.observations in file order.
void read_observations(const fs::path& path, std::vector<PlotData>& plots);
void write_observations(const fs::path& path, const std::vector<PlotData>& plots);

Json prior_to_json(const Prior& prior);
Prior prior_from_json(const Json& j, std::string_view context);
Json prior_table_to_json(const PriorTable& table);

/// Keys are parameter names, "<pool>0" for every plot's initial state of that
/// pool, or "<pool>0[<plot id>]" for one plot.
void apply_prior_overrides(PriorTable& table, const Json& overrides);

struct SyntheticSpec;

struct ExperimentConfig {
  fs::path base_dir;
  std::string plots_file;
  std::string forcing_file;
  std::string observations_file;
  Scenario scenario = Scenario::N;
  SamplerConfig sampler;
  /// Treatments with a decay-modifier prior; empty means "those of the plots".
  std::vector<std::string> treatments;
  Json prior_overrides = Json::object();
  /// Raw synthetic section, parsed by the generator.
  Json synthetic = nullptr;

  fs::path resolve(const std::string& file) const;
};

ExperimentConfig parse_config(const Json& j, const fs::path& base_dir);
ExperimentConfig read_config(const fs::path& path);
Json config_to_json(const ExperimentConfig& cfg);

struct Experiment {
  ExperimentConfig config;
  std::vector<PlotData> plots;
  /// Defaults, then overrides, then the scenario.
  PriorTable priors;
};

/// Builds the prior table for plots under a config (without reading files).
PriorTable build_priors(const std::vector<PlotData>& plots, const ExperimentConfig& cfg);

/// Reads the config and its three tables and validates all cross-references.
Experiment load_experiment(const fs::path& config_path);

/// One CSV per chain (chain_<k>.csv); returns the written paths.
std::vector<fs::path> write_draws(const fs::path& dir, const std::vector<ChainDraws>& chains);
std::vector<ChainDraws> read_draws(const fs::path& dir);

Json summary_to_json(const SummaryRow& row);
Json report_json(const std::vector<SummaryRow>& summaries, const std::vector<SummaryRow>& flux,
                 const std::vector<ChainDraws>& chains);

void write_text(const fs::path& path, const std::string& text);
std::string read_text(const fs::path& path);
void write_json(const fs::path& path, const Json& j);
Json read_json(const fs::path& path);

std::uint64_t fnv1a(std::string_view bytes);
std::string hex64(std::uint64_t v);

/// manifest.json listing every file with its size and content hash.
void write_manifest(const fs::path& out_dir, std::string_view command, std::uint64_t seed, const Json& config,
                    const std::vector<fs::path>& artifacts);

}  // namespace soc
