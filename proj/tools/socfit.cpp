// socfit: simulate, generate synthetic data, fit, diagnose, summarize and
// compare prior scenarios for the six-pool soil carbon model.

#include <iostream>
#include <random>
#include <set>

#include <CLI11.hpp>

#include "soc/error.hpp"
#include "soc/pipeline.hpp"

using namespace soc;

namespace {

struct SamplerFlags {
  std::optional<int> chains, warmup, iters, thin, max_depth;
  std::optional<double> target_accept;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> scenario;

  void add(CLI::App* cmd) {
    cmd->add_option("--chains", chains, "Number of chains (default 6)");
    cmd->add_option("--warmup", warmup, "Warmup iterations per chain (default 20000)");
    cmd->add_option("--iters", iters, "Post-warmup iterations per chain (default 50000)");
    cmd->add_option("--thin", thin, "Keep every n-th post-warmup draw (default 10)");
    cmd->add_option("--max-depth", max_depth, "Maximum tree depth (default 10)");
    cmd->add_option("--target-accept", target_accept, "Step-size adaptation target (default 0.8)");
    cmd->add_option("--seed", seed, "Random seed (default: config seed, else 1)");
    cmd->add_option("--scenario", scenario, "Prior scenario N, A or B (default: config, else N)")
        ->check(CLI::IsMember({"N", "A", "B"}));
  }

  void apply(ExperimentConfig& cfg) const {
    if (chains) cfg.sampler.chains = *chains;
    if (warmup) cfg.sampler.warmup = *warmup;
    if (iters) cfg.sampler.iters = *iters;
    if (thin) cfg.sampler.thin = *thin;
    if (max_depth) cfg.sampler.max_depth = *max_depth;
    if (target_accept) cfg.sampler.target_accept = *target_accept;
    if (seed) cfg.sampler.seed = *seed;
    if (scenario) cfg.scenario = parse_scenario(*scenario);
    cfg.sampler.validate();
  }
};

std::vector<PlotData> plots_for_simulation(const ExperimentConfig& cfg, const SyntheticSpec& spec) {
  auto plots = read_plot_table(cfg.resolve(cfg.plots_file));
  if (!cfg.forcing_file.empty()) {
    read_forcing(cfg.resolve(cfg.forcing_file), plots);
  } else {
    for (auto& p : plots) p.forcing = seasonal_forcing(spec, p.treatment);
  }
  std::sort(plots.begin(), plots.end(), [](const PlotData& a, const PlotData& b) { return a.id < b.id; });
  return plots;
}

std::vector<std::string> treatment_list(const std::vector<PlotData>& plots) {
  std::set<std::string> s;
  for (const auto& p : plots) s.insert(p.treatment);
  return {s.begin(), s.end()};
}

int cmd_simulate(const std::string& config_path, const fs::path& out, const std::string& mode,
                 std::optional<std::uint64_t> seed, const std::string& params_path) {
  ExperimentConfig cfg = read_config(config_path);
  const SyntheticSpec spec = synthetic_spec_from_json(cfg.synthetic);
  auto plots = plots_for_simulation(cfg, spec);
  const PriorTable priors = build_priors(plots, cfg);
  ModelParams mp = prior_mean_params(priors, treatment_list(plots));
  std::optional<PoolState> initial = spec.fixed_initial;
  if (spec.fixed_params) mp = *spec.fixed_params;
  if (!params_path.empty()) {
    const Json j = read_json(params_path);
    Json pj = j;
    if (pj.contains("initial")) {
      std::array<double, kPools> a{};
      for (std::size_t k = 0; k < kPools; ++k) a[k] = pj["initial"].at(std::string(kPoolNames[k])).get<double>();
      initial = PoolState::from_array(a);
      pj.erase("initial");
    }
    mp = params_from_json(pj);
  }
  const std::uint64_t s = seed.value_or(cfg.sampler.seed);
  std::seed_seq seq{static_cast<std::uint32_t>(s & 0xffffffffu), static_cast<std::uint32_t>(s >> 32)};
  Rng rng(seq);
  std::normal_distribution<double> normal(0.0, 1.0);
  const DerivedRouting rt = derive_routing(mp.routing);

  std::vector<Trajectory> trajs;
  for (const auto& p : plots) {
    const PoolState init = initial ? *initial : prior_mean_initial(priors, p.id);
    if (mode == "deterministic") {
      trajs.push_back(simulate_deterministic(init, mp, p.forcing, p.treatment));
    } else {
      Trajectory traj{init};
      for (const auto& fc : p.forcing) {
        std::array<double, kDecayingPools> eta{};
        for (auto& e : eta) e = normal(rng);
        traj.push_back(step_stochastic(traj.back(), mp.rates, rt, mp.noise, p.treatment, fc, eta));
      }
      trajs.push_back(std::move(traj));
    }
  }
  const fs::path traj_path = out / "trajectories.csv";
  write_text(traj_path, trajectories_csv(plots, trajs, mp));
  const fs::path params_out = out / "parameters.json";
  write_json(params_out, params_to_json(mp));
  Json manifest_cfg = config_to_json(cfg);
  manifest_cfg["mode"] = mode;
  write_manifest(out, "simulate", s, manifest_cfg, {traj_path, params_out});
  std::cerr << "simulated " << plots.size() << " plot(s), " << mode << " mode -> " << traj_path.string() << "\n";
  return 0;
}

int cmd_gen_synthetic(const std::string& config_path, const fs::path& out, std::optional<std::uint64_t> seed) {
  ExperimentConfig cfg = read_config(config_path);
  const SyntheticSpec spec = synthetic_spec_from_json(cfg.synthetic);
  auto plots = read_plot_table(cfg.resolve(cfg.plots_file));
  const PriorTable priors = build_priors(plots, cfg);
  const std::uint64_t s = seed.value_or(cfg.sampler.seed);
  const SyntheticData data = generate_synthetic(plots, priors, spec, s);

  std::vector<fs::path> written = {out / "plots.csv", out / "forcing.csv", out / "observations.csv", out / "truth.json",
                                   out / "config.json"};
  write_plot_table(written[0], data.plots);
  write_forcing(written[1], data.plots);
  write_observations(written[2], data.plots);
  write_json(written[3], truth_to_json(data.truth));
  ExperimentConfig fit_cfg = cfg;
  fit_cfg.plots_file = "plots.csv";
  fit_cfg.forcing_file = "forcing.csv";
  fit_cfg.observations_file = "observations.csv";
  fit_cfg.synthetic = nullptr;
  write_json(written[4], config_to_json(fit_cfg));
  Json manifest_cfg = config_to_json(cfg);
  write_manifest(out, "gen-synthetic", s, manifest_cfg, written);
  std::cerr << "wrote synthetic experiment with " << data.plots.size() << " plot(s) to " << out.string() << "\n";
  return 0;
}

// Shared by fit and sensitivity.
FitResult fit_into(const Experiment& ex, const fs::path& out, WorkerPool& pool, std::string_view command) {
  std::cerr << "fitting " << ex.plots.size() << " plot(s), scenario " << to_string(ex.config.scenario) << ", "
            << ex.config.sampler.chains << " chain(s) x (" << ex.config.sampler.warmup << " warmup + "
            << ex.config.sampler.iters << " iters, thin " << ex.config.sampler.thin << ")\n";
  FitResult fit = fit_experiment(ex.plots, ex.priors, ex.config.sampler, &pool, &std::cerr);
  auto paths = write_fit_outputs(out, fit);
  write_manifest(out, command, ex.config.sampler.seed, config_to_json(ex.config), paths);
  PosteriorModel model(ex.plots, ex.priors);
  print_rhat_table(std::cerr, headline_rows(fit, model.n_globals()));
  return fit;
}

int cmd_fit(const std::string& config_path, const fs::path& out, const SamplerFlags& flags, WorkerPool& pool) {
  Experiment ex = load_experiment(config_path);
  flags.apply(ex.config);
  ex.priors = build_priors(ex.plots, ex.config);
  fit_into(ex, out, pool, "fit");
  return 0;
}

int cmd_sensitivity(const std::string& config_path, const fs::path& out, SamplerFlags flags, WorkerPool& pool) {
  Experiment ex = load_experiment(config_path);
  flags.scenario.reset();
  flags.apply(ex.config);
  PosteriorModel shape(ex.plots, ex.priors);
  const std::size_t n_globals = shape.n_globals();

  std::string table = "scenario,quantity,median,q25,q75,iqr\n";
  std::vector<fs::path> artifacts;
  for (Scenario sc : {Scenario::N, Scenario::A, Scenario::B}) {
    Experiment run = ex;
    run.config.scenario = sc;
    run.priors = build_priors(run.plots, run.config);
    const fs::path dir = out / std::string(to_string(sc));
    const FitResult fit = fit_into(run, dir, pool, "fit");
    for (const auto& r : headline_rows(fit, n_globals)) {
      table += std::string(to_string(sc)) + ',' + csv_field(r.name) + ',' + format_double(r.median) + ',' + format_double(r.q25) +
               ',' + format_double(r.q75) + ',' + format_double(r.q75 - r.q25) + '\n';
    }
    artifacts.push_back(dir / "manifest.json");
  }
  const fs::path comparison = out / "comparison.csv";
  write_text(comparison, table);
  artifacts.push_back(comparison);
  write_manifest(out, "sensitivity", ex.config.sampler.seed, config_to_json(ex.config), artifacts);
  return 0;
}

int cmd_summarize(const std::string& config_path, const fs::path& draws_dir, const fs::path& out) {
  const auto chains = read_draws(draws_dir);
  std::vector<SummaryRow> rows = summarize_all(chains);
  std::vector<SummaryRow> flux;
  Json cfg_json = Json::object();
  if (!config_path.empty()) {
    const Experiment ex = load_experiment(config_path);
    std::vector<PlotData> plots = ex.plots;
    std::sort(plots.begin(), plots.end(), [](const PlotData& a, const PlotData& b) { return a.id < b.id; });
    flux = flux_posterior(chains, plots);
    cfg_json = config_to_json(ex.config);
  }
  std::vector<SummaryRow> all = rows;
  all.insert(all.end(), flux.begin(), flux.end());
  const fs::path summary = out / "summary.csv";
  write_text(summary, summary_csv(all));
  const fs::path report = out / "report.json";
  write_json(report, report_json(rows, flux, chains));
  write_manifest(out, "summarize", 0, cfg_json, {summary, report});
  return 0;
}

int cmd_diagnose(const std::string& config_path, const fs::path& draws_dir, const fs::path& out) {
  std::vector<fs::path> artifacts;
  Json cfg_json = Json::object();
  if (!draws_dir.empty()) {
    const auto chains = read_draws(draws_dir);
    std::string s = "name,rhat,converged\n";
    int bad = 0;
    for (const auto& name : chains[0].names) {
      const auto series = column(chains, name);
      std::string r;
      std::string ok;
      if (series.size() >= 2) {
        try {
          const double v = rhat(series);
          r = format_double(v);
          ok = v < kRhatThreshold ? "true" : "false";
          if (!(v < kRhatThreshold)) ++bad;
        } catch (const NumericError&) {
          ok = "undefined";
        }
      }
      s += csv_field(name) + ',' + r + ',' + ok + '\n';
    }
    const fs::path path = out / "rhat.csv";
    write_text(path, s);
    artifacts.push_back(path);
    std::cerr << bad << " of " << chains[0].names.size() << " coordinates have R-hat >= " << kRhatThreshold << "\n";
  }
  if (!config_path.empty()) {
    const Experiment ex = load_experiment(config_path);
    cfg_json = config_to_json(ex.config);
    std::string table = "d,sq_diff,rootabs_diff,type\n";
    Json fits = Json::object();
    for (std::size_t m = 0; m < kMeasureNames.size(); ++m) {
      const auto type = static_cast<Measure>(m);
      const auto samples = spatial_samples(ex.plots, type);
      const std::string label(kMeasureNames[m]);
      if (samples.size() < 5) {
        std::cerr << "trend surface for " << label << " skipped: " << samples.size() << " located plot(s), need 5\n";
        continue;
      }
      try {
        const TrendSurface ts = trend_surface_diagnostic(samples);
        for (const auto& pr : ts.pairs) {
          table += format_double(pr.d) + ',' + format_double(pr.sq_diff) + ',' + format_double(pr.rootabs_diff) + ',' +
                   label + '\n';
        }
        fits[label] = {{"coef", {ts.coef[0], ts.coef[1], ts.coef[2], ts.coef[3]}}, {"sigma2", ts.sigma2}};
      } catch (const NumericError& e) {
        std::cerr << "trend surface for " << label << " skipped: " << e.what() << "\n";
      }
    }
    const fs::path tp = out / "trend_surface.csv";
    write_text(tp, table);
    const fs::path fp = out / "trend_fit.json";
    write_json(fp, fits);
    artifacts.push_back(tp);
    artifacts.push_back(fp);
  }
  if (artifacts.empty()) throw ValidationError("diagnose needs --draws, --config or both");
  write_manifest(out, "diagnose", 0, cfg_json, artifacts);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Six-pool soil carbon state-space model: simulation, Bayesian fitting and diagnostics"};
  app.require_subcommand(1);
  std::size_t workers = 0;
  app.add_option("--workers", workers, "Worker threads (default: SOC_WORKERS, else all cores)");

  std::string config;
  std::string out;
  std::string draws;

  auto* sim = app.add_subcommand("simulate", "Forward-simulate pool trajectories");
  std::string mode = "deterministic";
  std::optional<std::uint64_t> sim_seed;
  std::string params_path;
  sim->add_option("--config", config, "Experiment config (JSON)")->required();
  sim->add_option("--out", out, "Output directory")->required();
  sim->add_option("--mode", mode, "deterministic or stochastic")->check(CLI::IsMember({"deterministic", "stochastic"}));
  sim->add_option("--seed", sim_seed, "Noise seed for stochastic mode (default: config seed)");
  sim->add_option("--params", params_path, "Parameter JSON (default: prior means)");

  auto* gen = app.add_subcommand("gen-synthetic", "Generate a synthetic experiment with known truth");
  std::optional<std::uint64_t> gen_seed;
  gen->add_option("--config", config, "Experiment config with a 'synthetic' section")->required();
  gen->add_option("--out", out, "Output directory")->required();
  gen->add_option("--seed", gen_seed, "Truth seed (default: config seed)");

  auto* fit = app.add_subcommand("fit", "Sample the joint posterior");
  SamplerFlags fit_flags;
  fit->add_option("--config", config, "Experiment config (JSON)")->required();
  fit->add_option("--out", out, "Output directory")->required();
  fit_flags.add(fit);

  auto* diag = app.add_subcommand("diagnose", "R-hat per coordinate and trend-surface residual pairs");
  diag->add_option("--draws", draws, "Directory with chain_<k>.csv");
  diag->add_option("--config", config, "Experiment config, for the trend-surface diagnostic");
  diag->add_option("--out", out, "Output directory")->required();

  auto* summ = app.add_subcommand("summarize", "Posterior summaries and flux from saved draws");
  summ->add_option("--draws", draws, "Directory with chain_<k>.csv")->required();
  summ->add_option("--config", config, "Experiment config, for treatment fluxes");
  summ->add_option("--out", out, "Output directory")->required();

  auto* sens = app.add_subcommand("sensitivity", "Fit under prior scenarios N, A and B and compare");
  SamplerFlags sens_flags;
  sens->add_option("--config", config, "Experiment config (JSON)")->required();
  sens->add_option("--out", out, "Output directory")->required();
  sens_flags.add(sens);
  sens->remove_option(sens->get_option("--scenario"));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    WorkerPool pool(workers ? workers : WorkerPool::workers_from_env());
    if (*sim) return cmd_simulate(config, out, mode, sim_seed, params_path);
    if (*gen) return cmd_gen_synthetic(config, out, gen_seed);
    if (*fit) return cmd_fit(config, out, fit_flags, pool);
    if (*diag) return cmd_diagnose(config, draws, out);
    if (*summ) return cmd_summarize(config, draws, out);
    if (*sens) return cmd_sensitivity(config, out, sens_flags, pool);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
