#include "soc/pipeline.hpp"

#include <cmath>
#include <cstdio>
#include <mutex>
#include <ostream>

#include "soc/error.hpp"

namespace soc {

FitResult fit_experiment(const std::vector<PlotData>& plots, const PriorTable& priors, const SamplerConfig& sampler,
                         WorkerPool* pool, std::ostream* log) {
  PosteriorModel model(plots, priors, pool);
  std::mutex mu;
  ProgressFn progress;
  if (log) {
    progress = [&](int chain, int it, int total) {
      std::lock_guard lock(mu);
      *log << "chain " << chain << ": " << it << "/" << total << (it <= sampler.warmup ? " (warmup)" : "") << "\n";
      log->flush();
    };
  }
  FitResult fit;
  fit.chains = run_hmc(model, sampler, pool, progress);
  fit.summaries = summarize_all(fit.chains);
  fit.flux = flux_posterior(fit.chains, model.plots());
  return fit;
}

std::string summary_csv(const std::vector<SummaryRow>& rows) {
  std::string s = "name,mean,median,q05,q25,q75,q95,prob_negative,rhat,converged\n";
  for (const auto& r : rows) {
    s += csv_field(r.name) + ',' + format_double(r.mean) + ',' + format_double(r.median) + ',' + format_double(r.q05) + ',' +
         format_double(r.q25) + ',' + format_double(r.q75) + ',' + format_double(r.q95) + ',' +
         (r.prob_negative ? format_double(*r.prob_negative) : "") + ',' + (r.rhat ? format_double(*r.rhat) : "") + ',' +
         (r.rhat ? (r.converged() ? "true" : "false") : "") + '\n';
  }
  return s;
}

std::vector<fs::path> write_fit_outputs(const fs::path& out_dir, const FitResult& fit) {
  auto paths = write_draws(out_dir, fit.chains);
  const fs::path report = out_dir / "report.json";
  write_json(report, report_json(fit.summaries, fit.flux, fit.chains));
  paths.push_back(report);
  std::vector<SummaryRow> rows = fit.summaries;
  rows.insert(rows.end(), fit.flux.begin(), fit.flux.end());
  const fs::path summary = out_dir / "summary.csv";
  write_text(summary, summary_csv(rows));
  paths.push_back(summary);
  return paths;
}

std::vector<SummaryRow> headline_rows(const FitResult& fit, std::size_t n_globals) {
  std::vector<SummaryRow> rows(fit.summaries.begin(),
                               fit.summaries.begin() + std::min(n_globals, fit.summaries.size()));
  rows.insert(rows.end(), fit.flux.begin(), fit.flux.end());
  return rows;
}

void print_rhat_table(std::ostream& os, const std::vector<SummaryRow>& rows) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-24s %12s %12s %12s %9s\n", "quantity", "median", "q05", "q95", "R-hat");
  os << buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%-24s %12.5g %12.5g %12.5g %9s%s\n", r.name.c_str(), r.median, r.q05, r.q95,
                  r.rhat ? format_double(std::round(*r.rhat * 1e4) / 1e4).c_str() : "-",
                  r.rhat && !r.converged() ? "  (not converged)" : "");
    os << buf;
  }
}

ModelParams prior_mean_params(const PriorTable& priors, const std::vector<std::string>& treatments) {
  auto value = [&priors](std::string_view name) {
    const Prior& p = priors.at(name);
    const double m = mean(p.dist);
    return p.log_scale ? std::exp(m) : m;
  };
  ModelParams mp;
  for (std::size_t k = 0; k < kDecayingPools; ++k) {
    mp.rates.kappa[k] = value(names::kKappa[k]);
    mp.routing.pi_m[k] = value(names::kPiM[k]);
    mp.noise.sigma2_process[k] = value(names::kSigma2Process[k]);
  }
  for (const auto& tau : treatments) mp.rates.alpha[tau] = value(names::alpha(tau));
  mp.routing.p_xf = value(names::kPxf);
  mp.routing.p_hs = value(names::kPhs);
  mp.routing.p_clay = value(names::kPclay);
  mp.routing.r_dpm_rpm = value(names::kRdpm);
  for (std::size_t j = 0; j < 3; ++j) mp.noise.sigma2_meas[j] = value(names::kSigma2Meas[j]);
  return mp;
}

PoolState prior_mean_initial(const PriorTable& priors, const std::string& plot_id) {
  const auto& ip = priors.initial_for(plot_id);
  std::array<double, kPools> a{};
  for (std::size_t k = 0; k < kPools; ++k) a[k] = mean(ip[k].dist);
  return PoolState::from_array(a);
}

std::string trajectories_csv(const std::vector<PlotData>& plots, const std::vector<Trajectory>& trajectories,
                             const ModelParams& params) {
  const DerivedRouting rt = derive_routing(params.routing);
  std::string s = "plot_id,month,D,R,F,S,H,I,CO2,TOC,POC,ROC\n";
  for (std::size_t p = 0; p < plots.size(); ++p) {
    const auto& traj = trajectories.at(p);
    for (std::size_t t = 0; t < traj.size(); ++t) {
      double co2 = 0.0;
      if (t > 0) {
        const auto dm = decayed_masses(traj[t - 1], params.rates, plots[p].treatment, plots[p].forcing[t - 1]);
        co2 = (dm.u + dm.v) * rt.co2_share();
      }
      const Fractions f = observe_map(traj[t]);
      s += csv_field(plots[p].id) + ',' + std::to_string(t);
      for (double v : traj[t].as_array()) s += ',' + format_double(v);
      s += ',' + format_double(co2) + ',' + format_double(f.toc) + ',' + format_double(f.poc) + ',' +
           format_double(f.roc) + '\n';
    }
  }
  return s;
}

std::vector<SpatialSample> spatial_samples(const std::vector<PlotData>& plots, Measure type) {
  std::vector<SpatialSample> out;
  for (const auto& p : plots) {
    double sum = 0.0;
    int n = 0;
    for (const auto& o : p.observations) {
      if (o.type != type) continue;
      sum += std::log(o.value);
      ++n;
    }
    if (n > 0) out.push_back({p.x, p.y, std::exp(sum / n)});
  }
  return out;
}

}  // namespace soc
