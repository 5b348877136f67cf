#pragma once

#include <algorithm>
#include <random>
#include <string>
#include <vector>

#include "soc/posterior.hpp"

namespace soc::testing {

inline PlotData make_plot(std::string id, std::string treatment, double area = 1.0, double x = 0.0, double y = 0.0) {
  PlotData p;
  p.id = std::move(id);
  p.treatment = std::move(treatment);
  p.area = area;
  p.x = x;
  p.y = y;
  return p;
}

// Small experiment with seasonal inputs and every fraction observed at a few months.
inline std::vector<PlotData> small_experiment(int n_plots, int months, unsigned seed,
                                             const std::vector<std::string>& treatments = {"T1", "T2"}) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<PlotData> plots;
  for (int p = 0; p < n_plots; ++p) {
    PlotData pl;
    pl.id = "p" + std::to_string(p + 1);
    pl.treatment = treatments[p % treatments.size()];
    pl.area = 1.0 + unif(rng);
    pl.x = 10.0 * unif(rng);
    pl.y = 10.0 * unif(rng);
    for (int t = 0; t < months; ++t) {
      pl.forcing.push_back({0.1 + 0.3 * unif(rng), 0.05 * unif(rng), 0.5 + unif(rng), 1.0});
    }
    for (int t = 0; t <= months; t += 2) {
      pl.observations.push_back({t, Measure::TOC, 40.0 + 20.0 * unif(rng)});
      pl.observations.push_back({t, Measure::POC, 5.0 + 5.0 * unif(rng)});
      pl.observations.push_back({t, Measure::ROC, 3.0 + 4.0 * unif(rng)});
    }
    plots.push_back(std::move(pl));
  }
  return plots;
}

inline PriorTable priors_for(const std::vector<PlotData>& plots) {
  std::vector<std::string> ids;
  std::vector<std::string> taus;
  for (const auto& p : plots) {
    ids.push_back(p.id);
    if (std::find(taus.begin(), taus.end(), p.treatment) == taus.end()) taus.push_back(p.treatment);
  }
  return default_priors(ids, taus);
}

}  // namespace soc::testing
