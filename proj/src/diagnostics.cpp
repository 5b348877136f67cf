#include "soc/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <Eigen/QR>

#include "soc/error.hpp"

namespace soc {

double rhat(const std::vector<std::vector<double>>& chains) {
  const std::size_t m = chains.size();
  if (m < 2) throw ValidationError("R-hat needs at least two chains");
  const std::size_t n = chains[0].size();
  if (n < 2) throw ValidationError("R-hat needs at least two draws per chain");
  for (const auto& c : chains) {
    if (c.size() != n) throw ValidationError("R-hat needs chains of equal length");
  }
  std::vector<double> means(m);
  double grand = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    double s = 0.0;
    for (double v : chains[j]) s += v;
    means[j] = s / n;
    grand += means[j];
  }
  grand /= m;
  double b = 0.0;
  for (double mj : means) b += (mj - grand) * (mj - grand);
  b *= static_cast<double>(n) / (m - 1);
  double w = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    double s = 0.0;
    for (double v : chains[j]) s += (v - means[j]) * (v - means[j]);
    w += s / (n - 1);
  }
  w /= m;
  if (!(w > 0.0)) throw NumericError("R-hat undefined: within-chain variance is zero");
  const double var_plus = (n - 1.0) / n * w + b / n;
  return std::sqrt(var_plus / w);
}

double quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw ValidationError("quantile of an empty sample");
  const double h = (sorted.size() - 1) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - lo) * (sorted[hi] - sorted[lo]);
}

SummaryRow summarize(std::string name, std::span<const double> draws, bool tail) {
  if (draws.empty()) throw ValidationError("no draws to summarize for '" + name + "'");
  std::vector<double> s(draws.begin(), draws.end());
  std::sort(s.begin(), s.end());
  SummaryRow row;
  row.name = std::move(name);
  double sum = 0.0;
  for (double v : draws) sum += v;
  row.mean = sum / draws.size();
  row.median = quantile_sorted(s, 0.5);
  row.q05 = quantile_sorted(s, 0.05);
  row.q25 = quantile_sorted(s, 0.25);
  row.q75 = quantile_sorted(s, 0.75);
  row.q95 = quantile_sorted(s, 0.95);
  if (tail) {
    const auto neg = std::lower_bound(s.begin(), s.end(), 0.0) - s.begin();
    row.prob_negative = static_cast<double>(neg) / s.size();
  }
  return row;
}

std::vector<std::vector<double>> column(const std::vector<ChainDraws>& chains, std::string_view name) {
  std::vector<std::vector<double>> out;
  for (const auto& c : chains) {
    auto it = std::find(c.names.begin(), c.names.end(), name);
    if (it == c.names.end()) throw ValidationError("draws have no column '" + std::string(name) + "'");
    const auto k = it - c.names.begin();
    out.emplace_back(c.draws.col(k).data(), c.draws.col(k).data() + c.draws.rows());
  }
  return out;
}

namespace {

SummaryRow summarize_series(std::string name, const std::vector<std::vector<double>>& series, bool tail) {
  std::vector<double> pooled;
  for (const auto& s : series) pooled.insert(pooled.end(), s.begin(), s.end());
  SummaryRow row = summarize(std::move(name), pooled, tail);
  if (series.size() >= 2 && series[0].size() >= 2) {
    try {
      row.rhat = rhat(series);
    } catch (const NumericError&) {
      row.rhat.reset();
    }
  }
  return row;
}

}  // namespace

SummaryRow summarize_column(const std::vector<ChainDraws>& chains, std::string_view name, bool tail) {
  return summarize_series(std::string(name), column(chains, name), tail);
}

std::vector<SummaryRow> summarize_all(const std::vector<ChainDraws>& chains) {
  if (chains.empty()) throw ValidationError("no chains to summarize");
  std::vector<SummaryRow> rows;
  for (const auto& name : chains[0].names) rows.push_back(summarize_column(chains, name));
  return rows;
}

std::map<std::string, std::vector<std::vector<double>>> flux_draws(const std::vector<ChainDraws>& chains,
                                                                   const std::vector<PlotData>& plots) {
  if (chains.empty()) throw ValidationError("no chains for flux posterior");
  std::map<std::string, std::vector<std::vector<double>>> out;
  std::set<std::string> treatments;
  for (const auto& pl : plots) treatments.insert(pl.treatment);

  for (const auto& c : chains) {
    auto col = [&c](const std::string& name) {
      auto it = std::find(c.names.begin(), c.names.end(), name);
      if (it == c.names.end()) throw ValidationError("draws have no column '" + name + "'");
      return static_cast<Eigen::Index>(it - c.names.begin());
    };
    struct Cols {
      std::array<Eigen::Index, kPools> first;
      std::array<Eigen::Index, kDecayingPools> last;
    };
    std::vector<Cols> cols;
    for (const auto& pl : plots) {
      Cols cc{};
      for (std::size_t k = 0; k < kPools; ++k) cc.first[k] = col(PosteriorModel::state_name(pl.id, k, 0));
      for (std::size_t k = 0; k < kDecayingPools; ++k) cc.last[k] = col(PosteriorModel::state_name(pl.id, k, pl.months()));
      cols.push_back(cc);
    }
    std::map<std::string, std::vector<double>> per_chain;
    const Eigen::Index n = c.draws.rows();
    for (Eigen::Index r = 0; r < n; ++r) {
      std::map<std::string, std::vector<PlotFlux>> by_treatment;
      for (std::size_t p = 0; p < plots.size(); ++p) {
        std::array<double, kPools> a{};
        std::array<double, kPools> b{};
        for (std::size_t k = 0; k < kPools; ++k) a[k] = c.draws(r, cols[p].first[k]);
        b = a;
        for (std::size_t k = 0; k < kDecayingPools; ++k) b[k] = c.draws(r, cols[p].last[k]);
        const double f = flux_plot(PoolState::from_array(a), PoolState::from_array(b), plots[p].months());
        per_chain["flux_plot[" + plots[p].id + "]"].push_back(f);
        by_treatment[plots[p].treatment].push_back({f, plots[p].area});
      }
      for (const auto& [tau, fl] : by_treatment) per_chain["flux[" + tau + "]"].push_back(flux_treatment(fl));
    }
    for (auto& [name, v] : per_chain) out[name].push_back(std::move(v));
  }
  return out;
}

std::vector<SummaryRow> flux_posterior(const std::vector<ChainDraws>& chains, const std::vector<PlotData>& plots) {
  const auto draws = flux_draws(chains, plots);
  std::vector<SummaryRow> rows;
  for (const auto& [name, series] : draws) {
    if (name.starts_with("flux[")) rows.push_back(summarize_series(name, series, true));
  }
  return rows;
}

TrendSurface trend_surface_diagnostic(std::span<const SpatialSample> samples) {
  const auto n = static_cast<Eigen::Index>(samples.size());
  if (n < 5) throw ValidationError("trend surface needs at least 5 locations");
  Eigen::MatrixXd X(n, 4);
  Eigen::VectorXd z(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& s = samples[i];
    if (!(s.value > 0.0) || !std::isfinite(s.value)) throw ValidationError("trend surface needs positive values");
    X(i, 0) = 1.0;
    X(i, 1) = s.x;
    X(i, 2) = s.y;
    X(i, 3) = s.x * s.y;
    z[i] = std::log(s.value);
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  if (qr.rank() < 4) throw NumericError("trend surface design is rank deficient (collinear coordinates)");
  TrendSurface out;
  out.coef = qr.solve(z);
  out.residuals = z - X * out.coef;
  out.sigma2 = n > 4 ? out.residuals.squaredNorm() / static_cast<double>(n - 4) : 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double dx = samples[i].x - samples[j].x;
      const double dy = samples[i].y - samples[j].y;
      const double diff = out.residuals[i] - out.residuals[j];
      out.pairs.push_back({static_cast<std::size_t>(i), static_cast<std::size_t>(j), std::hypot(dx, dy), diff * diff,
                           std::sqrt(std::abs(diff))});
    }
  }
  return out;
}

}  // namespace soc
