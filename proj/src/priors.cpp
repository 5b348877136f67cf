#include "soc/priors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

#include "soc/error.hpp"

namespace soc {

double Prior::log_density(double value) const {
  if (!log_scale) return log_pdf(dist, value);
  if (!(value > 0.0)) return -kInf;
  return log_pdf(dist, std::log(value));
}

double Prior::draw(Rng& rng) const {
  const double x = sample(dist, rng);
  return log_scale ? std::exp(x) : x;
}

std::string names::alpha(std::string_view treatment) { return "alpha[" + std::string(treatment) + "]"; }

const Prior& PriorTable::at(std::string_view name) const {
  auto it = parameters.find(name);
  if (it == parameters.end()) throw ValidationError("no prior for parameter '" + std::string(name) + "'");
  return it->second;
}

const std::array<Prior, kPools>& PriorTable::initial_for(std::string_view plot_id) const {
  for (std::size_t k = 0; k < plot_ids.size(); ++k) {
    if (plot_ids[k] == plot_id) return initial[k];
  }
  throw ValidationError("no initial-condition priors for plot '" + std::string(plot_id) + "'");
}

std::vector<std::string> PriorTable::treatments() const {
  std::vector<std::string> out;
  for (const auto& [name, prior] : parameters) {
    if (name.starts_with("alpha[") && name.ends_with("]")) out.push_back(name.substr(6, name.size() - 7));
  }
  return out;
}

PriorTable default_priors(std::span<const std::string> plot_ids, std::span<const std::string> treatments) {
  if (plot_ids.empty()) throw ValidationError("default priors need at least one plot");
  auto tn = [](double lo, double hi, double mu, double sigma) { return Prior{TruncNormal{mu, sigma, lo, hi}}; };

  PriorTable t;
  auto& p = t.parameters;
  p.emplace(names::kKappa[0], tn(5.0, 20.0, 10.0, 0.5));
  p.emplace(names::kKappa[1], tn(0.05, 5.0, 0.07, 0.0035));
  p.emplace(names::kKappa[2], tn(0.3, 1.0, 0.66, 0.033));
  p.emplace(names::kKappa[3], tn(0.3, 1.0, 0.66, 0.033));
  p.emplace(names::kKappa[4], tn(0.005, 0.05, 0.02, 0.001));
  for (const auto& tau : treatments) p.emplace(names::alpha(tau), Prior{TruncNormal{0.0, 1.0, -5.0, 5.0}, true});
  p.emplace(names::kPiM[0], tn(0.0, 1.0, 0.49, 0.01));
  p.emplace(names::kPiM[1], tn(0.0, 1.0, 0.49, 0.01));
  p.emplace(names::kPiM[2], tn(0.0, 1.0, 0.0, 0.01));
  p.emplace(names::kPiM[3], tn(0.0, 1.0, 0.0, 0.01));
  p.emplace(names::kPiM[4], tn(0.0, 1.0, 0.02, 0.01));
  p.emplace(names::kPxf, tn(0.0, 1.0, 0.46, 0.01));
  p.emplace(names::kPhs, tn(0.0, 1.0, 0.46, 0.01));
  p.emplace(names::kPclay, tn(0.0, 1.0, 0.16, 0.02));
  p.emplace(names::kRdpm, tn(0.0, kInf, 1.44, 0.5));
  for (auto name : names::kSigma2Process) p.emplace(name, Prior{InverseGamma{403.4, 0.318}});
  p.emplace(names::kSigma2Meas[0], Prior{InverseGamma{21.0 / 2.0, 0.053}});
  p.emplace(names::kSigma2Meas[1], Prior{InverseGamma{21.0 / 2.0, 0.039}});
  p.emplace(names::kSigma2Meas[2], Prior{InverseGamma{21.0 / 2.0, 0.290}});

  const std::array<Prior, kPools> init = {
      tn(0.0, kInf, 0.0, 0.1),  tn(0.0, kInf, 0.0, 100.0), tn(0.0, kInf, 0.0, 0.01),
      tn(0.0, kInf, 0.0, 0.01), tn(0.0, kInf, 0.0, 100.0), tn(0.0, kInf, 0.0, 10.0),
  };
  t.plot_ids.assign(plot_ids.begin(), plot_ids.end());
  t.initial.assign(plot_ids.size(), init);
  return t;
}

PriorTable default_priors(std::size_t n_plots, std::span<const std::string> treatments) {
  std::vector<std::string> ids;
  for (std::size_t k = 1; k <= n_plots; ++k) ids.push_back(std::to_string(k));
  return default_priors(ids, treatments);
}

Scenario parse_scenario(std::string_view label) {
  if (label == "N") return Scenario::N;
  if (label == "A") return Scenario::A;
  if (label == "B") return Scenario::B;
  throw ValidationError("unknown prior scenario '" + std::string(label) + "' (expected N, A or B)");
}

std::string_view to_string(Scenario s) {
  switch (s) {
    case Scenario::N: return "N";
    case Scenario::A: return "A";
    case Scenario::B: return "B";
  }
  return "?";
}

PriorTable apply_scenario(const PriorTable& table, Scenario scenario) {
  PriorTable out = table;
  switch (scenario) {
    case Scenario::N:
      break;
    case Scenario::A:
      for (auto name : names::kKappa) {
        auto it = out.parameters.find(name);
        if (it == out.parameters.end()) continue;
        if (auto* tn = std::get_if<TruncNormal>(&it->second.dist)) {
          tn->sigma *= 2.0;
        } else {
          throw ValidationError("scenario A expects a truncated-normal prior on " + std::string(name));
        }
      }
      break;
    case Scenario::B:
      for (auto name : names::kSigma2Process) out.parameters[std::string(name)] = Prior{InverseGamma{102.4, 0.08}};
      break;
  }
  return out;
}

TailProbabilities multiplier_tails(const InverseGamma& ig, double lo_mult, double hi_mult) {
  validate(Distribution{ig});
  const double log_lo = std::log(lo_mult);
  const double log_hi = std::log(hi_mult);
  // sigma^2 = scale / G with G ~ Gamma(shape, 1); integrate over y = log G, whose
  // density exp(shape * y - e^y) / Gamma(shape) is smooth and decays on both sides.
  const double a = ig.shape;
  const double log_norm = std::lgamma(a);
  auto density = [a, log_norm](double y) { return std::exp(a * y - std::exp(y) - log_norm); };
  auto sigma2_at = [&ig](double y) { return ig.scale * std::exp(-y); };
  auto lower = [&](double y) {
    const double s2 = sigma2_at(y);
    return density(y) * std_normal_cdf((log_lo + 0.5 * s2) / std::sqrt(s2));
  };
  auto upper = [&](double y) {
    const double s2 = sigma2_at(y);
    return density(y) * std_normal_ccdf((log_hi + 0.5 * s2) / std::sqrt(s2));
  };
  // Left tail falls like e^{a y}; right tail doubly exponentially past the mode log(a).
  const double y_mode = std::log(a);
  const double y_lo = y_mode - 45.0 / a - 10.0;
  const double y_hi = std::log(a + 12.0 * std::sqrt(a) + 60.0);
  using Gk = boost::math::quadrature::gauss_kronrod<double, 61>;
  TailProbabilities out;
  out.lower = Gk::integrate(lower, y_lo, y_hi, 12, 1e-11);
  out.upper = Gk::integrate(upper, y_lo, y_hi, 12, 1e-11);
  return out;
}

IgFit fit_ig_to_multiplier_band(double lo_mult, double hi_mult, double tail_prob) {
  if (!(lo_mult > 0.0 && lo_mult < 1.0 && hi_mult > 1.0 && std::isfinite(hi_mult)))
    throw ValidationError("multiplier band must satisfy 0 < lo < 1 < hi");
  if (!(tail_prob > 0.0 && tail_prob < 0.5)) throw ValidationError("tail probability must lie in (0, 0.5)");

  const double log_target = std::log(tail_prob);
  auto tails_of = [&](double log_shape, double log_scale) {
    return multiplier_tails(InverseGamma{std::exp(log_shape), std::exp(log_scale)}, lo_mult, hi_mult);
  };
  // For a given shape, the scale that puts the geometric mean of the two tails on target.
  auto balanced_scale = [&](double log_shape) {
    auto f = [&](double log_scale) {
      const auto t = tails_of(log_shape, log_scale);
      const double lo = std::max(t.lower, std::numeric_limits<double>::min());
      const double hi = std::max(t.upper, std::numeric_limits<double>::min());
      return 0.5 * (std::log(lo) + std::log(hi)) - log_target;
    };
    double a = log_shape + std::log(1e-10);
    double b = log_shape + std::log(10.0);
    std::uintmax_t iters = 200;
    auto tol = boost::math::tools::eps_tolerance<double>(50);
    auto r = boost::math::tools::toms748_solve(f, a, b, f(a), f(b), tol, iters);
    return 0.5 * (r.first + r.second);
  };
  auto imbalance = [&](double log_shape) {
    const double ls = balanced_scale(log_shape);
    const auto t = tails_of(log_shape, ls);
    return std::log(t.lower) - log_target;
  };

  // Scan log-shape for a sign change of the lower-tail error; refine by root finding
  // when one exists, otherwise minimize its magnitude.
  const double lo_shape = std::log(0.2);
  const double hi_shape = std::log(1e4);
  constexpr int kGrid = 24;
  std::vector<double> grid(kGrid + 1);
  std::vector<double> err(kGrid + 1);
  for (int k = 0; k <= kGrid; ++k) {
    grid[k] = lo_shape + (hi_shape - lo_shape) * k / kGrid;
    err[k] = imbalance(grid[k]);
  }
  double best = grid[0];
  bool bracketed = false;
  for (int k = 0; k < kGrid && !bracketed; ++k) {
    if (err[k] == 0.0) {
      best = grid[k];
      bracketed = true;
    } else if ((err[k] < 0.0) != (err[k + 1] < 0.0)) {
      std::uintmax_t iters = 100;
      auto tol = boost::math::tools::eps_tolerance<double>(40);
      auto r = boost::math::tools::toms748_solve(imbalance, grid[k], grid[k + 1], err[k], err[k + 1], tol, iters);
      best = 0.5 * (r.first + r.second);
      bracketed = true;
    }
  }
  if (!bracketed) {
    auto k_min = std::min_element(err.begin(), err.end(), [](double a, double b) { return std::abs(a) < std::abs(b); }) -
                 err.begin();
    const double a = grid[std::max<long>(k_min - 1, 0)];
    const double b = grid[std::min<long>(k_min + 1, kGrid)];
    best = boost::math::tools::brent_find_minima([&](double x) { return std::abs(imbalance(x)); }, a, b, 30).first;
  }

  IgFit fit;
  const double log_scale = balanced_scale(best);
  fit.ig = InverseGamma{std::exp(best), std::exp(log_scale)};
  fit.tails = multiplier_tails(fit.ig, lo_mult, hi_mult);
  auto in_band = [tail_prob](double p) { return p >= 0.5 * tail_prob && p <= 2.0 * tail_prob; };
  if (!in_band(fit.tails.lower) || !in_band(fit.tails.upper)) {
    throw NumericError("infeasible multiplier band: best inverse gamma gives tails " + std::to_string(fit.tails.lower) +
                       " and " + std::to_string(fit.tails.upper));
  }
  return fit;
}

}  // namespace soc
