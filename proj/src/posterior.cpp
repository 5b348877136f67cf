#include "soc/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <set>

#include "soc/error.hpp"

namespace soc {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

std::string where(std::string_view plot_id, int month) {
  return "plot '" + std::string(plot_id) + "' month " + std::to_string(month);
}

}  // namespace

std::vector<std::string> LogDensity::output_names() const {
  std::vector<std::string> out;
  for (std::size_t k = 0; k < dim(); ++k) out.push_back("x" + std::to_string(k));
  return out;
}

void PlotData::validate() const {
  if (id.empty()) throw ValidationError("plot id is empty");
  if (treatment.empty()) throw ValidationError("plot '" + id + "' has no treatment");
  if (!(std::isfinite(area) && area > 0.0)) throw ValidationError("plot '" + id + "' needs a positive area");
  if (!std::isfinite(x) || !std::isfinite(y)) throw ValidationError("plot '" + id + "' has non-finite coordinates");
  if (forcing.empty()) throw ValidationError("plot '" + id + "' has no forcing months");
  for (std::size_t t = 0; t < forcing.size(); ++t) {
    try {
      forcing[t].validate();
    } catch (const ValidationError& e) {
      throw ValidationError(where(id, static_cast<int>(t)) + ": " + e.what());
    }
  }
  for (const auto& o : observations) {
    if (o.month < 0 || o.month > months())
      throw ValidationError(where(id, o.month) + ": observation outside months 0.." + std::to_string(months()));
    if (!(std::isfinite(o.value) && o.value > 0.0))
      throw ValidationError(where(id, o.month) + ": observation values must be positive");
  }
}

Trajectory simulate_deterministic(const PoolState& initial, const ModelParams& params, std::span<const Forcing> forcing,
                                  std::string_view treatment) {
  const DerivedRouting rt = derive_routing(params.routing);
  const auto rates = params.rates.effective(treatment);
  Trajectory out{initial};
  out.reserve(forcing.size() + 1);
  for (const auto& fc : forcing) out.push_back(step_mean(out.back(), rates, rt, fc).next);
  return out;
}

double log_process(const Trajectory& traj, const ModelParams& params, std::span<const Forcing> forcing,
                   std::string_view treatment, std::string* flag) {
  if (traj.size() != forcing.size() + 1) throw ValidationError("trajectory length must be forcing length + 1");
  const DerivedRouting rt = derive_routing(params.routing);
  double lp = 0.0;
  for (std::size_t t = 0; t + 1 < traj.size(); ++t) {
    if (traj[t + 1].i != traj[t].i) {
      if (flag) *flag = "inert pool changed at step " + std::to_string(t);
      return -kInf;
    }
    const auto mean = step_deterministic(traj[t], params.rates, rt, treatment, forcing[t]).next.as_array();
    const auto next = traj[t + 1].as_array();
    for (std::size_t k = 0; k < kDecayingPools; ++k) {
      if (!(mean[k] > 0.0) || !(next[k] > 0.0)) {
        if (flag) *flag = "nonpositive " + std::string(kPoolNames[k]) + " at step " + std::to_string(t);
        return -kInf;
      }
      const double s = params.noise.sigma2_process[k];
      const double rho = std::log(next[k]) - std::log(mean[k]) + 0.5 * s;
      lp += -0.5 * (kLog2Pi + std::log(s)) - rho * rho / (2.0 * s);
    }
  }
  return lp;
}

double log_data(const PlotData& plot, const Trajectory& traj, const std::array<double, 3>& sigma2_meas) {
  double lp = 0.0;
  for (const auto& o : plot.observations) {
    if (o.month < 0 || static_cast<std::size_t>(o.month) >= traj.size())
      throw ValidationError(where(plot.id, o.month) + ": no state for this observation");
    const double f = observe_map(traj[o.month])[o.type];
    if (!(f > 0.0)) return -kInf;
    const double s = sigma2_meas[static_cast<std::size_t>(o.type)];
    const double lz = std::log(o.value);
    const double rho = lz - std::log(f) + 0.5 * s;
    lp += -lz - 0.5 * (kLog2Pi + std::log(s)) - rho * rho / (2.0 * s);
  }
  return lp;
}

std::string PosteriorModel::state_name(std::string_view plot_id, std::size_t pool, int month) {
  return std::string(kPoolNames[pool]) + "[" + std::string(plot_id) + "," + std::to_string(month) + "]";
}

PosteriorModel::PosteriorModel(std::vector<PlotData> plots, PriorTable priors, WorkerPool* pool)
    : plots_(std::move(plots)), priors_(std::move(priors)), pool_(pool) {
  if (plots_.empty()) throw ValidationError("posterior needs at least one plot");
  std::sort(plots_.begin(), plots_.end(), [](const PlotData& a, const PlotData& b) { return a.id < b.id; });
  for (std::size_t p = 0; p < plots_.size(); ++p) {
    plots_[p].validate();
    if (p > 0 && plots_[p].id == plots_[p - 1].id) throw ValidationError("duplicate plot id '" + plots_[p].id + "'");
  }
  std::set<std::string> labels;
  for (const auto& pl : plots_) labels.insert(pl.treatment);
  treatments_.assign(labels.begin(), labels.end());
  for (const auto& pl : plots_) {
    plot_treatment_.push_back(std::lower_bound(treatments_.begin(), treatments_.end(), pl.treatment) -
                              treatments_.begin());
  }

  auto add_global = [this](std::string_view name) {
    const Prior& prior = priors_.at(name);
    validate(prior.dist);
    const auto [lo, hi] = support(prior.dist);
    coords_.push_back({std::string(name), Transform::for_support(lo, hi), true, prior.log_scale});
    coord_prior_.push_back(&prior);
  };
  i_kappa_ = coords_.size();
  for (auto n : names::kKappa) add_global(n);
  i_alpha_ = coords_.size();
  for (const auto& tau : treatments_) {
    if (!priors_.parameters.contains(names::alpha(tau)))
      throw ValidationError("treatment '" + tau + "' has no decay-modifier prior");
    add_global(names::alpha(tau));
  }
  i_pi_ = coords_.size();
  for (auto n : names::kPiM) add_global(n);
  i_pxf_ = coords_.size();
  add_global(names::kPxf);
  i_phs_ = coords_.size();
  add_global(names::kPhs);
  i_pclay_ = coords_.size();
  add_global(names::kPclay);
  i_rdpm_ = coords_.size();
  add_global(names::kRdpm);
  i_sproc_ = coords_.size();
  for (auto n : names::kSigma2Process) add_global(n);
  i_smeas_ = coords_.size();
  for (auto n : names::kSigma2Meas) add_global(n);
  n_globals_ = coords_.size();

  const Transform positive{Transform::Kind::Lower, 0.0, kInf};
  for (const auto& pl : plots_) {
    offsets_.push_back(coords_.size());
    const auto& init = priors_.initial_for(pl.id);
    for (std::size_t k = 0; k < kPools; ++k) {
      validate(init[k].dist);
      const auto [lo, hi] = support(init[k].dist);
      if (lo < 0.0) throw ValidationError("initial-state prior for plot '" + pl.id + "' must be supported on x >= 0");
      coords_.push_back({state_name(pl.id, k, 0), Transform::for_support(lo, hi), true, false});
      coord_prior_.push_back(&init[k]);
    }
    for (int t = 1; t <= pl.months(); ++t) {
      for (std::size_t k = 0; k < kDecayingPools; ++k) {
        coords_.push_back({state_name(pl.id, k, t), positive, false, false});
        coord_prior_.push_back(nullptr);
      }
    }
  }
}

std::vector<std::string> PosteriorModel::output_names() const {
  std::vector<std::string> out;
  out.reserve(coords_.size());
  for (const auto& c : coords_) out.push_back(c.name);
  return out;
}

Eigen::VectorXd PosteriorModel::constrain(const Eigen::VectorXd& u) const {
  Eigen::VectorXd x(dim());
  for (std::size_t k = 0; k < dim(); ++k) {
    const double q = coords_[k].transform.constrain(u[k]);
    x[k] = coords_[k].exp_output ? std::exp(q) : q;
  }
  return x;
}

Eigen::VectorXd PosteriorModel::unconstrain(const Eigen::VectorXd& x) const {
  Eigen::VectorXd u(dim());
  for (std::size_t k = 0; k < dim(); ++k) {
    const double q = coords_[k].exp_output ? std::log(x[k]) : x[k];
    u[k] = coords_[k].transform.unconstrain(q);
  }
  return u;
}

ModelParams PosteriorModel::params(const Eigen::VectorXd& x) const {
  ModelParams mp;
  for (std::size_t k = 0; k < kDecayingPools; ++k) {
    mp.rates.kappa[k] = x[i_kappa_ + k];
    mp.routing.pi_m[k] = x[i_pi_ + k];
    mp.noise.sigma2_process[k] = x[i_sproc_ + k];
  }
  for (std::size_t j = 0; j < treatments_.size(); ++j) mp.rates.alpha[treatments_[j]] = x[i_alpha_ + j];
  mp.routing.p_xf = x[i_pxf_];
  mp.routing.p_hs = x[i_phs_];
  mp.routing.p_clay = x[i_pclay_];
  mp.routing.r_dpm_rpm = x[i_rdpm_];
  for (std::size_t j = 0; j < 3; ++j) mp.noise.sigma2_meas[j] = x[i_smeas_ + j];
  return mp;
}

Trajectory PosteriorModel::trajectory(const Eigen::VectorXd& x, std::size_t p) const {
  const std::size_t off = offsets_.at(p);
  const int T = plots_[p].months();
  Trajectory traj(T + 1);
  std::array<double, kPools> a{};
  for (std::size_t k = 0; k < kPools; ++k) a[k] = x[off + k];
  traj[0] = PoolState::from_array(a);
  for (int t = 1; t <= T; ++t) {
    for (std::size_t k = 0; k < kDecayingPools; ++k) a[k] = x[off + kPools + (t - 1) * kDecayingPools + k];
    traj[t] = PoolState::from_array(a);
  }
  return traj;
}

Eigen::VectorXd PosteriorModel::pack(const ModelParams& mp, const std::vector<Trajectory>& trajectories) const {
  if (trajectories.size() != plots_.size()) throw ValidationError("need one trajectory per plot");
  Eigen::VectorXd x(dim());
  for (std::size_t k = 0; k < kDecayingPools; ++k) {
    x[i_kappa_ + k] = mp.rates.kappa[k];
    x[i_pi_ + k] = mp.routing.pi_m[k];
    x[i_sproc_ + k] = mp.noise.sigma2_process[k];
  }
  for (std::size_t j = 0; j < treatments_.size(); ++j) {
    auto it = mp.rates.alpha.find(treatments_[j]);
    if (it == mp.rates.alpha.end()) throw ValidationError("no decay modifier for treatment '" + treatments_[j] + "'");
    x[i_alpha_ + j] = it->second;
  }
  x[i_pxf_] = mp.routing.p_xf;
  x[i_phs_] = mp.routing.p_hs;
  x[i_pclay_] = mp.routing.p_clay;
  x[i_rdpm_] = mp.routing.r_dpm_rpm;
  for (std::size_t j = 0; j < 3; ++j) x[i_smeas_ + j] = mp.noise.sigma2_meas[j];
  for (std::size_t p = 0; p < plots_.size(); ++p) {
    const auto& traj = trajectories[p];
    const int T = plots_[p].months();
    if (static_cast<int>(traj.size()) != T + 1)
      throw ValidationError("trajectory for plot '" + plots_[p].id + "' has the wrong length");
    const std::size_t off = offsets_[p];
    const auto a0 = traj[0].as_array();
    for (std::size_t k = 0; k < kPools; ++k) x[off + k] = a0[k];
    for (int t = 1; t <= T; ++t) {
      const auto a = traj[t].as_array();
      for (std::size_t k = 0; k < kDecayingPools; ++k) x[off + kPools + (t - 1) * kDecayingPools + k] = a[k];
    }
  }
  return x;
}

Eigen::VectorXd PosteriorModel::draw_prior(Rng& rng) const {
  ModelParams mp;
  Eigen::VectorXd g(n_globals_);
  for (std::size_t k = 0; k < n_globals_; ++k) g[k] = coord_prior_[k]->draw(rng);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(dim());
  x.head(n_globals_) = g;
  mp = params(x);
  const DerivedRouting rt = derive_routing(mp.routing);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Trajectory> trajs;
  for (const auto& pl : plots_) {
    const auto& init = priors_.initial_for(pl.id);
    std::array<double, kPools> a{};
    for (std::size_t k = 0; k < kPools; ++k) a[k] = init[k].draw(rng);
    Trajectory traj{PoolState::from_array(a)};
    for (const auto& fc : pl.forcing) {
      std::array<double, kDecayingPools> eta{};
      for (auto& e : eta) e = normal(rng);
      traj.push_back(step_stochastic(traj.back(), mp.rates, rt, mp.noise, pl.treatment, fc, eta));
    }
    trajs.push_back(std::move(traj));
  }
  return pack(mp, trajs);
}

Eigen::VectorXd PosteriorModel::initial_point(Rng& rng) const {
  constexpr int kAttempts = 100;
  std::string flag;
  for (int attempt = 0; attempt < kAttempts; ++attempt) {
    Eigen::VectorXd x;
    try {
      x = draw_prior(rng);
    } catch (const NumericError& e) {
      flag = e.what();
      continue;
    }
    Eigen::VectorXd u = unconstrain(x);
    if (!u.allFinite()) {
      flag = "prior draw on the boundary of the support";
      continue;
    }
    if (std::isfinite(log_posterior(u, &flag))) return u;
  }
  throw NumericError("no starting point with finite log posterior after " + std::to_string(kAttempts) +
                     " prior draws (last failure: " + flag + ")");
}

double PosteriorModel::log_posterior(const Eigen::VectorXd& u, std::string* flag) const {
  return evaluate(u, nullptr, flag);
}

double PosteriorModel::log_density_gradient(const Eigen::VectorXd& u, Eigen::VectorXd& grad) const {
  return evaluate(u, &grad, nullptr);
}

struct PosteriorModel::PlotTerm {
  double lp = 0.0;
  std::string flag;
  std::array<double, kDecayingPools> g_kappa{};
  double g_alpha = 0.0;
  double g_pd = 0.0, g_uf = 0.0, g_us = 0.0, g_uh = 0.0, g_vf = 0.0, g_vs = 0.0, g_vh = 0.0;
  std::array<double, kDecayingPools> g_pm{};
  std::array<double, kDecayingPools> g_sproc{};
  std::array<double, 3> g_smeas{};
};

void PosteriorModel::plot_term(std::size_t p, const Eigen::VectorXd& u, const ModelParams& mp,
                               const DerivedRouting& rt, Eigen::VectorXd* grad, PlotTerm& out) const {
  const PlotData& pl = plots_[p];
  const std::size_t off = offsets_[p];
  const int T = pl.months();
  auto idx = [off](int t, std::size_t k) { return off + kPools + (t - 1) * kDecayingPools + k; };
  auto fail = [&out](std::string why) {
    out.lp = -kInf;
    out.flag = std::move(why);
  };

  std::vector<std::array<double, kPools>> X(T + 1);
  std::vector<std::array<double, kPools>> gX(T + 1, std::array<double, kPools>{});
  double lp = 0.0;
  for (std::size_t k = 0; k < kPools; ++k) {
    const Coordinate& c = coords_[off + k];
    const double x = c.transform.constrain(u[off + k]);
    const double lpk = log_pdf(coord_prior_[off + k]->dist, x);
    if (!std::isfinite(lpk) || !(x > 0.0)) return fail(c.name + " outside its prior support");
    lp += lpk + c.transform.log_jacobian(u[off + k]);
    if (grad) {
      (*grad)[off + k] =
          dlog_pdf(coord_prior_[off + k]->dist, x) * c.transform.dconstrain(u[off + k]) + c.transform.dlog_jacobian(u[off + k]);
    }
    X[0][k] = x;
  }
  for (int t = 1; t <= T; ++t) {
    for (std::size_t k = 0; k < kDecayingPools; ++k) X[t][k] = std::exp(u[idx(t, k)]);
    X[t][kDecayingPools] = X[0][kDecayingPools];
  }

  const double alpha = mp.rates.alpha.find(pl.treatment)->second;
  const auto& kappa = mp.rates.kappa;
  const auto& s2 = mp.noise.sigma2_process;
  std::array<double, kDecayingPools> norm{};
  for (std::size_t k = 0; k < kDecayingPools; ++k) norm[k] = -0.5 * (kLog2Pi + std::log(s2[k]));

  for (int t = 0; t < T; ++t) {
    const Forcing& fc = pl.forcing[t];
    const auto& y = X[t];
    std::array<double, kDecayingPools> e{};
    for (std::size_t k = 0; k < kDecayingPools; ++k) e[k] = std::exp(-fc.rate_mod * kappa[k] * alpha * fc.dt / 12.0);
    const double U = y[0] * (1.0 - e[0]) + y[1] * (1.0 - e[1]) + y[2] * (1.0 - e[2]) + y[3] * (1.0 - e[3]);
    const double V = y[4] * (1.0 - e[4]);
    const std::array<double, kDecayingPools> m = {
        y[0] * e[0] + rt.p_pd * fc.p + rt.p_m[0] * fc.m,
        y[1] * e[1] + (1.0 - rt.p_pd) * fc.p + rt.p_m[1] * fc.m,
        y[2] * e[2] + rt.p_uf * U + rt.p_vf * V + rt.p_m[2] * fc.m,
        y[3] * e[3] + rt.p_us * U + rt.p_vs * V + rt.p_m[3] * fc.m,
        y[4] * e[4] + rt.p_uh * U + rt.p_vh * V + rt.p_m[4] * fc.m,
    };
    std::array<double, kDecayingPools> gm{};
    for (std::size_t k = 0; k < kDecayingPools; ++k) {
      if (!(m[k] > 0.0) || !std::isfinite(m[k]))
        return fail("nonpositive mean of pool " + std::string(kPoolNames[k]) + " at " + where(pl.id, t));
      const double s = s2[k];
      const double z = u[idx(t + 1, k)];
      const double rho = z - std::log(m[k]) + 0.5 * s;
      lp += norm[k] - rho * rho / (2.0 * s);
      if (grad) {
        (*grad)[idx(t + 1, k)] += -rho / s;
        gm[k] = rho / (s * m[k]);
        out.g_sproc[k] += -0.5 / s - 0.5 * rho / s + 0.5 * rho * rho / (s * s);
      }
    }
    if (!grad) continue;

    const double gU = gm[2] * rt.p_uf + gm[3] * rt.p_us + gm[4] * rt.p_uh;
    const double gV = gm[2] * rt.p_vf + gm[3] * rt.p_vs + gm[4] * rt.p_vh;
    auto& gy = gX[t];
    std::array<double, kDecayingPools> ge{};
    for (std::size_t k = 0; k < 4; ++k) {
      gy[k] += gm[k] * e[k] + gU * (1.0 - e[k]);
      ge[k] = (gm[k] - gU) * y[k];
    }
    gy[4] += gm[4] * e[4] + gV * (1.0 - e[4]);
    ge[4] = (gm[4] - gV) * y[4];
    const double c = fc.rate_mod * fc.dt / 12.0;
    for (std::size_t k = 0; k < kDecayingPools; ++k) {
      out.g_kappa[k] += -ge[k] * e[k] * c * alpha;
      out.g_alpha += -ge[k] * e[k] * c * kappa[k];
    }
    out.g_uf += gm[2] * U;
    out.g_us += gm[3] * U;
    out.g_uh += gm[4] * U;
    out.g_vf += gm[2] * V;
    out.g_vs += gm[3] * V;
    out.g_vh += gm[4] * V;
    out.g_pd += (gm[0] - gm[1]) * fc.p;
    for (std::size_t k = 0; k < kDecayingPools; ++k) out.g_pm[k] += gm[k] * fc.m;
  }

  const auto& sm = mp.noise.sigma2_meas;
  for (const auto& o : pl.observations) {
    const auto& y = X[o.month];
    double f = 0.0;
    switch (o.type) {
      case Measure::TOC: f = y[0] + y[1] + y[2] + y[3] + y[4] + y[5]; break;
      case Measure::POC: f = y[0] + y[1] + y[2]; break;
      case Measure::ROC: f = y[5]; break;
    }
    if (!(f > 0.0)) return fail("nonpositive " + std::string(kMeasureNames[static_cast<std::size_t>(o.type)]) + " at " +
                                where(pl.id, o.month));
    const std::size_t j = static_cast<std::size_t>(o.type);
    const double s = sm[j];
    const double lz = std::log(o.value);
    const double rho = lz - std::log(f) + 0.5 * s;
    lp += -lz - 0.5 * (kLog2Pi + std::log(s)) - rho * rho / (2.0 * s);
    if (!grad) continue;
    const double gf = rho / (s * f);
    auto& gy = gX[o.month];
    switch (o.type) {
      case Measure::TOC:
        for (auto& g : gy) g += gf;
        break;
      case Measure::POC:
        gy[0] += gf;
        gy[1] += gf;
        gy[2] += gf;
        break;
      case Measure::ROC: gy[5] += gf; break;
    }
    out.g_smeas[j] += -0.5 / s - 0.5 * rho / s + 0.5 * rho * rho / (s * s);
  }

  if (!std::isfinite(lp)) return fail("non-finite log density for plot '" + pl.id + "'");
  out.lp = lp;
  if (!grad) return;
  for (int t = 1; t <= T; ++t) {
    for (std::size_t k = 0; k < kDecayingPools; ++k) (*grad)[idx(t, k)] += gX[t][k] * X[t][k];
    gX[0][kDecayingPools] += gX[t][kDecayingPools];
  }
  for (std::size_t k = 0; k < kPools; ++k) (*grad)[off + k] += gX[0][k] * coords_[off + k].transform.dconstrain(u[off + k]);
}

double PosteriorModel::evaluate(const Eigen::VectorXd& u, Eigen::VectorXd* grad, std::string* flag) const {
  if (static_cast<std::size_t>(u.size()) != dim()) throw ValidationError("point has the wrong dimension");
  auto fail = [flag](std::string why) {
    if (flag) *flag = std::move(why);
    return -kInf;
  };
  if (!u.allFinite()) return fail("non-finite coordinate");
  if (grad) grad->setZero(static_cast<Eigen::Index>(dim()));

  double lp = 0.0;
  Eigen::VectorXd x(n_globals_);
  Eigen::VectorXd dx(n_globals_);
  for (std::size_t k = 0; k < n_globals_; ++k) {
    const Coordinate& c = coords_[k];
    const double q = c.transform.constrain(u[k]);
    const double lpk = log_pdf(coord_prior_[k]->dist, q);
    if (!std::isfinite(lpk)) return fail(c.name + " outside its prior support");
    lp += lpk + c.transform.log_jacobian(u[k]);
    const double dq = c.transform.dconstrain(u[k]);
    if (grad) (*grad)[k] = dlog_pdf(coord_prior_[k]->dist, q) * dq + c.transform.dlog_jacobian(u[k]);
    x[k] = c.exp_output ? std::exp(q) : q;
    dx[k] = c.exp_output ? x[k] * dq : dq;
  }

  Eigen::VectorXd xg = Eigen::VectorXd::Zero(dim());
  xg.head(n_globals_) = x;
  const ModelParams mp = params(xg);
  for (std::size_t k = 0; k < kDecayingPools; ++k) {
    if (!(mp.rates.kappa[k] > 0.0)) return fail(std::string(names::kKappa[k]) + " must be positive");
    if (!(mp.noise.sigma2_process[k] > 0.0)) return fail(std::string(names::kSigma2Process[k]) + " must be positive");
    if (!(mp.routing.pi_m[k] >= 0.0)) return fail(std::string(names::kPiM[k]) + " must be nonnegative");
  }
  for (std::size_t j = 0; j < 3; ++j) {
    if (!(mp.noise.sigma2_meas[j] > 0.0)) return fail(std::string(names::kSigma2Meas[j]) + " must be positive");
  }
  const double pi_sum = std::accumulate(mp.routing.pi_m.begin(), mp.routing.pi_m.end(), 0.0);
  if (!(pi_sum > 0.0)) return fail("manure routing weights sum to zero");
  DerivedRouting rt;
  try {
    rt = derive_routing(mp.routing);
  } catch (const ValidationError& e) {
    return fail(e.what());
  }

  std::vector<PlotTerm> terms(plots_.size());
  auto run = [&](std::size_t p) { plot_term(p, u, mp, rt, grad, terms[p]); };
  if (pool_) {
    pool_->parallel_for(plots_.size(), run);
  } else {
    for (std::size_t p = 0; p < plots_.size(); ++p) run(p);
  }

  PlotTerm sum;
  std::vector<double> g_alpha(treatments_.size(), 0.0);
  for (std::size_t p = 0; p < plots_.size(); ++p) {
    const PlotTerm& t = terms[p];
    if (!std::isfinite(t.lp)) return fail(t.flag);
    lp += t.lp;
    if (!grad) continue;
    for (std::size_t k = 0; k < kDecayingPools; ++k) {
      sum.g_kappa[k] += t.g_kappa[k];
      sum.g_pm[k] += t.g_pm[k];
      sum.g_sproc[k] += t.g_sproc[k];
    }
    for (std::size_t j = 0; j < 3; ++j) sum.g_smeas[j] += t.g_smeas[j];
    g_alpha[plot_treatment_[p]] += t.g_alpha;
    sum.g_pd += t.g_pd;
    sum.g_uf += t.g_uf;
    sum.g_uh += t.g_uh;
    sum.g_vs += t.g_vs;
    sum.g_vh += t.g_vh;
  }
  if (!std::isfinite(lp)) return fail("non-finite log posterior");
  if (!grad) return lp;

  auto& g = *grad;
  for (std::size_t k = 0; k < kDecayingPools; ++k) {
    g[i_kappa_ + k] += sum.g_kappa[k] * dx[i_kappa_ + k];
    g[i_sproc_ + k] += sum.g_sproc[k] * dx[i_sproc_ + k];
  }
  for (std::size_t j = 0; j < treatments_.size(); ++j) g[i_alpha_ + j] += g_alpha[j] * dx[i_alpha_ + j];
  for (std::size_t j = 0; j < 3; ++j) g[i_smeas_ + j] += sum.g_smeas[j] * dx[i_smeas_ + j];

  const auto& pr = mp.routing;
  const double c = 1.0 / (1.0 + rt.r_co2_solid);
  const double g_pxf = (sum.g_uf - sum.g_uh) * c;
  const double g_phs = (sum.g_vs - sum.g_vh) * c;
  const double g_c = sum.g_uf * pr.p_xf + sum.g_uh * (1.0 - pr.p_xf) + sum.g_vs * pr.p_hs + sum.g_vh * (1.0 - pr.p_hs);
  const double g_pclay = -c * c * g_c * 1.67 * 1.6 * -7.86 * std::exp(-7.86 * pr.p_clay);
  const double g_r = sum.g_pd / ((1.0 + pr.r_dpm_rpm) * (1.0 + pr.r_dpm_rpm));
  g[i_pxf_] += g_pxf * dx[i_pxf_];
  g[i_phs_] += g_phs * dx[i_phs_];
  g[i_pclay_] += g_pclay * dx[i_pclay_];
  g[i_rdpm_] += g_r * dx[i_rdpm_];
  double weighted = 0.0;
  for (std::size_t k = 0; k < kDecayingPools; ++k) weighted += sum.g_pm[k] * rt.p_m[k];
  for (std::size_t k = 0; k < kDecayingPools; ++k) g[i_pi_ + k] += (sum.g_pm[k] - weighted) / pi_sum * dx[i_pi_ + k];
  return lp;
}

}  // namespace soc
