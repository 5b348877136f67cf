#include "soc/model.hpp"

#include <cmath>
#include <numeric>
#include <string>

namespace soc {

namespace {

bool finite_nonneg(double x) { return std::isfinite(x) && x >= 0.0; }

void require(bool ok, const std::string& what) {
  if (!ok) throw ValidationError(what);
}

}  // namespace

bool PoolState::valid() const {
  for (double x : as_array()) {
    if (!finite_nonneg(x)) return false;
  }
  return std::isfinite(total());
}

void PrimaryRouting::validate() const {
  auto unit = [](double x) { return std::isfinite(x) && x >= 0.0 && x <= 1.0; };
  require(unit(p_xf), "p_xf must lie in [0,1]");
  require(unit(p_hs), "p_hs must lie in [0,1]");
  require(unit(p_clay), "p_clay must lie in [0,1]");
  require(finite_nonneg(r_dpm_rpm), "r_dpm_rpm must be finite and >= 0");
  double sum = 0.0;
  for (double w : pi_m) {
    require(finite_nonneg(w), "manure routing weights must be finite and >= 0");
    sum += w;
  }
  require(sum > 0.0, "manure routing weights are all zero; normalization undefined");
}

double co2_solid_ratio(double p_clay) { return 1.67 * (1.85 + 1.6 * std::exp(-7.86 * p_clay)); }

DerivedRouting derive_routing(const PrimaryRouting& primary) {
  primary.validate();
  DerivedRouting out;
  out.p_pd = primary.r_dpm_rpm / (1.0 + primary.r_dpm_rpm);
  out.r_co2_solid = co2_solid_ratio(primary.p_clay);
  const double retained = 1.0 / (1.0 + out.r_co2_solid);
  out.p_uf = primary.p_xf * retained;
  out.p_us = 0.0;
  out.p_uh = (1.0 - primary.p_xf) * retained;
  out.p_vf = 0.0;
  out.p_vs = primary.p_hs * retained;
  out.p_vh = (1.0 - primary.p_hs) * retained;
  const double total = std::accumulate(primary.pi_m.begin(), primary.pi_m.end(), 0.0);
  for (std::size_t k = 0; k < kDecayingPools; ++k) out.p_m[k] = primary.pi_m[k] / total;
  return out;
}

double DecayRates::effective(std::size_t pool, std::string_view treatment) const {
  auto it = alpha.find(treatment);
  if (it == alpha.end()) throw ValidationError("no decay modifier for treatment '" + std::string(treatment) + "'");
  return kappa.at(pool) * it->second;
}

std::array<double, kDecayingPools> DecayRates::effective(std::string_view treatment) const {
  std::array<double, kDecayingPools> out{};
  for (std::size_t k = 0; k < kDecayingPools; ++k) out[k] = effective(k, treatment);
  return out;
}

void DecayRates::validate() const {
  for (double k : kappa) require(std::isfinite(k) && k > 0.0, "decay rates must be finite and > 0");
  for (const auto& [label, a] : alpha) {
    require(std::isfinite(a) && a > 0.0, "treatment modifier for '" + label + "' must be finite and > 0");
  }
}

void Forcing::validate() const {
  require(finite_nonneg(p), "plant input must be finite and >= 0");
  require(finite_nonneg(m), "manure input must be finite and >= 0");
  require(finite_nonneg(rate_mod), "rate modifier must be finite and >= 0");
  require(std::isfinite(dt) && dt > 0.0, "step length must be finite and > 0");
}

void NoiseParams::validate() const {
  for (double s : sigma2_process) require(std::isfinite(s) && s > 0.0, "process variances must be finite and > 0");
  for (double s : sigma2_meas) require(std::isfinite(s) && s > 0.0, "measurement variances must be finite and > 0");
}

std::array<double, kDecayingPools> retention(const std::array<double, kDecayingPools>& effective_rates,
                                             const Forcing& forcing) {
  std::array<double, kDecayingPools> e{};
  for (std::size_t k = 0; k < kDecayingPools; ++k) {
    e[k] = std::exp(-forcing.rate_mod * (effective_rates[k] / 12.0) * forcing.dt);
  }
  return e;
}

DecayedMass decayed_masses(const PoolState& state, const DecayRates& rates, std::string_view treatment,
                           const Forcing& forcing) {
  const auto e = retention(rates.effective(treatment), forcing);
  DecayedMass out;
  out.u = state.d * (1.0 - e[0]) + state.r * (1.0 - e[1]) + state.f * (1.0 - e[2]) + state.s * (1.0 - e[3]);
  out.v = state.h * (1.0 - e[4]);
  return out;
}

StepResult step_mean(const PoolState& y, const std::array<double, kDecayingPools>& effective_rates,
                     const DerivedRouting& rt, const Forcing& fc) {
  const auto e = retention(effective_rates, fc);
  const double u = y.d * (1.0 - e[0]) + y.r * (1.0 - e[1]) + y.f * (1.0 - e[2]) + y.s * (1.0 - e[3]);
  const double v = y.h * (1.0 - e[4]);

  StepResult out;
  PoolState& n = out.next;
  n.d = y.d * e[0] + rt.p_pd * fc.p + rt.p_m[0] * fc.m;
  n.r = y.r * e[1] + (1.0 - rt.p_pd) * fc.p + rt.p_m[1] * fc.m;
  n.f = y.f * e[2] + rt.p_uf * u + rt.p_vf * v + rt.p_m[2] * fc.m;
  n.s = y.s * e[3] + rt.p_us * u + rt.p_vs * v + rt.p_m[3] * fc.m;
  n.h = y.h * e[4] + rt.p_uh * u + rt.p_vh * v + rt.p_m[4] * fc.m;
  n.i = y.i;
  out.co2 = (u + v) * rt.co2_share();
  return out;
}

StepResult step_deterministic(const PoolState& state, const DecayRates& rates, const DerivedRouting& routing,
                              std::string_view treatment, const Forcing& forcing) {
  require(state.valid(), "pool state must be finite and >= 0");
  forcing.validate();
  return step_mean(state, rates.effective(treatment), routing, forcing);
}

PoolState step_stochastic(const PoolState& state, const DecayRates& rates, const DerivedRouting& routing,
                          const NoiseParams& noise, std::string_view treatment, const Forcing& forcing,
                          std::span<const double, kDecayingPools> eta) {
  const PoolState mean = step_deterministic(state, rates, routing, treatment, forcing).next;
  auto m = mean.as_array();
  std::array<double, kPools> out = m;
  for (std::size_t k = 0; k < kDecayingPools; ++k) {
    const double s2 = noise.sigma2_process[k];
    if (!(s2 >= 0.0) || !std::isfinite(s2)) throw ValidationError("process variance must be finite and >= 0");
    if (s2 == 0.0) continue;
    if (!(m[k] > 0.0)) {
      throw NumericError("degenerate state: deterministic mean of pool " + std::string(kPoolNames[k]) +
                         " is zero under nonzero process noise");
    }
    out[k] = std::exp(std::log(m[k]) - 0.5 * s2 + std::sqrt(s2) * eta[k]);
  }
  return PoolState::from_array(out);
}

Eigen::Matrix<double, 6, 1> Propagator::apply(const PoolState& state) const {
  const auto a = state.as_array();
  return m * Eigen::Map<const Eigen::Matrix<double, 6, 1>>(a.data()) + g;
}

Propagator build_propagator(const DecayRates& rates, const DerivedRouting& rt, std::string_view treatment,
                            const Forcing& fc) {
  const auto e = retention(rates.effective(treatment), fc);
  std::array<double, kDecayingPools> dec{};
  for (std::size_t k = 0; k < kDecayingPools; ++k) dec[k] = 1.0 - e[k];

  Propagator out;
  out.m.setZero();
  out.g.setZero();
  out.m(0, 0) = e[0];
  out.m(1, 1) = e[1];
  // F, S and H receive the retained share of decay from D, R, F, S (U) and from H (V).
  const std::array<double, 3> from_u = {rt.p_uf, rt.p_us, rt.p_uh};
  const std::array<double, 3> from_v = {rt.p_vf, rt.p_vs, rt.p_vh};
  for (int row = 2; row <= 4; ++row) {
    for (int col = 0; col <= 3; ++col) out.m(row, col) = from_u[row - 2] * dec[col];
    out.m(row, 4) = from_v[row - 2] * dec[4];
    out.m(row, row) += e[row];
  }
  out.m(5, 5) = 1.0;

  out.g(0) = rt.p_pd * fc.p + rt.p_m[0] * fc.m;
  out.g(1) = (1.0 - rt.p_pd) * fc.p + rt.p_m[1] * fc.m;
  out.g(2) = rt.p_m[2] * fc.m;
  out.g(3) = rt.p_m[3] * fc.m;
  out.g(4) = rt.p_m[4] * fc.m;
  return out;
}

Measure parse_measure(std::string_view name) {
  for (std::size_t k = 0; k < kMeasureNames.size(); ++k) {
    if (name == kMeasureNames[k]) return static_cast<Measure>(k);
  }
  throw ValidationError("unknown measurement type '" + std::string(name) + "' (expected TOC, POC or ROC)");
}

double Fractions::operator[](Measure m) const {
  switch (m) {
    case Measure::TOC: return toc;
    case Measure::POC: return poc;
    case Measure::ROC: return roc;
  }
  return 0.0;
}

Fractions observe_map(const PoolState& y) { return {y.total(), y.d + y.r + y.f, y.i}; }

Eigen::Matrix<double, 3, 6> observation_matrix() {
  Eigen::Matrix<double, 3, 6> h;
  h << 1, 1, 1, 1, 1, 1,  //
      1, 1, 1, 0, 0, 0,   //
      0, 0, 0, 0, 0, 1;
  return h;
}

double flux_plot(const PoolState& initial, const PoolState& final_state, int t_months) {
  if (t_months <= 0) throw ValidationError("flux horizon must be a positive number of months");
  const auto a = initial.as_array();
  const auto b = final_state.as_array();
  double change = 0.0;
  for (std::size_t k = 0; k < kPools; ++k) change += a[k] - b[k];
  return change * 12.0 / t_months;
}

double flux_treatment(std::span<const PlotFlux> fluxes) {
  if (fluxes.empty()) throw ValidationError("treatment flux needs at least one plot");
  double weighted = 0.0;
  double area = 0.0;
  for (const auto& pf : fluxes) {
    if (!(pf.area > 0.0)) throw ValidationError("plot areas must be > 0");
    weighted += pf.area * pf.flux;
    area += pf.area;
  }
  if (!(area > 0.0)) throw ValidationError("total plot area is zero");
  return weighted / area;
}

}  // namespace soc
