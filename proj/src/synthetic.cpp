#include "soc/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "soc/error.hpp"

namespace soc {

namespace {

std::vector<std::string> sorted_treatments(const std::vector<PlotData>& plots) {
  std::set<std::string> s;
  for (const auto& p : plots) s.insert(p.treatment);
  return {s.begin(), s.end()};
}

double number(const Json& j, const std::string& key, std::string_view context) {
  if (!j.contains(key) || !j[key].is_number())
    throw ValidationError(std::string(context) + ": missing numeric '" + key + "'");
  return j[key].get<double>();
}

ModelParams draw_params(const PriorTable& priors, const std::vector<std::string>& treatments, Rng& rng) {
  ModelParams mp;
  for (std::size_t k = 0; k < kDecayingPools; ++k) mp.rates.kappa[k] = priors.at(names::kKappa[k]).draw(rng);
  for (const auto& tau : treatments) mp.rates.alpha[tau] = priors.at(names::alpha(tau)).draw(rng);
  for (std::size_t k = 0; k < kDecayingPools; ++k) mp.routing.pi_m[k] = priors.at(names::kPiM[k]).draw(rng);
  mp.routing.p_xf = priors.at(names::kPxf).draw(rng);
  mp.routing.p_hs = priors.at(names::kPhs).draw(rng);
  mp.routing.p_clay = priors.at(names::kPclay).draw(rng);
  mp.routing.r_dpm_rpm = priors.at(names::kRdpm).draw(rng);
  for (std::size_t k = 0; k < kDecayingPools; ++k)
    mp.noise.sigma2_process[k] = priors.at(names::kSigma2Process[k]).draw(rng);
  for (std::size_t j = 0; j < 3; ++j) mp.noise.sigma2_meas[j] = priors.at(names::kSigma2Meas[j]).draw(rng);
  return mp;
}

}  // namespace

void SyntheticSpec::validate() const {
  if (months < 1) throw ValidationError("synthetic: months must be >= 1");
  for (int t : obs_months) {
    if (t < 0 || t > months) throw ValidationError("synthetic: observation month " + std::to_string(t) + " outside 0.." + std::to_string(months));
  }
  if (!(plant_input >= 0.0) || !(std::abs(plant_amplitude) <= 1.0))
    throw ValidationError("synthetic: plant input must be >= 0 with |amplitude| <= 1");
  if (!(rate_mod >= 0.0) || !(std::abs(rate_amplitude) <= 1.0))
    throw ValidationError("synthetic: rate modifier must be >= 0 with |amplitude| <= 1");
  for (const auto& [tau, m] : manure) {
    if (!(m >= 0.0) || !std::isfinite(m)) throw ValidationError("synthetic: manure input for '" + tau + "' must be >= 0");
  }
  if (max_retries < 1) throw ValidationError("synthetic: max_retries must be >= 1");
  if (fixed_initial && !fixed_initial->valid()) throw ValidationError("synthetic: fixed initial state must be >= 0");
}

SyntheticSpec synthetic_spec_from_json(const Json& j) {
  SyntheticSpec s;
  if (j.is_null()) return s;
  if (!j.is_object()) throw ValidationError("config 'synthetic' must be an object");
  for (const auto& [k, v] : j.items()) {
    static const std::set<std::string> allowed = {"months",     "obs_months",    "types",    "plant_input",
                                                  "plant_amplitude", "rate_mod", "rate_amplitude", "manure",
                                                  "parameters", "initial",       "max_retries"};
    if (!allowed.contains(k)) throw ValidationError("config 'synthetic': unknown key '" + k + "'");
  }
  const std::string_view ctx = "config 'synthetic'";
  if (j.contains("months")) {
    if (!j["months"].is_number_integer()) throw ValidationError("config 'synthetic': 'months' must be an integer");
    s.months = j["months"].get<int>();
  }
  if (j.contains("obs_months")) {
    s.obs_months.clear();
    for (const auto& t : j["obs_months"]) {
      if (!t.is_number_integer()) throw ValidationError("config 'synthetic': 'obs_months' must hold integers");
      s.obs_months.push_back(t.get<int>());
    }
  }
  if (j.contains("types")) {
    s.types.clear();
    for (const auto& t : j["types"]) {
      if (!t.is_string()) throw ValidationError("config 'synthetic': 'types' must hold strings");
      s.types.push_back(parse_measure(t.get<std::string>()));
    }
  }
  if (j.contains("plant_input")) s.plant_input = number(j, "plant_input", ctx);
  if (j.contains("plant_amplitude")) s.plant_amplitude = number(j, "plant_amplitude", ctx);
  if (j.contains("rate_mod")) s.rate_mod = number(j, "rate_mod", ctx);
  if (j.contains("rate_amplitude")) s.rate_amplitude = number(j, "rate_amplitude", ctx);
  if (j.contains("manure")) {
    if (!j["manure"].is_object()) throw ValidationError("config 'synthetic': 'manure' must map treatment to input");
    for (const auto& [tau, v] : j["manure"].items()) {
      if (!v.is_number()) throw ValidationError("config 'synthetic': manure input for '" + tau + "' must be a number");
      s.manure[tau] = v.get<double>();
    }
  }
  if (j.contains("parameters")) s.fixed_params = params_from_json(j["parameters"]);
  if (j.contains("initial")) {
    const Json& init = j["initial"];
    std::array<double, kPools> a{};
    for (std::size_t k = 0; k < kPools; ++k) a[k] = number(init, std::string(kPoolNames[k]), "config 'synthetic.initial'");
    s.fixed_initial = PoolState::from_array(a);
  }
  if (j.contains("max_retries")) {
    if (!j["max_retries"].is_number_integer()) throw ValidationError("config 'synthetic': 'max_retries' must be an integer");
    s.max_retries = j["max_retries"].get<int>();
  }
  s.validate();
  return s;
}

Json synthetic_spec_to_json(const SyntheticSpec& s) {
  Json j;
  j["months"] = s.months;
  j["obs_months"] = s.obs_months;
  Json types = Json::array();
  for (auto t : s.types) types.push_back(std::string(kMeasureNames[static_cast<std::size_t>(t)]));
  j["types"] = types;
  j["plant_input"] = s.plant_input;
  j["plant_amplitude"] = s.plant_amplitude;
  j["rate_mod"] = s.rate_mod;
  j["rate_amplitude"] = s.rate_amplitude;
  if (!s.manure.empty()) j["manure"] = s.manure;
  if (s.fixed_params) j["parameters"] = params_to_json(*s.fixed_params);
  if (s.fixed_initial) {
    Json init;
    const auto a = s.fixed_initial->as_array();
    for (std::size_t k = 0; k < kPools; ++k) init[std::string(kPoolNames[k])] = a[k];
    j["initial"] = init;
  }
  j["max_retries"] = s.max_retries;
  return j;
}

std::vector<Forcing> seasonal_forcing(const SyntheticSpec& spec, const std::string& treatment) {
  std::vector<Forcing> out;
  const auto it = spec.manure.find(treatment);
  const double m = it == spec.manure.end() ? 0.0 : it->second;
  for (int t = 0; t < spec.months; ++t) {
    const double phase = 2.0 * std::numbers::pi * t / 12.0;
    Forcing f;
    f.p = spec.plant_input * (1.0 + spec.plant_amplitude * std::sin(phase));
    f.m = m;
    f.rate_mod = spec.rate_mod * (1.0 + spec.rate_amplitude * std::cos(phase));
    f.dt = 1.0;
    out.push_back(f);
  }
  return out;
}

SyntheticData generate_synthetic(std::vector<PlotData> plots, const PriorTable& priors, const SyntheticSpec& spec,
                                 std::uint64_t seed) {
  spec.validate();
  if (plots.empty()) throw ValidationError("synthetic experiment needs at least one plot");
  std::sort(plots.begin(), plots.end(), [](const PlotData& a, const PlotData& b) { return a.id < b.id; });
  const auto treatments = sorted_treatments(plots);
  for (auto& p : plots) {
    p.forcing = seasonal_forcing(spec, p.treatment);
    p.observations.clear();
  }

  std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu), static_cast<std::uint32_t>(seed >> 32)};
  Rng rng(seq);
  std::normal_distribution<double> normal(0.0, 1.0);

  std::string last_failure;
  for (int attempt = 0; attempt < spec.max_retries; ++attempt) {
    SyntheticData out;
    out.truth.seed = seed;
    out.truth.params = spec.fixed_params ? *spec.fixed_params : draw_params(priors, treatments, rng);
    const ModelParams& mp = out.truth.params;
    const DerivedRouting rt = derive_routing(mp.routing);
    bool ok = true;
    for (const auto& p : plots) {
      PoolState init;
      if (spec.fixed_initial) {
        init = *spec.fixed_initial;
      } else {
        const auto& ip = priors.initial_for(p.id);
        std::array<double, kPools> a{};
        for (std::size_t k = 0; k < kPools; ++k) a[k] = ip[k].draw(rng);
        init = PoolState::from_array(a);
      }
      Trajectory traj{init};
      try {
        for (const auto& fc : p.forcing) {
          std::array<double, kDecayingPools> eta{};
          for (auto& e : eta) e = normal(rng);
          traj.push_back(step_stochastic(traj.back(), mp.rates, rt, mp.noise, p.treatment, fc, eta));
          const auto a = traj.back().as_array();
          for (std::size_t k = 0; k < kDecayingPools; ++k) {
            if (!(a[k] > 0.0) || !std::isfinite(a[k])) throw NumericError("pool " + std::string(kPoolNames[k]) + " left (0, inf)");
          }
        }
      } catch (const NumericError& e) {
        last_failure = "plot '" + p.id + "': " + e.what();
        ok = false;
        break;
      }
      out.truth.plot_ids.push_back(p.id);
      out.truth.trajectories.push_back(std::move(traj));
    }
    if (!ok) continue;

    out.plots = plots;
    for (std::size_t p = 0; p < plots.size() && ok; ++p) {
      for (int t : spec.obs_months) {
        const Fractions f = observe_map(out.truth.trajectories[p][t]);
        for (Measure type : spec.types) {
          const double s = mp.noise.sigma2_meas[static_cast<std::size_t>(type)];
          const double eps = normal(rng);
          const double z = f[type] * std::exp(-0.5 * s + std::sqrt(s) * eps);
          if (!(z > 0.0) || !std::isfinite(z)) {
            last_failure = "plot '" + plots[p].id + "': nonpositive " +
                           std::string(kMeasureNames[static_cast<std::size_t>(type)]) + " at month " + std::to_string(t);
            ok = false;
            break;
          }
          out.plots[p].observations.push_back({t, type, z});
        }
        if (!ok) break;
      }
    }
    if (ok) return out;
  }
  throw NumericError("synthetic trajectory stayed degenerate after " + std::to_string(spec.max_retries) +
                     " attempts (last: " + last_failure + ")");
}

Json params_to_json(const ModelParams& mp) {
  Json j;
  for (std::size_t k = 0; k < kDecayingPools; ++k) j[std::string(names::kKappa[k])] = mp.rates.kappa[k];
  for (const auto& [tau, a] : mp.rates.alpha) j[names::alpha(tau)] = a;
  for (std::size_t k = 0; k < kDecayingPools; ++k) j[std::string(names::kPiM[k])] = mp.routing.pi_m[k];
  j[std::string(names::kPxf)] = mp.routing.p_xf;
  j[std::string(names::kPhs)] = mp.routing.p_hs;
  j[std::string(names::kPclay)] = mp.routing.p_clay;
  j[std::string(names::kRdpm)] = mp.routing.r_dpm_rpm;
  for (std::size_t k = 0; k < kDecayingPools; ++k)
    j[std::string(names::kSigma2Process[k])] = mp.noise.sigma2_process[k];
  for (std::size_t k = 0; k < 3; ++k) j[std::string(names::kSigma2Meas[k])] = mp.noise.sigma2_meas[k];
  return j;
}

ModelParams params_from_json(const Json& j) {
  if (!j.is_object()) throw ValidationError("parameters must be an object");
  const std::string_view ctx = "parameters";
  ModelParams mp;
  for (std::size_t k = 0; k < kDecayingPools; ++k) {
    mp.rates.kappa[k] = number(j, std::string(names::kKappa[k]), ctx);
    mp.routing.pi_m[k] = number(j, std::string(names::kPiM[k]), ctx);
    mp.noise.sigma2_process[k] = number(j, std::string(names::kSigma2Process[k]), ctx);
  }
  for (const auto& [key, v] : j.items()) {
    if (key.starts_with("alpha[") && key.ends_with("]")) {
      if (!v.is_number()) throw ValidationError("parameters: '" + key + "' must be a number");
      mp.rates.alpha[key.substr(6, key.size() - 7)] = v.get<double>();
    }
  }
  mp.routing.p_xf = number(j, std::string(names::kPxf), ctx);
  mp.routing.p_hs = number(j, std::string(names::kPhs), ctx);
  mp.routing.p_clay = number(j, std::string(names::kPclay), ctx);
  mp.routing.r_dpm_rpm = number(j, std::string(names::kRdpm), ctx);
  for (std::size_t k = 0; k < 3; ++k) mp.noise.sigma2_meas[k] = number(j, std::string(names::kSigma2Meas[k]), ctx);
  mp.rates.validate();
  mp.routing.validate();
  for (double s : mp.noise.sigma2_process)
    if (!(s >= 0.0)) throw ValidationError("parameters: process variances must be >= 0");
  for (double s : mp.noise.sigma2_meas)
    if (!(s >= 0.0)) throw ValidationError("parameters: measurement variances must be >= 0");
  return mp;
}

Json truth_to_json(const SyntheticTruth& truth) {
  Json plots = Json::object();
  for (std::size_t p = 0; p < truth.plot_ids.size(); ++p) {
    Json pools = Json::object();
    for (std::size_t k = 0; k < kPools; ++k) {
      Json series = Json::array();
      for (const auto& s : truth.trajectories[p]) series.push_back(s.as_array()[k]);
      pools[std::string(kPoolNames[k])] = series;
    }
    plots[truth.plot_ids[p]] = pools;
  }
  return {{"seed", truth.seed}, {"parameters", params_to_json(truth.params)}, {"trajectories", plots}};
}

SyntheticTruth truth_from_json(const Json& j) {
  SyntheticTruth t;
  if (!j.is_object() || !j.contains("parameters") || !j.contains("trajectories"))
    throw ValidationError("truth file needs 'parameters' and 'trajectories'");
  if (j.contains("seed")) t.seed = j["seed"].get<std::uint64_t>();
  t.params = params_from_json(j["parameters"]);
  for (const auto& [id, pools] : j["trajectories"].items()) {
    t.plot_ids.push_back(id);
    const std::size_t n = pools.at("D").size();
    Trajectory traj(n);
    for (std::size_t k = 0; k < kPools; ++k) {
      const Json& series = pools.at(std::string(kPoolNames[k]));
      if (series.size() != n) throw ValidationError("truth: pool series for plot '" + id + "' differ in length");
      for (std::size_t s = 0; s < n; ++s) {
        auto a = traj[s].as_array();
        a[k] = series[s].get<double>();
        traj[s] = PoolState::from_array(a);
      }
    }
    t.trajectories.push_back(std::move(traj));
  }
  return t;
}

}  // namespace soc
