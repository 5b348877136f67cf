#include <doctest.h>

#include <cmath>

#include "../fixtures.hpp"
#include "soc/error.hpp"
#include "soc/pipeline.hpp"

using namespace soc;

namespace {

std::vector<PlotData> three_plots() {
  return {testing::make_plot("C", "PP", 1.0, 0.0, 10.0), testing::make_plot("A", "Mn0"),
          testing::make_plot("B", "Mn0", 1.0, 10.0)};
}

PriorTable priors_for_three() {
  const std::vector<std::string> ids = {"A", "B", "C"}, taus = {"Mn0", "PP"};
  return default_priors(ids, taus);
}

}  // namespace

TEST_SUITE("synthetic") {
  TEST_CASE("seasonal forcing") {
    SyntheticSpec s;
    s.months = 24;
    s.manure["PP"] = 0.1;
    const auto f = seasonal_forcing(s, "PP");
    REQUIRE(f.size() == 24);
    CHECK(f[3].p == doctest::Approx(0.25 * 1.5));
    CHECK(f[0].rate_mod == doctest::Approx(1.3));
    CHECK(f[6].rate_mod == doctest::Approx(0.7));
    CHECK(f[5].m == 0.1);
    CHECK(seasonal_forcing(s, "Mn0")[5].m == 0.0);
  }

  TEST_CASE("generator settings json round trip and validation") {
    SyntheticSpec s;
    s.months = 12;
    s.obs_months = {0, 12};
    s.types = {Measure::TOC};
    s.manure["X"] = 0.2;
    const auto back = synthetic_spec_from_json(synthetic_spec_to_json(s));
    CHECK(back.months == 12);
    CHECK(back.obs_months == s.obs_months);
    CHECK(back.types == s.types);
    CHECK(back.manure == s.manure);
    CHECK_THROWS_AS(synthetic_spec_from_json(Json{{"months", 12}, {"obs_months", {13}}}), ValidationError);
    CHECK_THROWS_AS(synthetic_spec_from_json(Json{{"unknown", 1}}), ValidationError);
    CHECK_THROWS_AS(synthetic_spec_from_json(Json{{"types", {"DOC"}}}), ValidationError);
  }

  TEST_CASE("generation is deterministic and well formed") {
    const auto priors = priors_for_three();
    SyntheticSpec spec;
    const auto a = generate_synthetic(three_plots(), priors, spec, 42);
    const auto b = generate_synthetic(three_plots(), priors, spec, 42);
    const auto c = generate_synthetic(three_plots(), priors, spec, 43);
    REQUIRE(a.plots.size() == 3);
    CHECK(a.plots[0].id == "A");
    CHECK(a.plots == b.plots);
    CHECK(!(a.plots == c.plots));
    CHECK(a.plots[2].x == 0.0);
    CHECK(a.plots[2].y == 10.0);
    for (const auto& p : a.plots) {
      CHECK(p.months() == 24);
      CHECK(p.observations.size() == 15);
      for (const auto& o : p.observations) CHECK(o.value > 0.0);
    }
    CHECK(a.truth.plot_ids == std::vector<std::string>{"A", "B", "C"});
    CHECK(a.truth.trajectories[0].size() == 25);
    PosteriorModel m(a.plots, priors);
    std::vector<Trajectory> trajs = a.truth.trajectories;
    const Eigen::VectorXd x = m.pack(a.truth.params, trajs);
    CHECK(std::isfinite(m.log_posterior(m.unconstrain(x))));
  }

  TEST_CASE("zero noise reproduces the deterministic model") {
    const auto priors = priors_for_three();
    SyntheticSpec spec;
    spec.months = 12;
    spec.obs_months = {0, 12};
    ModelParams mp;
    mp.rates.alpha = {{"Mn0", 1.0}, {"PP", 0.8}};
    mp.noise.sigma2_process.fill(0.0);
    mp.noise.sigma2_meas.fill(0.0);
    spec.fixed_params = mp;
    spec.fixed_initial = PoolState{0.5, 40, 0.2, 0.2, 60, 8};
    const auto data = generate_synthetic(three_plots(), priors, spec, 1);
    for (std::size_t p = 0; p < 3; ++p) {
      const auto& pl = data.plots[p];
      const auto det = simulate_deterministic(*spec.fixed_initial, mp, pl.forcing, pl.treatment);
      for (std::size_t t = 0; t < det.size(); ++t) {
        const auto x = data.truth.trajectories[p][t].as_array(), y = det[t].as_array();
        for (std::size_t k = 0; k < kPools; ++k) CHECK(x[k] == doctest::Approx(y[k]).epsilon(1e-13));
      }
      for (const auto& o : pl.observations) {
        CHECK(o.value == doctest::Approx(observe_map(det[static_cast<std::size_t>(o.month)])[o.type]).epsilon(1e-13));
      }
    }
  }

  TEST_CASE("parameter and truth json round trip") {
    const auto data = generate_synthetic(three_plots(), priors_for_three(), SyntheticSpec{}, 8);
    const Json pj = params_to_json(data.truth.params);
    CHECK(pj.contains("alpha[PP]"));
    CHECK(pj.contains("sigma2_TOC"));
    CHECK(params_to_json(params_from_json(pj)) == pj);
    const auto t = truth_from_json(truth_to_json(data.truth));
    CHECK(t.seed == 8);
    CHECK(t.plot_ids == data.truth.plot_ids);
    CHECK(t.trajectories == data.truth.trajectories);
    CHECK_THROWS_AS(params_from_json(Json{{"kappa_D", 1.0}}), ValidationError);
  }

  TEST_CASE("prior means and trajectory table") {
    const auto priors = priors_for_three();
    const auto mp = prior_mean_params(priors, {"Mn0", "PP"});
    CHECK(mp.rates.kappa[0] == doctest::Approx(10.0).epsilon(1e-6));
    CHECK(mp.rates.alpha.at("PP") == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(mp.noise.sigma2_process[0] == doctest::Approx(0.318 / 402.4));
    const auto init = prior_mean_initial(priors, "A");
    CHECK(init.r == doctest::Approx(100.0 * std::sqrt(2.0 / M_PI)));

    auto plots = three_plots();
    SyntheticSpec spec;
    spec.months = 2;
    for (auto& p : plots) p.forcing = seasonal_forcing(spec, p.treatment);
    std::vector<Trajectory> trajs;
    for (const auto& p : plots) trajs.push_back(simulate_deterministic(init, mp, p.forcing, p.treatment));
    const std::string csv = trajectories_csv(plots, trajs, mp);
    CHECK(csv.starts_with("plot_id,month,D,R,F,S,H,I,CO2,TOC,POC,ROC\n"));
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 3 * 3);
  }

  TEST_CASE("spatial samples use the geometric mean") {
    PlotData p = testing::make_plot("a", "T", 1.0, 1.0, 2.0);
    p.forcing.assign(4, Forcing{});
    p.observations = {{0, Measure::TOC, 2.0}, {2, Measure::TOC, 8.0}, {2, Measure::ROC, 3.0}};
    const auto s = spatial_samples({p}, Measure::TOC);
    REQUIRE(s.size() == 1);
    CHECK(s[0].value == doctest::Approx(4.0));
    CHECK(s[0].x == 1.0);
    CHECK(spatial_samples({p}, Measure::POC).empty());
  }
}
