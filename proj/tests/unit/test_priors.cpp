#include <doctest.h>

#include <cmath>

#include "soc/error.hpp"
#include "soc/priors.hpp"

using namespace soc;

namespace {

TruncNormal tn_of(const PriorTable& t, std::string_view name) { return std::get<TruncNormal>(t.at(name).dist); }
InverseGamma ig_of(const PriorTable& t, std::string_view name) { return std::get<InverseGamma>(t.at(name).dist); }

double mc_tail(const InverseGamma& ig, double mult, bool lower, int n, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  long hits = 0;
  const double cut = std::log(mult);
  for (int k = 0; k < n; ++k) {
    const double s2 = sample(Distribution{ig}, rng);
    const double eta = -s2 / 2 + std::sqrt(s2) * normal(rng);
    hits += lower ? eta < cut : eta > cut;
  }
  return static_cast<double>(hits) / n;
}

}  // namespace

TEST_SUITE("priors") {
  TEST_CASE("default table entries") {
    const std::vector<std::string> taus = {"CT", "ZT"};
    const auto t = default_priors(3, taus);
    CHECK(tn_of(t, "kappa_D") == TruncNormal{10.0, 0.5, 5.0, 20.0});
    CHECK(tn_of(t, "kappa_R") == TruncNormal{0.07, 0.0035, 0.05, 5.0});
    CHECK(tn_of(t, "kappa_H") == TruncNormal{0.02, 0.001, 0.005, 0.05});
    CHECK(tn_of(t, "p_clay") == TruncNormal{0.16, 0.02, 0.0, 1.0});
    CHECK(tn_of(t, "alpha[ZT]") == TruncNormal{0.0, 1.0, -5.0, 5.0});
    CHECK(t.at("alpha[ZT]").log_scale);
    CHECK(ig_of(t, "sigma2_H") == InverseGamma{403.4, 0.318});
    CHECK(ig_of(t, "sigma2_TOC") == InverseGamma{10.5, 0.053});
    CHECK(ig_of(t, "sigma2_POC") == InverseGamma{10.5, 0.039});
    CHECK(ig_of(t, "sigma2_ROC") == InverseGamma{10.5, 0.290});
    const auto& init = t.initial_for("2");
    CHECK(std::get<TruncNormal>(init[0].dist) == TruncNormal{0.0, 0.1, 0.0, kInf});
    CHECK(std::get<TruncNormal>(init[1].dist) == TruncNormal{0.0, 100.0, 0.0, kInf});
    CHECK(std::get<TruncNormal>(init[2].dist) == TruncNormal{0.0, 0.01, 0.0, kInf});
    CHECK(std::get<TruncNormal>(init[4].dist) == TruncNormal{0.0, 100.0, 0.0, kInf});
    CHECK(std::get<TruncNormal>(init[5].dist) == TruncNormal{0.0, 10.0, 0.0, kInf});
    CHECK(t.treatments() == taus);
    CHECK_THROWS_AS(t.at("kappa_Q"), ValidationError);
    CHECK_THROWS_AS(t.initial_for("9"), ValidationError);
  }

  TEST_CASE("initial-condition count scales with plots") {
    const std::vector<std::string> taus = {"CT"};
    const auto t = default_priors(42, taus);
    CHECK(t.initial.size() * kPools == 252);
  }

  TEST_CASE("log-scale priors") {
    const Prior p{TruncNormal{0.0, 1.0, -5.0, 5.0}, true};
    const double a = 2.0;
    const double expect = log_pdf(p.dist, std::log(a));
    CHECK(p.log_density(a) == doctest::Approx(expect));
    Rng rng(1);
    for (int k = 0; k < 100; ++k) {
      const double v = p.draw(rng);
      CHECK(v > std::exp(-5.0));
      CHECK(v < std::exp(5.0));
    }
  }

  TEST_CASE("scenarios") {
    const std::vector<std::string> taus = {"CT"};
    const auto t = default_priors(2, taus);
    CHECK(apply_scenario(t, Scenario::N) == t);
    const auto a = apply_scenario(t, Scenario::A);
    CHECK(tn_of(a, "kappa_D") == TruncNormal{10.0, 1.0, 5.0, 20.0});
    CHECK(tn_of(a, "kappa_F").sigma == doctest::Approx(0.066));
    CHECK(a.at("sigma2_D") == t.at("sigma2_D"));
    const auto b = apply_scenario(t, Scenario::B);
    for (auto n : names::kSigma2Process) CHECK(ig_of(b, n) == InverseGamma{102.4, 0.08});
    CHECK(b.at("sigma2_TOC") == t.at("sigma2_TOC"));
    CHECK(b.at("kappa_D") == t.at("kappa_D"));
    CHECK(parse_scenario("B") == Scenario::B);
    CHECK(to_string(Scenario::A) == "A");
    CHECK_THROWS_AS(parse_scenario("C"), ValidationError);
  }

  TEST_CASE("quadrature tails agree with nested Monte Carlo") {
    Rng rng(21);
    const InverseGamma ig{3.0, 0.05};
    const auto q = multiplier_tails(ig, 0.8, 1.25);
    const int n = 400000;
    const double lo = mc_tail(ig, 0.8, true, n, rng);
    const double hi = mc_tail(ig, 1.25, false, n, rng);
    CHECK(lo == doctest::Approx(q.lower).epsilon(0.05));
    CHECK(hi == doctest::Approx(q.upper).epsilon(0.05));
  }

  TEST_CASE("band fit passes its own Monte Carlo oracle") {
    Rng rng(22);
    for (auto [lo, hi] : {std::pair{0.5, 2.0}, std::pair{0.9, 1.1}}) {
      const auto fit = fit_ig_to_multiplier_band(lo, hi, 0.01);
      INFO("IG(", fit.ig.shape, ", ", fit.ig.scale, ")");
      const double pl = mc_tail(fit.ig, lo, true, 1000000, rng);
      const double pu = mc_tail(fit.ig, hi, false, 1000000, rng);
      CHECK(pl >= 0.005);
      CHECK(pl <= 0.02);
      CHECK(pu >= 0.005);
      CHECK(pu <= 0.02);
    }
  }

  TEST_CASE("band fit argument checks") {
    CHECK_THROWS_AS(fit_ig_to_multiplier_band(1.1, 0.9, 0.01), ValidationError);
    CHECK_THROWS_AS(fit_ig_to_multiplier_band(0.9, 1.1, 0.6), ValidationError);
  }
}
