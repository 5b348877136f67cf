#include <doctest.h>

#include <cmath>
#include <random>

#include "../fixtures.hpp"
#include "soc/diagnostics.hpp"
#include "soc/error.hpp"

using namespace soc;

namespace {

ChainDraws chain_of(int id, std::vector<std::string> names, const std::vector<std::vector<double>>& rows) {
  ChainDraws c;
  c.chain = id;
  c.names = std::move(names);
  c.draws.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(c.names.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t k = 0; k < rows[r].size(); ++k) c.draws(r, k) = rows[r][k];
  }
  return c;
}

}  // namespace

TEST_SUITE("diagnostics") {
  TEST_CASE("R-hat hand example") {
    // Chain means 2 and 4, within variances 1 and 1, n = 3.
    const std::vector<std::vector<double>> ch = {{1, 2, 3}, {3, 4, 5}};
    const double w = 1.0, b = 3.0 * 2.0;
    const double expect = std::sqrt((2.0 / 3.0 * w + b / 3.0) / w);
    CHECK(rhat(ch) == doctest::Approx(expect).epsilon(1e-15));
  }

  TEST_CASE("identical chains") {
    std::vector<double> x;
    std::mt19937_64 rng(1);
    std::normal_distribution<double> n(0, 1);
    for (int k = 0; k < 100; ++k) x.push_back(n(rng));
    CHECK(rhat({x, x, x}) == doctest::Approx(std::sqrt(0.99)).epsilon(1e-15));
  }

  TEST_CASE("R-hat errors") {
    CHECK_THROWS_AS(rhat({{1, 2, 3}}), ValidationError);
    CHECK_THROWS_AS(rhat({{1}, {2}}), ValidationError);
    CHECK_THROWS_AS(rhat({{1, 2}, {1, 2, 3}}), ValidationError);
    CHECK_THROWS_AS(rhat({{1, 1}, {1, 1}}), NumericError);
  }

  TEST_CASE("quantiles use linear interpolation") {
    const std::vector<double> s = {1, 2, 3, 4};
    CHECK(quantile_sorted(s, 0.0) == 1.0);
    CHECK(quantile_sorted(s, 1.0) == 4.0);
    CHECK(quantile_sorted(s, 0.5) == 2.5);
    CHECK(quantile_sorted(s, 0.25) == doctest::Approx(1.75));
  }

  TEST_CASE("summaries") {
    std::vector<double> d;
    for (int k = 1; k <= 101; ++k) d.push_back(k - 21);
    const auto s = summarize("z", d, true);
    CHECK(s.mean == doctest::Approx(30.0));
    CHECK(s.median == 30.0);
    CHECK(s.q05 == doctest::Approx(-15.0));
    CHECK(s.q95 == doctest::Approx(75.0));
    CHECK(*s.prob_negative == doctest::Approx(20.0 / 101.0));
    CHECK(!s.rhat);
    CHECK(!summarize("z", d).prob_negative);
  }

  TEST_CASE("column and summarize_all") {
    const auto a = chain_of(0, {"a", "b"}, {{1, 10}, {2, 11}, {3, 12}});
    const auto b = chain_of(1, {"a", "b"}, {{2, 13}, {3, 14}, {4, 15}});
    const std::vector<ChainDraws> chains = {a, b};
    const auto col = column(chains, "b");
    CHECK(col == std::vector<std::vector<double>>{{10, 11, 12}, {13, 14, 15}});
    CHECK_THROWS_AS(column(chains, "c"), ValidationError);
    const auto rows = summarize_all(chains);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].name == "a");
    CHECK(rows[0].rhat.has_value());
    CHECK(*rows[0].rhat == doctest::Approx(rhat(column(chains, "a"))));
  }

  TEST_CASE("flux draws follow the plot and treatment estimators") {
    PlotData p1 = testing::make_plot("a", "T", 1.0);
    PlotData p2 = testing::make_plot("b", "T", 3.0);
    p1.forcing.assign(12, Forcing{});
    p2.forcing.assign(12, Forcing{});
    std::vector<std::string> names;
    for (const auto* id : {"a", "b"}) {
      for (auto pool : kPoolNames) names.push_back(std::string(pool) + "[" + id + ",0]");
      for (int k = 0; k < 5; ++k) names.push_back(std::string(kPoolNames[k]) + "[" + id + ",12]");
    }
    // Plot a loses 2 per year, plot b gains 1.
    const std::vector<double> row = {0, 10, 0, 0, 20, 5, 0, 9, 0, 0, 19, 0, 5, 0, 0, 15, 5, 0, 5, 0, 0, 16};
    const std::vector<ChainDraws> chains = {chain_of(0, names, {row, row}), chain_of(1, names, {row, row})};
    const auto fd = flux_draws(chains, {p1, p2});
    CHECK(fd.at("flux_plot[a]")[0][0] == doctest::Approx(2.0));
    CHECK(fd.at("flux_plot[b]")[1][1] == doctest::Approx(-1.0));
    CHECK(fd.at("flux[T]")[0][0] == doctest::Approx((2.0 - 3.0) / 4.0));
    const auto rows = flux_posterior(chains, {p1, p2});
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].name == "flux[T]");
    CHECK(rows[0].prob_negative.has_value());
  }

  TEST_CASE("trend surface recovers a planar field") {
    std::vector<SpatialSample> s;
    std::mt19937_64 rng(3);
    std::normal_distribution<double> noise(0.0, 0.05);
    double rss = 0.0;
    for (int i = 0; i < 6; ++i) {
      for (int j = 0; j < 7; ++j) {
        const double x = 10.0 * i, y = 8.0 * j;
        s.push_back({x, y, std::exp(3.0 + 0.01 * x - 0.02 * y + 0.0005 * x * y + noise(rng))});
      }
    }
    const auto ts = trend_surface_diagnostic(s);
    CHECK(ts.coef[0] == doctest::Approx(3.0).epsilon(0.03));
    CHECK(ts.coef[1] == doctest::Approx(0.01).epsilon(0.3));
    CHECK(ts.coef[2] == doctest::Approx(-0.02).epsilon(0.3));
    for (Eigen::Index k = 0; k < ts.residuals.size(); ++k) rss += ts.residuals[k] * ts.residuals[k];
    CHECK(ts.sigma2 == doctest::Approx(rss / (s.size() - 4)));
    CHECK(ts.sigma2 == doctest::Approx(0.0025).epsilon(0.5));
    CHECK(ts.pairs.size() == s.size() * (s.size() - 1) / 2);
    const auto& p = ts.pairs[0];
    const double diff = ts.residuals[static_cast<Eigen::Index>(p.i)] - ts.residuals[static_cast<Eigen::Index>(p.j)];
    CHECK(p.sq_diff == doctest::Approx(diff * diff));
    CHECK(p.rootabs_diff == doctest::Approx(std::sqrt(std::abs(diff))));
    CHECK(p.d == doctest::Approx(std::hypot(s[p.i].x - s[p.j].x, s[p.i].y - s[p.j].y)));
  }

  TEST_CASE("trend surface errors") {
    std::vector<SpatialSample> few = {{0, 0, 1}, {1, 0, 1}, {0, 1, 1}, {1, 1, 1}};
    CHECK_THROWS_AS(trend_surface_diagnostic(few), ValidationError);
    std::vector<SpatialSample> line = {{0, 0, 1}, {1, 0, 2}, {2, 0, 3}, {3, 0, 4}, {4, 0, 5}};
    CHECK_THROWS_AS(trend_surface_diagnostic(line), NumericError);
    std::vector<SpatialSample> neg = {{0, 0, 1}, {1, 0, 2}, {2, 1, -3}, {3, 5, 4}, {4, 2, 5}};
    CHECK_THROWS_AS(trend_surface_diagnostic(neg), ValidationError);
  }
}
