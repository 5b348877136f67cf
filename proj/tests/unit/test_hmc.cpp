#include <doctest.h>

#include <cmath>

#include "soc/diagnostics.hpp"
#include "soc/error.hpp"
#include "soc/hmc.hpp"
#include "soc/thread_pool.hpp"

using namespace soc;

namespace {

// Independent Gaussian with per-coordinate means and scales.
class Gaussian final : public LogDensity {
 public:
  Gaussian(Eigen::VectorXd mu, Eigen::VectorXd sd) : mu_(std::move(mu)), sd_(std::move(sd)) {}
  std::size_t dim() const override { return static_cast<std::size_t>(mu_.size()); }
  double log_density_gradient(const Eigen::VectorXd& u, Eigen::VectorXd& grad) const override {
    const Eigen::VectorXd z = (u - mu_).cwiseQuotient(sd_);
    grad = -z.cwiseQuotient(sd_);
    return -0.5 * z.squaredNorm();
  }
  Eigen::VectorXd initial_point(Rng& rng) const override {
    std::uniform_real_distribution<double> unif(-2.0, 2.0);
    Eigen::VectorXd u(mu_.size());
    for (auto& v : u) v = unif(rng);
    return u;
  }

 private:
  Eigen::VectorXd mu_, sd_;
};

SamplerConfig quick(int chains, int warmup, int iters, int thin, std::uint64_t seed) {
  SamplerConfig c;
  c.chains = chains;
  c.warmup = warmup;
  c.iters = iters;
  c.thin = thin;
  c.seed = seed;
  return c;
}

}  // namespace

TEST_SUITE("hmc") {
  TEST_CASE("config validation") {
    CHECK_NOTHROW(SamplerConfig{}.validate());
    CHECK_THROWS_AS(quick(0, 10, 10, 1, 1).validate(), ValidationError);
    CHECK_THROWS_AS(quick(1, -1, 10, 1, 1).validate(), ValidationError);
    CHECK_THROWS_AS(quick(1, 10, 0, 1, 1).validate(), ValidationError);
    CHECK_THROWS_AS(quick(1, 10, 10, 0, 1).validate(), ValidationError);
    auto c = quick(1, 10, 10, 1, 1);
    c.target_accept = 1.0;
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c = quick(1, 10, 10, 1, 1);
    c.max_depth = 0;
    CHECK_THROWS_AS(c.validate(), ValidationError);
  }

  TEST_CASE("draw shape and thinning") {
    Gaussian g(Eigen::VectorXd::Zero(3), Eigen::VectorXd::Ones(3));
    const auto chains = run_hmc(g, quick(2, 50, 101, 10, 3));
    REQUIRE(chains.size() == 2);
    CHECK(chains[1].chain == 1);
    CHECK(chains[0].draws.rows() == 10);
    CHECK(chains[0].draws.cols() == 3);
    CHECK(chains[0].names == std::vector<std::string>{"x0", "x1", "x2"});
    CHECK(chains[0].step_size > 0.0);
    CHECK(chains[0].leapfrog_steps > 0);
  }

  TEST_CASE("anisotropic Gaussian moments") {
    Eigen::VectorXd mu(4), sd(4);
    mu << 1.0, -3.0, 100.0, 0.0;
    sd << 0.01, 1.0, 10.0, 3.0;
    Gaussian g(mu, sd);
    const auto chains = run_hmc(g, quick(4, 1000, 2000, 1, 5));
    for (Eigen::Index k = 0; k < 4; ++k) {
      const auto s = column(chains, "x" + std::to_string(k));
      double m = 0.0, v = 0.0, n = 0.0;
      for (const auto& c : s) {
        for (double x : c) {
          m += x;
          n += 1;
        }
      }
      m /= n;
      for (const auto& c : s) {
        for (double x : c) v += (x - m) * (x - m);
      }
      v /= n - 1;
      CHECK(std::abs(m - mu[k]) < 0.08 * sd[k]);
      CHECK(v / (sd[k] * sd[k]) == doctest::Approx(1.0).epsilon(0.12));
      CHECK(rhat(s) < 1.01);
    }
    for (const auto& c : chains) {
      CHECK(c.divergences == 0);
      CHECK(c.accept_rate > 0.6);
    }
  }

  TEST_CASE("same seed reproduces, different seeds differ, pool is irrelevant") {
    Gaussian g(Eigen::VectorXd::Zero(2), Eigen::VectorXd::Ones(2));
    const auto a = run_hmc(g, quick(3, 50, 50, 1, 9));
    WorkerPool pool(3);
    const auto b = run_hmc(g, quick(3, 50, 50, 1, 9), &pool);
    const auto c = run_hmc(g, quick(3, 50, 50, 1, 10));
    for (std::size_t k = 0; k < 3; ++k) {
      CHECK(a[k].draws == b[k].draws);
      CHECK(a[k].step_size == b[k].step_size);
      CHECK(!(a[k].draws == c[k].draws));
    }
    CHECK(!(a[0].draws == a[1].draws));
    const auto single = run_chain(g, quick(3, 50, 50, 1, 9), 2);
    CHECK(single.draws == a[2].draws);
  }

  TEST_CASE("progress callback covers every iteration") {
    Gaussian g(Eigen::VectorXd::Zero(1), Eigen::VectorXd::Ones(1));
    int last = 0, total = 0;
    run_chain(g, quick(1, 20, 30, 1, 1), 0, [&](int, int it, int tot) {
      last = it;
      total = tot;
    });
    CHECK(total == 50);
    CHECK(last == 50);
  }
}
