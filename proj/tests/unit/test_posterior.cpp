#include <doctest.h>

#include <cmath>

#include "../fixtures.hpp"
#include "soc/error.hpp"
#include "soc/thread_pool.hpp"

using namespace soc;

TEST_SUITE("posterior") {
  TEST_CASE("coordinate layout") {
    const auto plots = testing::small_experiment(2, 3, 1);
    PosteriorModel m(plots, testing::priors_for(plots));
    const auto& c = m.coordinates();
    CHECK(m.n_globals() == 5 + 2 + 5 + 4 + 5 + 3);
    CHECK(m.dim() == m.n_globals() + 2 * (6 + 5 * 3));
    CHECK(c[0].name == "kappa_D");
    CHECK(c[5].name == "alpha[T1]");
    CHECK(c[5].exp_output);
    CHECK(c[m.plot_offset(0)].name == "D[p1,0]");
    CHECK(c[m.plot_offset(0) + 5].name == "I[p1,0]");
    CHECK(c[m.plot_offset(0) + 6].name == "D[p1,1]");
    CHECK(c[m.plot_offset(1)].name == "D[p2,0]");
    CHECK(PosteriorModel::state_name("x", 4, 7) == "H[x,7]");
    CHECK(m.output_names().size() == m.dim());
  }

  TEST_CASE("constrain and pack round trip") {
    const auto plots = testing::small_experiment(2, 4, 2);
    PosteriorModel m(plots, testing::priors_for(plots));
    Rng rng(1);
    const Eigen::VectorXd x = m.draw_prior(rng);
    const Eigen::VectorXd u = m.unconstrain(x);
    CHECK((m.constrain(u) - x).cwiseAbs().maxCoeff() <= 1e-9 * (1.0 + x.cwiseAbs().maxCoeff()));
    const ModelParams mp = m.params(x);
    std::vector<Trajectory> trajs = {m.trajectory(x, 0), m.trajectory(x, 1)};
    CHECK(trajs[0].size() == 5);
    CHECK(trajs[0][3].i == trajs[0][0].i);
    CHECK(m.pack(mp, trajs).isApprox(x, 1e-14));
  }

  TEST_CASE("log posterior decomposes into prior, process and data terms") {
    const auto plots = testing::small_experiment(1, 4, 3, {"T1"});
    const auto priors = testing::priors_for(plots);
    PosteriorModel m(plots, priors);
    Rng rng(2);
    const Eigen::VectorXd x = m.draw_prior(rng);
    const Eigen::VectorXd u = m.unconstrain(x);
    const ModelParams mp = m.params(x);
    const Trajectory traj = m.trajectory(x, 0);

    double lp = 0.0;
    for (std::size_t k = 0; k < m.n_globals(); ++k) {
      const auto& c = m.coordinates()[k];
      lp += priors.at(c.name).log_density(x[static_cast<Eigen::Index>(k)]);
      lp += c.transform.log_jacobian(u[static_cast<Eigen::Index>(k)]);
    }
    const auto& init = priors.initial_for("p1");
    for (std::size_t j = 0; j < kPools; ++j) {
      const auto idx = static_cast<Eigen::Index>(m.plot_offset(0) + j);
      lp += init[j].log_density(x[idx]) + m.coordinates()[static_cast<std::size_t>(idx)].transform.log_jacobian(u[idx]);
    }
    lp += log_process(traj, mp, plots[0].forcing, plots[0].treatment);
    lp += log_data(plots[0], traj, mp.noise.sigma2_meas);
    CHECK(m.log_posterior(u) == doctest::Approx(lp).epsilon(1e-12));
  }

  TEST_CASE("process term is the normal density of the log states") {
    const auto plots = testing::small_experiment(1, 2, 4, {"T1"});
    ModelParams mp;
    mp.rates.alpha["T1"] = 1.3;
    const PoolState x0{1, 50, 0.5, 0.5, 70, 6};
    Trajectory traj = simulate_deterministic(x0, mp, plots[0].forcing, "T1");
    traj[1].r *= 1.01;
    traj[2].h *= 0.99;
    const auto rt = derive_routing(mp.routing);
    double expect = 0.0;
    for (std::size_t t = 1; t < traj.size(); ++t) {
      const auto mean = step_deterministic(traj[t - 1], mp.rates, rt, "T1", plots[0].forcing[t - 1]).next.as_array();
      const auto y = traj[t].as_array();
      for (std::size_t k = 0; k < kDecayingPools; ++k) {
        const double s2 = mp.noise.sigma2_process[k];
        const double z = std::log(y[k]) - std::log(mean[k]) + s2 / 2;
        expect += -0.5 * std::log(2 * M_PI * s2) - z * z / (2 * s2);
      }
    }
    CHECK(log_process(traj, mp, plots[0].forcing, "T1") == doctest::Approx(expect).epsilon(1e-12));
    traj[2].i += 1.0;
    std::string flag;
    CHECK(log_process(traj, mp, plots[0].forcing, "T1", &flag) == -kInf);
    CHECK(!flag.empty());
  }

  TEST_CASE("data term") {
    PlotData p;
    p.id = "a";
    p.treatment = "T";
    p.forcing.assign(1, Forcing{});
    p.observations = {{0, Measure::TOC, 30.0}, {1, Measure::ROC, 4.0}};
    const Trajectory traj = {PoolState{1, 10, 1, 1, 10, 5}, PoolState{1, 10, 1, 1, 10, 5}};
    const std::array<double, 3> s2 = {0.01, 0.02, 0.03};
    auto term = [](double z, double f, double s) {
      const double r = std::log(z) - std::log(f) + s / 2;
      return -0.5 * std::log(2 * M_PI * s) - r * r / (2 * s) - std::log(z);
    };
    CHECK(log_data(p, traj, s2) == doctest::Approx(term(30.0, 28.0, 0.01) + term(4.0, 5.0, 0.03)));
  }

  TEST_CASE("gradient matches finite differences") {
    const auto plots = testing::small_experiment(2, 5, 5);
    PosteriorModel m(plots, testing::priors_for(plots));
    Rng rng(3);
    for (int rep = 0; rep < 3; ++rep) {
      const Eigen::VectorXd u = m.initial_point(rng);
      Eigen::VectorXd g;
      const double lp = m.log_density_gradient(u, g);
      CHECK(lp == doctest::Approx(m.log_posterior(u)).epsilon(1e-14));
      for (Eigen::Index k = 0; k < u.size(); ++k) {
        const double h = 1e-5 * (1.0 + std::abs(u[k]));
        Eigen::VectorXd a = u, b = u;
        a[k] += h;
        b[k] -= h;
        const double fd = (m.log_posterior(a) - m.log_posterior(b)) / (2 * h);
        INFO(m.coordinates()[static_cast<std::size_t>(k)].name);
        CHECK(g[k] == doctest::Approx(fd).epsilon(1e-4).scale(1e-3));
      }
    }
  }

  TEST_CASE("parallel evaluation is bit-identical") {
    const auto plots = testing::small_experiment(5, 6, 6);
    const auto priors = testing::priors_for(plots);
    PosteriorModel serial(plots, priors);
    WorkerPool pool(3);
    PosteriorModel parallel(plots, priors, &pool);
    Rng rng(4);
    for (int rep = 0; rep < 5; ++rep) {
      const Eigen::VectorXd u = serial.initial_point(rng);
      Eigen::VectorXd g1, g2;
      const double a = serial.log_density_gradient(u, g1);
      const double b = parallel.log_density_gradient(u, g2);
      CHECK(a == b);
      CHECK(g1 == g2);
    }
  }

  TEST_CASE("plot validation") {
    auto plots = testing::small_experiment(1, 3, 7, {"T1"});
    plots[0].observations.push_back({9, Measure::TOC, 40.0});
    CHECK_THROWS_AS(PosteriorModel(plots, testing::priors_for(plots)), ValidationError);
    plots = testing::small_experiment(1, 3, 7, {"T1"});
    plots[0].observations[0].value = -1.0;
    CHECK_THROWS_AS(PosteriorModel(plots, testing::priors_for(plots)), ValidationError);
    plots = testing::small_experiment(2, 3, 7, {"T1"});
    plots[1].id = plots[0].id;
    CHECK_THROWS_AS(PosteriorModel(plots, testing::priors_for({plots[0]})), ValidationError);
  }
}
