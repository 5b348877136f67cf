#include <doctest.h>

#include <cmath>

#include "soc/transforms.hpp"

using namespace soc;

TEST_SUITE("transforms") {
  TEST_CASE("kind follows the support") {
    CHECK(Transform::for_support(-kInf, kInf).kind == Transform::Kind::Identity);
    CHECK(Transform::for_support(0.0, kInf).kind == Transform::Kind::Lower);
    CHECK(Transform::for_support(-kInf, 1.0).kind == Transform::Kind::Upper);
    CHECK(Transform::for_support(0.0, 1.0).kind == Transform::Kind::Interval);
  }

  TEST_CASE("round trip, bounds, Jacobian and derivatives") {
    const std::vector<Transform> ts = {Transform::for_support(-kInf, kInf), Transform::for_support(0.05, kInf),
                                       Transform::for_support(-kInf, 3.0), Transform::for_support(5.0, 20.0),
                                       Transform::for_support(-5.0, 5.0)};
    for (const auto& t : ts) {
      for (double u : {-30.0, -3.0, -0.4, 0.0, 0.7, 2.5, 30.0}) {
        const double x = t.constrain(u);
        CHECK(x >= t.lo);
        CHECK(x <= t.hi);
        if (std::abs(u) < 10) {
          CHECK(t.unconstrain(x) == doctest::Approx(u).epsilon(1e-10));
          const double h = 1e-6;
          const double dx = (t.constrain(u + h) - t.constrain(u - h)) / (2 * h);
          CHECK(t.dconstrain(u) == doctest::Approx(dx).epsilon(1e-7));
          CHECK(t.log_jacobian(u) == doctest::Approx(std::log(std::abs(t.dconstrain(u)))).epsilon(1e-12));
          const double dj = (t.log_jacobian(u + h) - t.log_jacobian(u - h)) / (2 * h);
          CHECK(t.dlog_jacobian(u) == doctest::Approx(dj).epsilon(1e-6));
        }
        CHECK(std::isfinite(t.log_jacobian(u)));
      }
    }
  }

  TEST_CASE("interval transform stays inside for extreme inputs") {
    const auto t = Transform::for_support(0.0, 1.0);
    CHECK(t.constrain(800.0) <= 1.0);
    CHECK(t.constrain(-800.0) >= 0.0);
    CHECK(t.log_jacobian(-800.0) == doctest::Approx(-800.0));
  }
}
