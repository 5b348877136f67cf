#include "soc/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "soc/error.hpp"

namespace soc {

namespace {

constexpr double kLogSqrt2Pi = 0.91893853320467274178;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// Beyond this the tail is handled by exponential rejection instead of inverting the CDF.
constexpr double kTailSwitch = 8.0;

}  // namespace

double std_normal_cdf(double z) { return 0.5 * boost::math::erfc(-z / std::numbers::sqrt2); }

double std_normal_ccdf(double z) { return 0.5 * boost::math::erfc(z / std::numbers::sqrt2); }

double log_std_normal_ccdf(double z) {
  if (z < 30.0) return std::log(std_normal_ccdf(z));
  // Asymptotic series for the far upper tail.
  const double z2 = z * z;
  return -0.5 * z2 - std::log(z) - kLogSqrt2Pi + std::log1p(-1.0 / z2 + 3.0 / (z2 * z2));
}

double std_normal_quantile(double p) {
  if (p <= 0.0) return -kInf;
  if (p >= 1.0) return kInf;
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

double log_normal_mass(double a, double b) {
  // Work in whichever tail keeps the difference well conditioned.
  if (a > 0.0) {
    const double la = log_std_normal_ccdf(a);
    const double lb = log_std_normal_ccdf(b);
    return la + std::log1p(-std::exp(lb - la));
  }
  if (b < 0.0) return log_normal_mass(-b, -a);
  return std::log1p(-std_normal_cdf(a) - std_normal_ccdf(b));
}

double sample_truncated_std_normal(double a, double b, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  if (b < -kTailSwitch) return -sample_truncated_std_normal(-b, -a, rng);
  if (a > kTailSwitch) {
    // Exponential proposal shifted to a (Robert 1995).
    const double lambda = 0.5 * (a + std::sqrt(a * a + 4.0));
    for (;;) {
      const double z = a - std::log1p(-unif(rng)) / lambda;
      if (z > b) continue;
      if (std::log1p(-unif(rng)) <= -0.5 * (z - lambda) * (z - lambda)) return z;
    }
  }
  const double u = unif(rng);
  if (a > 0.0) {
    // Upper tail: invert the survival function.
    const double qa = std_normal_ccdf(a);
    const double qb = std_normal_ccdf(b);
    const double q = qa - u * (qa - qb);
    const double z = std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * q);
    return std::clamp(z, a, b);
  }
  const double pa = std_normal_cdf(a);
  const double pb = std_normal_cdf(b);
  const double z = std_normal_quantile(pa + u * (pb - pa));
  return std::clamp(z, a, b);
}

void validate(const Distribution& dist) {
  std::visit(overloaded{
                 [](const TruncNormal& d) {
                   if (!(d.sigma > 0.0) || !std::isfinite(d.sigma) || !std::isfinite(d.mu))
                     throw ValidationError("truncated normal needs finite mu and sigma > 0");
                   if (!(d.lo < d.hi)) throw ValidationError("truncated normal needs lo < hi");
                   const double lz = log_normal_mass((d.lo - d.mu) / d.sigma, (d.hi - d.mu) / d.sigma);
                   if (!std::isfinite(lz)) throw ValidationError("truncated normal has no mass between its bounds");
                 },
                 [](const InverseGamma& d) {
                   if (!(d.shape > 0.0 && d.scale > 0.0) || !std::isfinite(d.shape) || !std::isfinite(d.scale))
                     throw ValidationError("inverse gamma needs shape > 0 and scale > 0");
                 },
                 [](const LogNormal& d) {
                   if (!(d.sigma2 > 0.0) || !std::isfinite(d.sigma2) || !std::isfinite(d.mu))
                     throw ValidationError("lognormal needs finite mu and sigma2 > 0");
                 },
             },
             dist);
}

std::pair<double, double> support(const Distribution& dist) {
  return std::visit(overloaded{
                        [](const TruncNormal& d) { return std::pair{d.lo, d.hi}; },
                        [](const InverseGamma&) { return std::pair{0.0, kInf}; },
                        [](const LogNormal&) { return std::pair{0.0, kInf}; },
                    },
                    dist);
}

double log_pdf(const Distribution& dist, double x) {
  return std::visit(
      overloaded{
          [x](const TruncNormal& d) {
            if (!(x >= d.lo && x <= d.hi)) return -kInf;
            const double z = (x - d.mu) / d.sigma;
            return -0.5 * z * z - kLogSqrt2Pi - std::log(d.sigma) -
                   log_normal_mass((d.lo - d.mu) / d.sigma, (d.hi - d.mu) / d.sigma);
          },
          [x](const InverseGamma& d) {
            if (!(x > 0.0) || !std::isfinite(x)) return -kInf;
            return d.shape * std::log(d.scale) - std::lgamma(d.shape) - (d.shape + 1.0) * std::log(x) - d.scale / x;
          },
          [x](const LogNormal& d) {
            if (!(x > 0.0) || !std::isfinite(x)) return -kInf;
            const double lx = std::log(x);
            const double r = lx - d.mu;
            return -lx - kLogSqrt2Pi - 0.5 * std::log(d.sigma2) - 0.5 * r * r / d.sigma2;
          },
      },
      dist);
}

double dlog_pdf(const Distribution& dist, double x) {
  return std::visit(overloaded{
                        [x](const TruncNormal& d) { return -(x - d.mu) / (d.sigma * d.sigma); },
                        [x](const InverseGamma& d) { return -(d.shape + 1.0) / x + d.scale / (x * x); },
                        [x](const LogNormal& d) { return -(1.0 + (std::log(x) - d.mu) / d.sigma2) / x; },
                    },
                    dist);
}

double cdf(const Distribution& dist, double x) {
  return std::visit(overloaded{
                        [x](const TruncNormal& d) {
                          if (x <= d.lo) return 0.0;
                          if (x >= d.hi) return 1.0;
                          const double a = (d.lo - d.mu) / d.sigma;
                          const double b = (d.hi - d.mu) / d.sigma;
                          const double z = (x - d.mu) / d.sigma;
                          return std::exp(log_normal_mass(a, z) - log_normal_mass(a, b));
                        },
                        [x](const InverseGamma& d) {
                          if (x <= 0.0) return 0.0;
                          return boost::math::gamma_q(d.shape, d.scale / x);
                        },
                        [x](const LogNormal& d) {
                          if (x <= 0.0) return 0.0;
                          return std_normal_cdf((std::log(x) - d.mu) / std::sqrt(d.sigma2));
                        },
                    },
                    dist);
}

double sample(const Distribution& dist, Rng& rng) {
  return std::visit(overloaded{
                        [&rng](const TruncNormal& d) {
                          const double z =
                              sample_truncated_std_normal((d.lo - d.mu) / d.sigma, (d.hi - d.mu) / d.sigma, rng);
                          return std::clamp(d.mu + d.sigma * z, d.lo, d.hi);
                        },
                        [&rng](const InverseGamma& d) {
                          std::gamma_distribution<double> gamma(d.shape, 1.0);
                          return d.scale / gamma(rng);
                        },
                        [&rng](const LogNormal& d) {
                          std::normal_distribution<double> normal(0.0, 1.0);
                          return std::exp(d.mu + std::sqrt(d.sigma2) * normal(rng));
                        },
                    },
                    dist);
}

double mean(const Distribution& dist) {
  return std::visit(overloaded{
                        [](const TruncNormal& d) {
                          const double a = (d.lo - d.mu) / d.sigma;
                          const double b = (d.hi - d.mu) / d.sigma;
                          const double lz = log_normal_mass(a, b);
                          auto phi = [](double z) { return std::isfinite(z) ? std::exp(-0.5 * z * z - kLogSqrt2Pi) : 0.0; };
                          return d.mu + d.sigma * (phi(a) - phi(b)) / std::exp(lz);
                        },
                        [](const InverseGamma& d) { return d.shape > 1.0 ? d.scale / (d.shape - 1.0) : kInf; },
                        [](const LogNormal& d) { return std::exp(d.mu + 0.5 * d.sigma2); },
                    },
                    dist);
}

std::string describe(const Distribution& dist) {
  std::ostringstream os;
  os.precision(6);
  std::visit(overloaded{
                 [&os](const TruncNormal& d) {
                   os << "TN[" << d.lo << ", " << d.hi << "](" << d.mu << ", " << d.sigma << "^2)";
                 },
                 [&os](const InverseGamma& d) { os << "InverseGamma(" << d.shape << ", " << d.scale << ")"; },
                 [&os](const LogNormal& d) { os << "LogNormal(" << d.mu << ", " << d.sigma2 << ")"; },
             },
             dist);
  return os.str();
}

}  // namespace soc
