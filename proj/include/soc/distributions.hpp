#pragma once

// Univariate distribution families used by the parameter model:
// truncated normal, inverse gamma (shape, scale) and lognormal.

#include <limits>
#include <random>
#include <string>
#include <utility>
#include <variant>

namespace soc {

using Rng = std::mt19937_64;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Normal(mu, sigma^2) restricted to [lo, hi]. Either bound may be infinite.
struct TruncNormal {
  double mu = 0.0;
  double sigma = 1.0;
  double lo = -kInf;
  double hi = kInf;

  friend bool operator==(const TruncNormal&, const TruncNormal&) = default;
};

/// Density proportional to x^(-shape-1) exp(-scale/x); mean scale/(shape-1).
struct InverseGamma {
  double shape = 1.0;
  double scale = 1.0;

  friend bool operator==(const InverseGamma&, const InverseGamma&) = default;
};

/// exp(N(mu, sigma2)).
struct LogNormal {
  double mu = 0.0;
  double sigma2 = 1.0;

  friend bool operator==(const LogNormal&, const LogNormal&) = default;
};

using Distribution = std::variant<TruncNormal, InverseGamma, LogNormal>;

/// Throws ValidationError when parameters are out of range or a truncated
/// normal carries no mass between its bounds.
void validate(const Distribution& dist);

/// Closed support as (lo, hi).
std::pair<double, double> support(const Distribution& dist);

/// Log density; -inf outside the support. Truncated normals include the normalizer.
double log_pdf(const Distribution& dist, double x);

/// d log_pdf / dx inside the support.
double dlog_pdf(const Distribution& dist, double x);

double cdf(const Distribution& dist, double x);

double sample(const Distribution& dist, Rng& rng);

double mean(const Distribution& dist);

std::string describe(const Distribution& dist);

/// Standard normal helpers, accurate in both tails.
double std_normal_cdf(double z);
double std_normal_ccdf(double z);
double log_std_normal_ccdf(double z);
double std_normal_quantile(double p);

/// log(Phi(b) - Phi(a)) for a < b.
double log_normal_mass(double a, double b);

double sample_truncated_std_normal(double a, double b, Rng& rng);

}  // namespace soc
