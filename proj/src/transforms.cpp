#include "soc/transforms.hpp"

#include <algorithm>
#include <cmath>

#include "soc/error.hpp"

namespace soc {

namespace {

double inv_logit(double u) {
  if (u >= 0.0) return 1.0 / (1.0 + std::exp(-u));
  const double e = std::exp(u);
  return e / (1.0 + e);
}

// log(sigma(u)) + log(1 - sigma(u)), stable for large |u|.
double log_logit_jac(double u) { return -std::abs(u) - 2.0 * std::log1p(std::exp(-std::abs(u))); }

}  // namespace

Transform Transform::for_support(double lo, double hi) {
  if (!(lo < hi)) throw ValidationError("transform support needs lo < hi");
  const bool has_lo = std::isfinite(lo);
  const bool has_hi = std::isfinite(hi);
  if (has_lo && has_hi) return {Kind::Interval, lo, hi};
  if (has_lo) return {Kind::Lower, lo, kInf};
  if (has_hi) return {Kind::Upper, -kInf, hi};
  return {};
}

double Transform::constrain(double u) const {
  switch (kind) {
    case Kind::Identity: return u;
    case Kind::Lower: return lo + std::exp(u);
    case Kind::Upper: return hi - std::exp(u);
    case Kind::Interval: {
      const double x = lo + (hi - lo) * inv_logit(u);
      return std::min(std::max(x, lo), hi);
    }
  }
  return u;
}

double Transform::unconstrain(double x) const {
  switch (kind) {
    case Kind::Identity: return x;
    case Kind::Lower: return std::log(x - lo);
    case Kind::Upper: return std::log(hi - x);
    case Kind::Interval: {
      const double p = (x - lo) / (hi - lo);
      return std::log(p) - std::log1p(-p);
    }
  }
  return x;
}

double Transform::log_jacobian(double u) const {
  switch (kind) {
    case Kind::Identity: return 0.0;
    case Kind::Lower:
    case Kind::Upper: return u;
    case Kind::Interval: return std::log(hi - lo) + log_logit_jac(u);
  }
  return 0.0;
}

double Transform::dconstrain(double u) const {
  switch (kind) {
    case Kind::Identity: return 1.0;
    case Kind::Lower: return std::exp(u);
    case Kind::Upper: return -std::exp(u);
    case Kind::Interval: {
      const double s = inv_logit(u);
      return (hi - lo) * s * (1.0 - s);
    }
  }
  return 1.0;
}

double Transform::dlog_jacobian(double u) const {
  switch (kind) {
    case Kind::Identity: return 0.0;
    case Kind::Lower:
    case Kind::Upper: return 1.0;
    case Kind::Interval: return 1.0 - 2.0 * inv_logit(u);
  }
  return 0.0;
}

}  // namespace soc
