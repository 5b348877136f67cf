#pragma once

// Maps between an unconstrained real line and a parameter's support.

#include <utility>

#include "soc/distributions.hpp"

namespace soc {

struct Transform {
  enum class Kind { Identity, Lower, Upper, Interval };
  Kind kind = Kind::Identity;
  double lo = -kInf;
  double hi = kInf;

  /// Picks the transform for a support (lo, hi); either end may be infinite.
  static Transform for_support(double lo, double hi);

  double constrain(double u) const;
  double unconstrain(double x) const;
  /// log |dx/du|.
  double log_jacobian(double u) const;
  /// dx/du.
  double dconstrain(double u) const;
  /// d log|dx/du| / du.
  double dlog_jacobian(double u) const;

  friend bool operator==(const Transform&, const Transform&) = default;
};

}  // namespace soc
