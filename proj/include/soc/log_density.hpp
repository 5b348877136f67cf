#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "soc/distributions.hpp"

namespace soc {

/// A differentiable log density on R^dim, as seen by the sampler.
class LogDensity {
 public:
  virtual ~LogDensity() = default;

  virtual std::size_t dim() const = 0;
  /// Returns log density (up to a constant) and fills grad. May return -inf,
  /// in which case grad is unspecified.
  virtual double log_density_gradient(const Eigen::VectorXd& u, Eigen::VectorXd& grad) const = 0;
  /// A starting point with finite log density.
  virtual Eigen::VectorXd initial_point(Rng& rng) const = 0;
  /// Maps a point to the values stored in draws.
  virtual Eigen::VectorXd to_output(const Eigen::VectorXd& u) const { return u; }
  virtual std::vector<std::string> output_names() const;
};

}  // namespace soc
