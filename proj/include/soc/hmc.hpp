#pragma once

// No-U-turn Hamiltonian sampler with multinomial trajectory sampling, a
// diagonal metric and dual-averaging step size, both adapted during warmup.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "soc/log_density.hpp"
#include "soc/thread_pool.hpp"

namespace soc {

struct SamplerConfig {
  int chains = 6;
  int warmup = 20000;
  int iters = 50000;
  int thin = 10;
  std::uint64_t seed = 1;
  int max_depth = 10;
  double target_accept = 0.8;

  void validate() const;
};

struct ChainDraws {
  int chain = 0;
  std::vector<std::string> names;
  /// Kept draws, one row each, as produced by LogDensity::to_output.
  Eigen::MatrixXd draws;
  double step_size = 0.0;
  double accept_rate = 0.0;
  long divergences = 0;
  long leapfrog_steps = 0;
};

/// Called as (chain, iteration, total iterations) every so often from the chain's thread.
using ProgressFn = std::function<void(int, int, int)>;

/// Runs config.chains independent chains, concurrently when a pool is given.
/// Output is identical for any pool size.
std::vector<ChainDraws> run_hmc(const LogDensity& target, const SamplerConfig& config, WorkerPool* pool = nullptr,
                                const ProgressFn& progress = {});

/// A single chain; exposed for tests.
ChainDraws run_chain(const LogDensity& target, const SamplerConfig& config, int chain,
                     const ProgressFn& progress = {});

}  // namespace soc
