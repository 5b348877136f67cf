#pragma once

// Joint posterior over latent pool trajectories and model parameters, its
// unconstrained parameterization and the analytic gradient.

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "soc/log_density.hpp"
#include "soc/model.hpp"
#include "soc/priors.hpp"
#include "soc/thread_pool.hpp"
#include "soc/transforms.hpp"

namespace soc {

struct Observation {
  int month = 0;
  Measure type = Measure::TOC;
  double value = 0.0;

  friend bool operator==(const Observation&, const Observation&) = default;
};

struct PlotData {
  std::string id;
  std::string treatment;
  double area = 1.0;
  double x = 0.0;
  double y = 0.0;
  /// forcing[t] drives the step from month t to t+1.
  std::vector<Forcing> forcing;
  std::vector<Observation> observations;

  int months() const { return static_cast<int>(forcing.size()); }
  void validate() const;

  friend bool operator==(const PlotData&, const PlotData&) = default;
};

struct ModelParams {
  DecayRates rates;
  PrimaryRouting routing;
  NoiseParams noise;
};

/// States for months 0..T.
using Trajectory = std::vector<PoolState>;

Trajectory simulate_deterministic(const PoolState& initial, const ModelParams& params, std::span<const Forcing> forcing,
                                  std::string_view treatment);

/// Process-model log density of log X_{t+1} given X_t, summed over steps and decaying pools.
/// Returns -inf when a deterministic mean is not positive or the inert pool changes; `flag`
/// then names the offending step.
double log_process(const Trajectory& traj, const ModelParams& params, std::span<const Forcing> forcing,
                   std::string_view treatment, std::string* flag = nullptr);

/// Lognormal data-model log density of all observations of one plot.
double log_data(const PlotData& plot, const Trajectory& traj, const std::array<double, 3>& sigma2_meas);

/// One sampled coordinate. `jacobian` is false for log-pool states whose density
/// is already expressed on the log scale. `exp_output` marks log-scale parameters.
struct Coordinate {
  std::string name;
  Transform transform;
  bool jacobian = true;
  bool exp_output = false;
};

class PosteriorModel final : public LogDensity {
 public:
  /// Plots are reordered by id. Every plot needs an initial-condition prior and
  /// every treatment an alpha prior. `pool` may be null (serial evaluation).
  PosteriorModel(std::vector<PlotData> plots, PriorTable priors, WorkerPool* pool = nullptr);
  PosteriorModel(const PosteriorModel&) = delete;
  PosteriorModel& operator=(const PosteriorModel&) = delete;

  std::size_t dim() const override { return coords_.size(); }
  double log_density_gradient(const Eigen::VectorXd& u, Eigen::VectorXd& grad) const override;
  Eigen::VectorXd initial_point(Rng& rng) const override;
  Eigen::VectorXd to_output(const Eigen::VectorXd& u) const override { return constrain(u); }
  std::vector<std::string> output_names() const override;

  /// Log posterior without gradient; `flag` names the first failing term when -inf.
  double log_posterior(const Eigen::VectorXd& u, std::string* flag = nullptr) const;

  Eigen::VectorXd constrain(const Eigen::VectorXd& u) const;
  Eigen::VectorXd unconstrain(const Eigen::VectorXd& x) const;

  /// Interprets a constrained vector.
  ModelParams params(const Eigen::VectorXd& x) const;
  Trajectory trajectory(const Eigen::VectorXd& x, std::size_t plot) const;
  /// Builds a constrained vector from parameters and one trajectory per plot.
  Eigen::VectorXd pack(const ModelParams& params, const std::vector<Trajectory>& trajectories) const;

  /// Prior draw of every parameter with latent states simulated forward under
  /// process noise. Returns a constrained vector.
  Eigen::VectorXd draw_prior(Rng& rng) const;

  const std::vector<Coordinate>& coordinates() const { return coords_; }
  const std::vector<PlotData>& plots() const { return plots_; }
  const PriorTable& priors() const { return priors_; }
  const std::vector<std::string>& treatments() const { return treatments_; }
  std::size_t n_globals() const { return n_globals_; }
  std::size_t plot_offset(std::size_t p) const { return offsets_[p]; }

  static std::string state_name(std::string_view plot_id, std::size_t pool, int month);

 private:
  struct PlotTerm;
  double evaluate(const Eigen::VectorXd& u, Eigen::VectorXd* grad, std::string* flag) const;
  void plot_term(std::size_t p, const Eigen::VectorXd& u, const ModelParams& mp, const DerivedRouting& rt,
                 Eigen::VectorXd* grad, PlotTerm& out) const;

  std::vector<PlotData> plots_;
  PriorTable priors_;
  WorkerPool* pool_;
  std::vector<std::string> treatments_;
  std::vector<std::size_t> plot_treatment_;
  std::vector<Coordinate> coords_;
  std::vector<const Prior*> coord_prior_;  // null for latent states past month 0
  std::size_t n_globals_ = 0;
  std::vector<std::size_t> offsets_;

  std::size_t i_kappa_ = 0, i_alpha_ = 0, i_pi_ = 0, i_pxf_ = 0, i_phs_ = 0, i_pclay_ = 0, i_rdpm_ = 0,
              i_sproc_ = 0, i_smeas_ = 0;
};

}  // namespace soc
