#include "soc/hmc.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "soc/error.hpp"

namespace soc {

namespace {

using Vec = Eigen::VectorXd;

constexpr double kMaxDeltaH = 1000.0;

double log_sum_exp(double a, double b) {
  if (a == -kInf) return b;
  if (b == -kInf) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

struct Point {
  Vec q;
  Vec p;
  Vec g;
  double lp = 0.0;
};

class DualAveraging {
 public:
  DualAveraging(double delta) : delta_(delta) {}
  void set_mu(double mu) { mu_ = mu; }
  void restart() {
    counter_ = 0;
    s_bar_ = 0.0;
    x_bar_ = 0.0;
  }
  double learn(double accept) {
    ++counter_;
    accept = std::min(1.0, accept);
    const double eta = 1.0 / (counter_ + kT0);
    s_bar_ = (1.0 - eta) * s_bar_ + eta * (delta_ - accept);
    const double x = mu_ - s_bar_ * std::sqrt(counter_) / kGamma;
    const double x_eta = std::pow(counter_, -kKappa);
    x_bar_ = (1.0 - x_eta) * x_bar_ + x_eta * x;
    return std::exp(x);
  }
  double final_step() const { return std::exp(x_bar_); }

 private:
  static constexpr double kGamma = 0.05;
  static constexpr double kT0 = 10.0;
  static constexpr double kKappa = 0.75;
  double delta_;
  double mu_ = 0.0;
  double counter_ = 0.0;
  double s_bar_ = 0.0;
  double x_bar_ = 0.0;
};

// Warmup schedule: a fast initial buffer, doubling slow windows for the
// metric, and a fast terminal buffer.
class Windows {
 public:
  explicit Windows(int n_warmup) : n_(n_warmup) {
    if (init_ + base_ + term_ > n_) {
      init_ = static_cast<int>(0.15 * n_);
      term_ = static_cast<int>(0.1 * n_);
      base_ = n_ - (init_ + term_);
    }
    size_ = base_;
    next_ = init_ + size_ - 1;
  }
  bool in_window() const { return counter_ >= init_ && counter_ < n_ - term_ && counter_ != n_; }
  bool end_of_window() const { return counter_ == next_ && counter_ != n_; }
  void advance_window() {
    if (next_ == n_ - term_ - 1) return;
    size_ *= 2;
    next_ = counter_ + size_;
    if (next_ != n_ - term_ - 1) {
      if (next_ + 2 * size_ >= n_ - term_) next_ = n_ - term_ - 1;
    }
  }
  void tick() { ++counter_; }
  bool active() const { return n_ >= 20; }

 private:
  int n_;
  int init_ = 75;
  int term_ = 50;
  int base_ = 25;
  int counter_ = 0;
  int size_ = 0;
  int next_ = 0;
};

class Welford {
 public:
  explicit Welford(Eigen::Index d) : mean_(Vec::Zero(d)), m2_(Vec::Zero(d)) {}
  void add(const Vec& x) {
    ++n_;
    const Vec delta = x - mean_;
    mean_ += delta / static_cast<double>(n_);
    m2_ += delta.cwiseProduct(x - mean_);
  }
  long n() const { return n_; }
  Vec variance() const { return m2_ / static_cast<double>(n_ - 1); }
  void restart() {
    n_ = 0;
    mean_.setZero();
    m2_.setZero();
  }

 private:
  long n_ = 0;
  Vec mean_;
  Vec m2_;
};

class Nuts {
 public:
  Nuts(const LogDensity& target, Rng& rng, int max_depth)
      : target_(target), rng_(rng), max_depth_(max_depth), minv_(Vec::Ones(static_cast<Eigen::Index>(target.dim()))) {}

  void set_point(const Vec& q) {
    z_.q = q;
    z_.lp = target_.log_density_gradient(q, z_.g);
    if (!std::isfinite(z_.lp)) throw NumericError("sampler started at a point with non-finite log density");
  }
  const Vec& q() const { return z_.q; }
  Vec& inv_metric() { return minv_; }
  double eps = 1.0;
  bool divergent = false;
  long n_leapfrog = 0;

  // One transition; returns the mean Metropolis acceptance over the trajectory.
  double transition() {
    sample_momentum();
    Point z_fwd = z_;
    Point z_bck = z_;
    Point z_sample = z_;
    Point z_propose = z_;

    Vec p_sharp_fwd_bck = minv_.cwiseProduct(z_.p);
    Vec p_sharp_bck_fwd = p_sharp_fwd_bck;
    Vec p_sharp_fwd_fwd = p_sharp_fwd_bck;
    Vec p_sharp_bck_bck = p_sharp_fwd_bck;
    Vec p_fwd_bck = z_.p;
    Vec p_bck_fwd = z_.p;
    Vec p_fwd_fwd = z_.p;
    Vec p_bck_bck = z_.p;
    Vec rho = z_.p;

    double log_sum_weight = 0.0;
    const double H0 = hamiltonian(z_);
    long n_leap = 0;
    double sum_metro = 0.0;
    divergent = false;
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    for (int depth = 0; depth < max_depth_; ++depth) {
      const Eigen::Index d = rho.size();
      Vec rho_fwd = Vec::Zero(d);
      Vec rho_bck = Vec::Zero(d);
      bool valid = false;
      double lsw_subtree = -kInf;

      if (unif(rng_) > 0.5) {
        z_ = z_fwd;
        rho_bck = rho;
        p_bck_fwd = p_fwd_bck;
        p_sharp_bck_fwd = p_sharp_fwd_bck;
        valid = build_tree(depth, z_propose, p_sharp_fwd_bck, p_sharp_fwd_fwd, rho_fwd, p_fwd_bck, p_fwd_fwd, H0, 1.0,
                           n_leap, lsw_subtree, sum_metro);
        z_fwd = z_;
      } else {
        z_ = z_bck;
        rho_fwd = rho;
        p_fwd_bck = p_bck_fwd;
        p_sharp_fwd_bck = p_sharp_bck_fwd;
        valid = build_tree(depth, z_propose, p_sharp_bck_fwd, p_sharp_bck_bck, rho_bck, p_bck_fwd, p_bck_bck, H0, -1.0,
                           n_leap, lsw_subtree, sum_metro);
        z_bck = z_;
      }
      if (!valid) break;

      if (lsw_subtree > log_sum_weight) {
        z_sample = z_propose;
      } else if (unif(rng_) < std::exp(lsw_subtree - log_sum_weight)) {
        z_sample = z_propose;
      }
      log_sum_weight = log_sum_exp(log_sum_weight, lsw_subtree);

      rho = rho_bck + rho_fwd;
      bool persist = turning_ok(p_sharp_bck_bck, p_sharp_fwd_fwd, rho);
      persist = persist && turning_ok(p_sharp_bck_bck, p_sharp_fwd_bck, rho_bck + p_fwd_bck);
      persist = persist && turning_ok(p_sharp_bck_fwd, p_sharp_fwd_fwd, rho_fwd + p_bck_fwd);
      if (!persist) break;
    }
    n_leapfrog += n_leap;
    z_ = z_sample;
    return n_leap > 0 ? sum_metro / static_cast<double>(n_leap) : 0.0;
  }

  // Doubles or halves eps until one leapfrog step crosses acceptance 0.8.
  void init_stepsize() {
    if (eps == 0.0 || eps > 1e7) return;
    const Point z_init = z_;
    auto trial = [&] {
      z_ = z_init;
      sample_momentum();
      const double H0 = hamiltonian(z_);
      leapfrog(z_, eps);
      double h = hamiltonian(z_);
      if (std::isnan(h)) h = kInf;
      return H0 - h;
    };
    const double log08 = std::log(0.8);
    const int direction = trial() > log08 ? 1 : -1;
    for (;;) {
      const double delta_h = trial();
      if (direction == 1 && !(delta_h > log08)) break;
      if (direction == -1 && !(delta_h < log08)) break;
      eps = direction == 1 ? 2.0 * eps : 0.5 * eps;
      if (eps > 1e7) throw NumericError("step size diverged during initialization; posterior may be improper");
      if (eps == 0.0) throw NumericError("step size collapsed to zero during initialization");
    }
    z_ = z_init;
  }

 private:
  void sample_momentum() {
    std::normal_distribution<double> normal(0.0, 1.0);
    z_.p.resize(minv_.size());
    for (Eigen::Index k = 0; k < minv_.size(); ++k) z_.p[k] = normal(rng_) / std::sqrt(minv_[k]);
  }

  double hamiltonian(const Point& z) const { return -z.lp + 0.5 * z.p.dot(minv_.cwiseProduct(z.p)); }

  void leapfrog(Point& z, double step) {
    z.p += 0.5 * step * z.g;
    z.q += step * minv_.cwiseProduct(z.p);
    z.lp = target_.log_density_gradient(z.q, z.g);
    if (!std::isfinite(z.lp)) {
      z.lp = -kInf;
      return;
    }
    z.p += 0.5 * step * z.g;
  }

  static bool turning_ok(const Vec& p_sharp_minus, const Vec& p_sharp_plus, const Vec& rho) {
    return p_sharp_plus.dot(rho) > 0.0 && p_sharp_minus.dot(rho) > 0.0;
  }

  bool build_tree(int depth, Point& z_propose, Vec& p_sharp_beg, Vec& p_sharp_end, Vec& rho, Vec& p_beg, Vec& p_end,
                  double H0, double sign, long& n_leap, double& log_sum_weight, double& sum_metro) {
    if (depth == 0) {
      leapfrog(z_, sign * eps);
      ++n_leap;
      double h = hamiltonian(z_);
      if (std::isnan(h)) h = kInf;
      if (h - H0 > kMaxDeltaH) divergent = true;
      log_sum_weight = log_sum_exp(log_sum_weight, H0 - h);
      sum_metro += H0 - h > 0.0 ? 1.0 : std::exp(H0 - h);
      z_propose = z_;
      p_sharp_beg = minv_.cwiseProduct(z_.p);
      p_sharp_end = p_sharp_beg;
      rho += z_.p;
      p_beg = z_.p;
      p_end = p_beg;
      return !divergent;
    }
    const Eigen::Index d = rho.size();

    double lsw_init = -kInf;
    Vec p_init_end(d);
    Vec p_sharp_init_end(d);
    Vec rho_init = Vec::Zero(d);
    if (!build_tree(depth - 1, z_propose, p_sharp_beg, p_sharp_init_end, rho_init, p_beg, p_init_end, H0, sign, n_leap,
                    lsw_init, sum_metro))
      return false;

    Point z_propose_final = z_;
    double lsw_final = -kInf;
    Vec p_final_beg(d);
    Vec p_sharp_final_beg(d);
    Vec rho_final = Vec::Zero(d);
    if (!build_tree(depth - 1, z_propose_final, p_sharp_final_beg, p_sharp_end, rho_final, p_final_beg, p_end, H0, sign,
                    n_leap, lsw_final, sum_metro))
      return false;

    const double lsw_subtree = log_sum_exp(lsw_init, lsw_final);
    log_sum_weight = log_sum_exp(log_sum_weight, lsw_subtree);
    if (lsw_final > lsw_subtree) {
      z_propose = z_propose_final;
    } else {
      std::uniform_real_distribution<double> unif(0.0, 1.0);
      if (unif(rng_) < std::exp(lsw_final - lsw_subtree)) z_propose = z_propose_final;
    }

    const Vec rho_subtree = rho_init + rho_final;
    rho += rho_subtree;
    bool persist = turning_ok(p_sharp_beg, p_sharp_end, rho_subtree);
    persist = persist && turning_ok(p_sharp_beg, p_sharp_final_beg, rho_init + p_final_beg);
    persist = persist && turning_ok(p_sharp_init_end, p_sharp_end, rho_final + p_init_end);
    return persist;
  }

  const LogDensity& target_;
  Rng& rng_;
  int max_depth_;
  Vec minv_;
  Point z_;
};

}  // namespace

void SamplerConfig::validate() const {
  if (chains < 1) throw ValidationError("chains must be >= 1");
  if (warmup < 0) throw ValidationError("warmup must be >= 0");
  if (iters < 1) throw ValidationError("iters must be >= 1");
  if (thin < 1) throw ValidationError("thin must be >= 1");
  if (thin > iters) throw ValidationError("thin must not exceed iters");
  if (max_depth < 1 || max_depth > 30) throw ValidationError("max_depth must lie in 1..30");
  if (!(target_accept > 0.0 && target_accept < 1.0)) throw ValidationError("target_accept must lie in (0, 1)");
}

ChainDraws run_chain(const LogDensity& target, const SamplerConfig& cfg, int chain, const ProgressFn& progress) {
  cfg.validate();
  std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed & 0xffffffffu), static_cast<std::uint32_t>(cfg.seed >> 32),
                    static_cast<std::uint32_t>(chain)};
  Rng rng(seq);

  Nuts nuts(target, rng, cfg.max_depth);
  nuts.set_point(target.initial_point(rng));
  nuts.init_stepsize();

  DualAveraging da(cfg.target_accept);
  da.set_mu(std::log(10.0 * nuts.eps));
  da.restart();
  Windows windows(cfg.warmup);
  Welford welford(static_cast<Eigen::Index>(target.dim()));

  ChainDraws out;
  out.chain = chain;
  out.names = target.output_names();
  const int n_keep = cfg.iters / cfg.thin;
  out.draws.resize(n_keep, static_cast<Eigen::Index>(out.names.size()));

  const int total = cfg.warmup + cfg.iters;
  const int report_every = std::max(1, total / 10);
  double accept_sum = 0.0;
  int kept = 0;
  for (int it = 0; it < total; ++it) {
    const bool warm = it < cfg.warmup;
    const double accept = nuts.transition();
    if (warm) {
      nuts.eps = da.learn(accept);
      if (windows.active()) {
        bool update = false;
        if (windows.in_window()) welford.add(nuts.q());
        if (windows.end_of_window()) {
          windows.advance_window();
          const double n = static_cast<double>(welford.n());
          nuts.inv_metric() = (n / (n + 5.0)) * welford.variance().array() + 1e-3 * (5.0 / (n + 5.0));
          welford.restart();
          update = true;
        }
        windows.tick();
        if (update) {
          nuts.init_stepsize();
          da.set_mu(std::log(10.0 * nuts.eps));
          da.restart();
        }
      }
      if (it + 1 == cfg.warmup) {
        nuts.eps = da.final_step();
        nuts.n_leapfrog = 0;
      }
    } else {
      if (cfg.warmup == 0 && it == 0) nuts.n_leapfrog = 0;
      accept_sum += accept;
      if (nuts.divergent) ++out.divergences;
      const int post = it - cfg.warmup;
      if (post % cfg.thin == cfg.thin - 1 && kept < n_keep) out.draws.row(kept++) = target.to_output(nuts.q()).transpose();
    }
    if (progress && ((it + 1) % report_every == 0 || it + 1 == total)) progress(chain, it + 1, total);
  }
  out.step_size = nuts.eps;
  out.accept_rate = accept_sum / cfg.iters;
  out.leapfrog_steps = nuts.n_leapfrog;
  return out;
}

std::vector<ChainDraws> run_hmc(const LogDensity& target, const SamplerConfig& cfg, WorkerPool* pool,
                                const ProgressFn& progress) {
  cfg.validate();
  std::vector<ChainDraws> out(cfg.chains);
  auto one = [&](std::size_t c) { out[c] = run_chain(target, cfg, static_cast<int>(c), progress); };
  if (pool) {
    pool->parallel_for(out.size(), one);
  } else {
    for (std::size_t c = 0; c < out.size(); ++c) one(c);
  }
  return out;
}

}  // namespace soc
