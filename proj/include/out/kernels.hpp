#pragma once

#include "out/core.hpp"

#include <functional>
#include <utility>

namespace out {

/// Log target value together with its gradient.
using LogDensityGrad = std::function<std::pair<double, Vector>(const Vector&)>;
using LogDensity = std::function<double(const Vector&)>;

/// Current position of a gradient-based chain with its cached target.
struct DensityPoint {
  Vector x;
  double log_density = 0.0;
  Vector grad;
};

/// Log Metropolis ratio of a preconditioned Langevin move x -> y.
/// `scale` holds per-coordinate standard deviations of the preconditioner
/// (empty means identity).
double mala_log_ratio(const DensityPoint& from, const DensityPoint& to, double step, const Vector& scale);

/// One Metropolis-adjusted Langevin step:
///   y = x + (step^2 / 2) S^2 grad + step S z.
/// Non-finite targets or gradients at y count as rejection.
bool mala_step(DensityPoint& current, const LogDensityGrad& target, double step, Rng& rng,
               const Vector& scale = Vector());

/// Gaussian random-walk proposal whose covariance is the scaled empirical
/// covariance of past samples, recomputed only every `refresh_interval` recorded
/// samples. Before the first refresh the proposal is isotropic.
class AdaptiveProposal {
 public:
  AdaptiveProposal() = default;
  AdaptiveProposal(Index dim, double initial_scale, Index refresh_interval = 100, double nugget = 1e-8);

  Index dim() const { return dim_; }
  /// Add a sample to the running moments; refreshes the covariance when the
  /// sample count reaches a multiple of the refresh interval.
  void record(const Vector& x);
  Vector propose(const Vector& x, Rng& rng) const;

  /// Multiplier on the proposal standard deviation, tuned by acceptance windows.
  double scale() const { return scale_; }
  void set_scale(double s) { scale_ = s; }
  /// Incremented on every covariance refresh.
  Index version() const { return version_; }
  Index samples() const { return count_; }
  const Matrix& base_covariance() const { return base_cov_; }

  // state access for checkpointing
  struct Snapshot {
    Index dim, refresh_interval, count, version;
    double initial_scale, nugget, scale;
    Vector sum;
    Matrix outer, base_cov;
  };
  Snapshot snapshot() const;
  static AdaptiveProposal restore(const Snapshot& s);

 private:
  void refresh();

  Index dim_ = 0;
  Index refresh_interval_ = 100;
  Index count_ = 0;
  Index version_ = 0;
  double initial_scale_ = 0.1;
  double nugget_ = 1e-8;
  double scale_ = 1.0;
  Vector sum_;
  Matrix outer_;
  Matrix base_cov_;
  Matrix chol_;
};

/// Adaptive random-walk Metropolis step on a symmetric proposal.
bool adaptive_mh_step(Vector& x, double& log_density, const LogDensity& target, const AdaptiveProposal& proposal,
                      Rng& rng);

/// Random-walk Metropolis on log(value) for a positive scalar with a
/// Uniform[lower, upper] prior; `log_target` excludes that prior and the
/// Jacobian, which are added here.
bool rwmh_log_scale(double& value, double& log_target_value, const std::function<double(double)>& log_target,
                    double lower, double upper, double scale, Rng& rng);

/// Acceptance bookkeeping and the x1.1 / x0.9 window rule.
struct AcceptanceWindow {
  Index attempts = 0;
  Index accepted = 0;

  void add(bool ok) {
    ++attempts;
    accepted += ok ? 1 : 0;
  }
  double rate() const { return attempts ? static_cast<double>(accepted) / static_cast<double>(attempts) : 0.0; }
  /// Factor to apply to the step size given the target band.
  double factor(double low, double high, double up = 1.1, double down = 0.9) const;
  void reset() { attempts = accepted = 0; }
};

}  // namespace out
