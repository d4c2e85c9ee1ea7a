#include "out/kernels.hpp"

#include <cmath>

namespace out {

namespace {
double log_proposal(const DensityPoint& from, const Vector& to, double step, const Vector& scale) {
  const double h = 0.5 * step * step;
  if (scale.size() == 0) {
    return -(to - from.x - h * from.grad).squaredNorm() / (2.0 * step * step);
  }
  const Vector var = scale.array().square();
  const Vector mean = from.x + h * var.cwiseProduct(from.grad);
  return -((to - mean).array().square() / var.array()).sum() / (2.0 * step * step);
}
}  // namespace

double mala_log_ratio(const DensityPoint& from, const DensityPoint& to, double step, const Vector& scale) {
  return to.log_density - from.log_density + log_proposal(to, from.x, step, scale) -
         log_proposal(from, to.x, step, scale);
}

bool mala_step(DensityPoint& current, const LogDensityGrad& target, double step, Rng& rng, const Vector& scale) {
  const Index n = current.x.size();
  const Vector z = std_normal_vector(n, rng);
  DensityPoint prop;
  if (scale.size() == 0) {
    prop.x = current.x + 0.5 * step * step * current.grad + step * z;
  } else {
    prop.x = current.x + 0.5 * step * step * scale.array().square().matrix().cwiseProduct(current.grad) +
             step * scale.cwiseProduct(z);
  }
  const double u = uniform01(rng);
  auto [value, grad] = target(prop.x);
  if (!std::isfinite(value) || !grad.allFinite()) return false;
  prop.log_density = value;
  prop.grad = std::move(grad);
  const double log_alpha = mala_log_ratio(current, prop, step, scale);
  if (std::log(u) < log_alpha) {
    current = std::move(prop);
    return true;
  }
  return false;
}

AdaptiveProposal::AdaptiveProposal(Index dim, double initial_scale, Index refresh_interval, double nugget)
    : dim_(dim),
      refresh_interval_(refresh_interval),
      initial_scale_(initial_scale),
      nugget_(nugget),
      sum_(Vector::Zero(dim)),
      outer_(Matrix::Zero(dim, dim)) {
  if (refresh_interval < 1) throw InvalidArgument("refresh interval must be positive");
  base_cov_ = Matrix::Identity(dim, dim) * (initial_scale * initial_scale);
  chol_ = Matrix::Identity(dim, dim) * initial_scale;
}

void AdaptiveProposal::record(const Vector& x) {
  sum_ += x;
  outer_.selfadjointView<Eigen::Lower>().rankUpdate(x);
  ++count_;
  if (count_ >= 2 && count_ % refresh_interval_ == 0) refresh();
}

void AdaptiveProposal::refresh() {
  const double n = static_cast<double>(count_);
  const Vector mean = sum_ / n;
  Matrix cov = outer_.selfadjointView<Eigen::Lower>();
  cov = (cov - n * mean * mean.transpose()) / (n - 1.0);
  cov.diagonal().array() += nugget_;
  base_cov_ = (2.38 * 2.38 / static_cast<double>(dim_)) * cov;
  Eigen::LLT<Matrix> llt(base_cov_);
  if (llt.info() != Eigen::Success) {
    base_cov_.diagonal().array() += 1e-10 + 1e-6 * base_cov_.diagonal().mean();
    llt.compute(base_cov_);
  }
  chol_ = llt.matrixL();
  ++version_;
}

Vector AdaptiveProposal::propose(const Vector& x, Rng& rng) const {
  return x + scale_ * (chol_ * std_normal_vector(dim_, rng));
}

AdaptiveProposal::Snapshot AdaptiveProposal::snapshot() const {
  return {dim_, refresh_interval_, count_, version_, initial_scale_, nugget_, scale_, sum_, outer_, base_cov_};
}

AdaptiveProposal AdaptiveProposal::restore(const Snapshot& s) {
  AdaptiveProposal a(s.dim, s.initial_scale, s.refresh_interval, s.nugget);
  a.count_ = s.count;
  a.version_ = s.version;
  a.scale_ = s.scale;
  a.sum_ = s.sum;
  a.outer_ = s.outer;
  a.base_cov_ = s.base_cov;
  Eigen::LLT<Matrix> llt(a.base_cov_);
  a.chol_ = llt.matrixL();
  return a;
}

bool adaptive_mh_step(Vector& x, double& log_density, const LogDensity& target, const AdaptiveProposal& proposal,
                      Rng& rng) {
  Vector y = proposal.propose(x, rng);
  const double u = uniform01(rng);
  const double ly = target(y);
  if (!std::isfinite(ly)) return false;
  if (std::log(u) < ly - log_density) {
    x = std::move(y);
    log_density = ly;
    return true;
  }
  return false;
}

bool rwmh_log_scale(double& value, double& log_target_value, const std::function<double(double)>& log_target,
                    double lower, double upper, double scale, Rng& rng) {
  const double proposal = value * std::exp(scale * std_normal(rng));
  const double u = uniform01(rng);
  if (proposal < lower || proposal > upper) return false;
  const double lp = log_target(proposal);
  if (!std::isfinite(lp)) return false;
  const double log_alpha = lp - log_target_value + std::log(proposal) - std::log(value);
  if (std::log(u) < log_alpha) {
    value = proposal;
    log_target_value = lp;
    return true;
  }
  return false;
}

double AcceptanceWindow::factor(double low, double high, double up, double down) const {
  if (attempts == 0) return 1.0;
  const double r = rate();
  if (r < low) return down;
  if (r > high) return up;
  return 1.0;
}

}  // namespace out
