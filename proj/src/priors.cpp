#include "out/priors.hpp"

#include <cmath>
#include <limits>

namespace out {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double normal_logpdf_sum(const Vector& x, double sigma) {
  const double n = static_cast<double>(x.size());
  return -n * (0.5 * kLog2Pi + std::log(sigma)) - 0.5 * x.squaredNorm() / (sigma * sigma);
}

double gamma_logpdf(double x, double shape, double rate) {
  return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * std::log(x) - rate * x;
}
}  // namespace

void PriorConfig::validate() const {
  if (!(sigma_T > 0 && sigma_d > 0 && nu1 > 0 && kappa1 > 0 && kappa2 > 0 && sigma_kappa > 0 && c1 > 0 &&
        h0 > 0 && penalty_ridge > 0)) {
    throw InvalidArgument("prior scales and shapes must be positive");
  }
  if (!(lambda_L >= 0.0 && lambda_L < lambda_U)) throw InvalidArgument("need 0 <= lambda_L < lambda_U");
  if (R < 1) throw InvalidArgument("rank R must be positive");
  if (K < 4) throw InvalidArgument("spline basis size K must be >= 4");
}

double log_ig_normalizer(double location) { return std::log(location) - 0.5 * kLog2Pi; }

double logprior_d(const Vector& d, double location) {
  if (!(location > 0.0)) throw InvalidArgument("inverse-Gaussian location must be positive");
  if ((d.array() <= 0.0).any()) throw InvalidArgument("d must be positive");
  double total = static_cast<double>(d.size()) * log_ig_normalizer(location);
  for (Index j = 0; j < d.size(); ++j) {
    const double t = d[j];
    total += -1.5 * std::log(t) - (t - location) * (t - location) / (2.0 * t);
  }
  return total;
}

double logprior_log_d(const Vector& log_d, double location) {
  return logprior_d(log_d.array().exp().matrix(), location) + log_d.sum();
}

Vector grad_logprior_log_d(const Vector& log_d, double location) {
  Vector g(log_d.size());
  for (Index j = 0; j < log_d.size(); ++j) {
    const double d = std::exp(log_d[j]);
    g[j] = -0.5 - 0.5 * d + location * location / (2.0 * d);
  }
  return g;
}

double sample_inverse_gaussian(double mean, double shape, Rng& rng) {
  const double nu = std_normal(rng);
  const double y = nu * nu;
  const double x = mean + mean * mean * y / (2.0 * shape) -
                   mean / (2.0 * shape) * std::sqrt(4.0 * mean * shape * y + mean * mean * y * y);
  return uniform01(rng) <= mean / (mean + x) ? x : mean * mean / x;
}

double logprior_ig_location(double location, double sigma_d) {
  if (!(location > 0.0)) return kNegInf;
  return 0.5 * std::log(2.0 / kPi) - std::log(sigma_d) - 0.5 * location * location / (sigma_d * sigma_d);
}

double logprior_L(const Vector& l_raw, double lambda, const PriorConfig& cfg) {
  if (lambda < cfg.lambda_L || lambda > cfg.lambda_U) return kNegInf;
  return normal_logpdf_sum(l_raw, cfg.sigma_T);
}

double logprior_A(const Vector& a_raw, double lambda_prime, const PriorConfig& cfg) {
  if (lambda_prime < cfg.lambda_L || lambda_prime > cfg.lambda_U) return kNegInf;
  return normal_logpdf_sum(a_raw, cfg.sigma_T);
}

double logprior_threshold(double lambda, const PriorConfig& cfg) {
  if (lambda < cfg.lambda_L || lambda > cfg.lambda_U) return kNegInf;
  return -std::log(cfg.lambda_U - cfg.lambda_L);
}

Vector grad_logprior_L(const Vector& l_raw, const PriorConfig& cfg) {
  return -l_raw / (cfg.sigma_T * cfg.sigma_T);
}

SecondDifferencePenalty second_difference_penalty(Index K) {
  if (K < 4) throw InvalidArgument("second difference penalty needs K >= 4");
  Matrix Q = Matrix::Zero(K - 2, K);
  for (Index i = 0; i < K - 2; ++i) {
    Q(i, i) = 1.0;
    Q(i, i + 1) = -2.0;
    Q(i, i + 2) = 1.0;
  }
  SecondDifferencePenalty out;
  out.P = Q.transpose() * Q;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(out.P);
  const Vector ev = eig.eigenvalues();
  const double tol = 1e-9 * ev.maxCoeff();
  out.log_pseudo_det = 0.0;
  for (Index i = 0; i < ev.size(); ++i)
    if (ev[i] > tol) out.log_pseudo_det += std::log(ev[i]);
  return out;
}

double logprior_spectral(const Matrix& xi, const Matrix& eta, const Matrix& v, const Vector& delta,
                         double sigma_kappa, const PriorConfig& cfg) {
  if ((v.array() <= 0.0).any() || (delta.array() <= 0.0).any() || !(sigma_kappa > 0.0)) {
    throw InvalidArgument("shrinkage latents must be positive");
  }
  const Index p = xi.rows();
  const Index R = xi.cols();
  const Index K = eta.rows();

  double total = 0.0;
  double tau = 1.0;
  for (Index r = 0; r < R; ++r) {
    tau *= delta[r];
    total += gamma_logpdf(delta[r], r == 0 ? cfg.kappa1 : cfg.kappa2, 1.0);
    for (Index j = 0; j < p; ++j) {
      const double prec = v(j, r) * tau;
      total += 0.5 * std::log(prec) - 0.5 * kLog2Pi - 0.5 * prec * xi(j, r) * xi(j, r);
      total += gamma_logpdf(v(j, r), cfg.nu1, cfg.nu1);
    }
  }

  Matrix Pr = second_difference_penalty(K).P;
  Pr.diagonal().array() += cfg.penalty_ridge;
  Eigen::LLT<Matrix> llt(Pr);
  const double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  for (Index r = 0; r < R; ++r) {
    const auto e = eta.col(r);
    total += 0.5 * log_det - 0.5 * static_cast<double>(K) * (kLog2Pi + std::log(sigma_kappa)) -
             0.5 * e.dot(Pr * e) / sigma_kappa;
  }

  // Inv-Gamma(c1, c1)
  total += cfg.c1 * std::log(cfg.c1) - std::lgamma(cfg.c1) - (cfg.c1 + 1.0) * std::log(sigma_kappa) -
           cfg.c1 / sigma_kappa;
  return total;
}

ModelState sample_prior(const PriorConfig& cfg, Index p, Rng& rng) {
  cfg.validate();
  ModelState s = ModelState::identity(p, cfg.K, cfg.R);
  std::uniform_real_distribution<double> thr(cfg.lambda_L, cfg.lambda_U);
  s.thresholds.lambda = thr(rng);
  s.thresholds.lambda_prime = thr(rng);
  for (Index i = 0; i < s.l_raw.size(); ++i) s.l_raw[i] = cfg.sigma_T * std_normal(rng);
  for (Index i = 0; i < s.a_raw.size(); ++i) s.a_raw[i] = cfg.sigma_T * std_normal(rng);

  s.ig_location = std::abs(cfg.sigma_d * std_normal(rng));
  for (Index j = 0; j < p; ++j) {
    s.log_d[j] = std::log(sample_inverse_gaussian(s.ig_location, s.ig_location * s.ig_location, rng));
  }

  auto& sh = s.shrinkage;
  for (Index r = 0; r < cfg.R; ++r) {
    sh.delta[r] = gamma_draw(r == 0 ? cfg.kappa1 : cfg.kappa2, 1.0, rng);
    for (Index j = 0; j < p; ++j) sh.v(j, r) = gamma_draw(cfg.nu1, cfg.nu1, rng);
  }
  sh.sigma_kappa = 1.0 / gamma_draw(cfg.c1, cfg.c1, rng);

  const Vector tau = sh.tau();
  for (Index r = 0; r < cfg.R; ++r)
    for (Index j = 0; j < p; ++j) s.spectral.xi(j, r) = std_normal(rng) / std::sqrt(sh.v(j, r) * tau[r]);

  Matrix Pr = second_difference_penalty(cfg.K).P;
  Pr.diagonal().array() += cfg.penalty_ridge;
  Eigen::LLT<Matrix> llt(Pr);
  for (Index r = 0; r < cfg.R; ++r) {
    Vector z = std_normal_vector(cfg.K, rng) * std::sqrt(sh.sigma_kappa);
    s.spectral.eta.col(r) = llt.matrixU().solve(z);
  }
  return s;
}

}  // namespace out
