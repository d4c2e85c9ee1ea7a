#pragma once

#include "out/core.hpp"
#include "out/params.hpp"

namespace out {

/// Prior hyperparameters. Defaults follow the settings used for the reported
/// numerical work where those exist (sigma_kappa, kappa1, kappa2, R, h0).
struct PriorConfig {
  double sigma_T = 0.1;        // slab scale of raw L and A entries (standardized units)
  double sigma_d = 10.0;       // half-normal scale on the inverse-Gaussian location
  double lambda_L = 0.0;
  double lambda_U = 0.3;       // 3 sigma_T
  double nu1 = 3.0;            // Gamma(nu1, nu1) local shrinkage
  double kappa1 = 2.1;         // Delta_1 ~ Gamma(kappa1, 1)
  double kappa2 = 3.1;         // Delta_r ~ Gamma(kappa2, 1), r >= 2
  double sigma_kappa = 1.0;    // scale of the eta smoothness prior
  double c1 = 2.0;             // Inv-Gamma(c1, c1) on sigma_kappa when it is sampled
  Index R = 15;
  Index K = 10;
  double h0 = 1e-8;
  double penalty_ridge = 1e-6;

  void validate() const;
};

/// Inverse-Gaussian kernel t^{-3/2} exp(-(t - loc)^2 / (2t)), i.e. IG(mean = loc,
/// shape = loc^2). Log of its normalizing constant loc / sqrt(2 pi).
double log_ig_normalizer(double location);
double logprior_d(const Vector& d, double location);
/// Michael-Schucany-Haas draw from IG(mean, shape).
double sample_inverse_gaussian(double mean, double shape, Rng& rng);

/// Half-normal hyperprior on the inverse-Gaussian location.
double logprior_ig_location(double location, double sigma_d);

/// N(0, sigma_T^2) log-density summed over the raw (pre-threshold) entries.
double logprior_L(const Vector& l_raw, double lambda, const PriorConfig& cfg);
double logprior_A(const Vector& a_raw, double lambda_prime, const PriorConfig& cfg);
/// Uniform[lambda_L, lambda_U] log-density (-inf outside).
double logprior_threshold(double lambda, const PriorConfig& cfg);

struct SecondDifferencePenalty {
  Matrix P;             // Q^T Q with Q the (K-2) x K stencil (1, -2, 1)
  double log_pseudo_det;
};
SecondDifferencePenalty second_difference_penalty(Index K);

/// Full cumulative-shrinkage + smoothness prior of the spectral block.
/// eta_r ~ N(0, sigma_kappa (P + ridge I)^{-1}); sigma_kappa ~ Inv-Gamma(c1, c1).
double logprior_spectral(const Matrix& xi, const Matrix& eta, const Matrix& v, const Vector& delta,
                         double sigma_kappa, const PriorConfig& cfg);

/// Gradients of the log-priors of the continuously updated blocks, in the same
/// flattened coordinates as WhittleModel::gradient. The log_d gradient
/// includes the change-of-variables term.
Vector grad_logprior_L(const Vector& l_raw, const PriorConfig& cfg);
Vector grad_logprior_log_d(const Vector& log_d, double location);
/// log prior of d expressed in log coordinates (density of d plus sum log d).
double logprior_log_d(const Vector& log_d, double location);

/// Draw a complete state from the prior.
ModelState sample_prior(const PriorConfig& cfg, Index p, Rng& rng);

}  // namespace out
