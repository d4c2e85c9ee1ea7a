#pragma once

#include "out/chain.hpp"
#include "out/core.hpp"
#include "out/kernels.hpp"
#include "out/likelihood.hpp"
#include "out/params.hpp"
#include "out/priors.hpp"

#include <memory>
#include <string>
#include <vector>

namespace out {

enum class RotationKernel { Langevin, AdaptiveMH };

/// Run length, schedule and adaptation settings of one chain.
///
/// Iterations are counted from 1. The schedule is:
///   1..spectral_only_iterations        spectral coefficients only
///   then                               all blocks except the thresholds
///   threshold_activation + 1 onwards   lambda and lambda' switched on
///   shrinkage_start + 1 onwards        v, Delta (and optionally sigma_kappa) updated
///   rank_truncation                    near-zero xi columns frozen at zero
/// Step sizes adapt in windows of `adaptation_window` iterations up to burn_in.
struct SamplerConfig {
  Index total_iterations = 15000;
  Index burn_in = 5000;
  Index thin = 5;
  Index spectral_only_iterations = 500;
  Index threshold_activation = 1500;
  Index shrinkage_start = 1000;
  Index rank_truncation = 3000;
  Index adaptation_window = 100;
  Index proposal_refresh = 100;
  double truncation_epsilon = 1e-3;

  // Initial step sizes. L and log d steps are in preconditioned units.
  double step_L = 0.5;
  double step_log_d = 0.5;
  double step_xi = 0.05;
  double step_eta = 0.05;
  double rotation_scale = 0.01;  // adaptive MH only
  double step_A = 0.05;
  double threshold_scale = 0.1;
  double location_scale = 0.3;

  double mh_target_low = 0.15;
  double mh_target_high = 0.40;
  double lmc_target_low = 0.45;
  double lmc_target_high = 0.70;

  double baseline_blend = 0.1;
  /// Start U from the joint diagonalizer of lagged autocovariances of the
  /// hot-start latents instead of the identity.
  bool rotation_hot_start = true;
  Index hot_start_lags = 5;
  double lambda_floor = 0.02;
  double lambda_quantile = 0.8;
  double spectral_init_scale = 0.01;

  /// gibbs_run and run_chains fit the rescaled series y_i / rms(y_i) and map
  /// the draws back to the original units.
  bool standardize = true;

  bool update_rotation = true;
  /// Kernel for the Cayley generator: gradient-based Langevin moves or the
  /// adaptive random-walk Metropolis proposal.
  RotationKernel rotation_kernel = RotationKernel::Langevin;
  bool update_sigma_kappa = false;

  std::uint64_t seed = 1;

  void validate() const;
  Index expected_draws() const { return (total_iterations - burn_in) / thin; }
};

/// Everything needed to continue a chain bit-exactly.
struct SamplerCheckpoint {
  std::int64_t iteration = 0;
  ModelState state;
  std::vector<double> steps;
  Vector l_scale;
  std::vector<AcceptanceWindow> windows;
  AdaptiveProposal::Snapshot rotation_proposal;
  Vector l_mean_sum;
  Vector a_mean_sum;
  std::int64_t mean_count = 0;
  std::string rng_state;
  ChainOutput partial;
};

/// Gibbs orchestration of the block kernels for one chain.
class GibbsSampler {
 public:
  enum BlockId { kXi = 0, kEta, kL, kLogD, kA, kLambda, kLambdaPrime, kLocation, kNumBlocks };
  static const char* block_label(int id);

  GibbsSampler(const Matrix& Y, PriorConfig prior, SamplerConfig cfg);
  /// Start from an explicit state instead of the hot start.
  GibbsSampler(const Matrix& Y, PriorConfig prior, SamplerConfig cfg, ModelState initial);
  static GibbsSampler resume(const Matrix& Y, PriorConfig prior, SamplerConfig cfg, const SamplerCheckpoint& cp);

  GibbsSampler(GibbsSampler&&) noexcept;
  GibbsSampler& operator=(GibbsSampler&&) noexcept;
  ~GibbsSampler();

  void run_until(Index iteration);
  void run() { run_until(cfg_.total_iterations); }

  Index iteration() const { return iteration_; }
  const ModelState& state() const { return state_; }
  double step(int block) const { return steps_[static_cast<size_t>(block)]; }
  const AdaptiveProposal& rotation_proposal() const { return a_proposal_; }
  /// Current smoothed-target log-likelihood.
  double log_likelihood() const;

  ChainOutput output() const;
  SamplerCheckpoint checkpoint() const;

 private:
  void init_common();
  void sweep();
  void update_xi();
  void update_eta();
  void update_L();
  void update_log_d();
  void update_A();
  void update_A_langevin();
  void update_lambda(bool prime);
  void update_location();
  void update_shrinkage();
  void activate_thresholds();
  void truncate_rank();
  void compute_preconditioner();
  void adapt();
  void store();
  void record(int block, bool accepted);

  struct Impl;
  std::unique_ptr<Impl> impl_;

  PriorConfig prior_;
  SamplerConfig cfg_;
  ModelState state_;
  Index iteration_ = 0;
  std::vector<double> steps_;
  Vector l_scale_;
  std::vector<AcceptanceWindow> windows_;
  std::vector<BlockStats> stats_;
  AdaptiveProposal a_proposal_;
  Vector l_mean_sum_;
  Vector a_mean_sum_;
  Index mean_count_ = 0;
  Rng rng_;
  ChainOutput out_;
  double elapsed_ = 0.0;
};

/// Orthogonal V that jointly diagonalizes symmetric matrices C_k ~ V Lambda_k V^T
/// (real Jacobi sweeps).
Matrix joint_diagonalizer(std::vector<Matrix> mats, double tol = 1e-12, int max_sweeps = 100);

/// Rotation estimate for latents X = U Z with independent rows of Z, from the
/// symmetrized autocovariances at lags 1..max_lag. The columns are permuted and
/// sign-flipped towards the identity and det U = +1.
Matrix second_order_rotation(const Matrix& X, Index max_lag);

/// Cayley generator of U, i.e. (I - U)(I + U)^{-1}.
Matrix inverse_cayley(const Matrix& U);

/// Root-mean-square of each row (the series are modeled as centered).
Vector series_scales(const Matrix& Y);
/// Draws fitted to diag(scale)^{-1} Y rewritten for Y: L_ij * s_j / s_i, d_i / s_i,
/// and the log-likelihood shifted by -T sum log s_i. Thresholds stay in fitted units.
void unstandardize(ChainOutput& chain, const Vector& scale, Index T);

/// Run a single chain to completion with the hot-start schedule.
ChainOutput gibbs_run(const Matrix& Y, const PriorConfig& prior, const SamplerConfig& cfg);

/// Run `n_chains` chains with seeds cfg.seed + c, using up to `n_workers` threads.
std::vector<ChainOutput> run_chains(const Matrix& Y, const PriorConfig& prior, const SamplerConfig& cfg,
                                    Index n_chains, Index n_workers = 1);

/// Initial-positive-sequence effective sample size of a scalar trace.
double effective_sample_size(const Vector& trace);

}  // namespace out
