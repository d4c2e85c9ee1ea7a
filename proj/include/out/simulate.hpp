#pragma once

#include "out/core.hpp"
#include "out/params.hpp"
#include "out/priors.hpp"
#include "out/sampler.hpp"

#include <string>
#include <vector>

namespace out {

using Adjacency = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic>;

struct ScenarioSpec {
  Index p = 20;
  Index T = 100;
  int setting = 1;        // 1: exponential-kernel GP latents, 2: ARMA(1,1) latents, 3: VAR(1)
  double sparsity = 0.05;  // fraction of nonzero off-diagonal pairs
  std::uint64_t seed = 1;
  Index burn_in = 500;

  void validate() const;
};

struct SparsePrecision {
  Matrix omega;
  Adjacency adjacency;  // symmetric 0/1, zero diagonal
  Index n_edges() const { return adjacency.sum() / 2; }
};

/// Three Watts-Strogatz blocks (ring degree 2, rewiring 0.1) plus Bernoulli
/// cross-block edges, then an SPD matrix on that pattern. Block sizes are
/// p/3 with the remainder spread over the leading blocks.
SparsePrecision gen_sparse_precision(Index p, double sparsity, Rng& rng);

/// Only the graph part of gen_sparse_precision.
Adjacency small_world_pattern(Index p, double sparsity, Rng& rng);

struct VarSystem {
  Matrix phi;
  Matrix sigma_e;
};

/// Stationary VAR(1) whose marginal covariance is omega^{-1}, given auxiliary
/// K (p x p, standard normal) and orthogonal Q (p x p).
VarSystem algorithm1_var(const Matrix& omega, const Matrix& K_aux, const Matrix& Q_aux);
/// Draws K_aux and a Haar-distributed Q_aux from `rng`.
VarSystem algorithm1_var(const Matrix& omega, Rng& rng);

/// p x T path of Y_t = phi Y_{t-1} + e_t started at `y0`; the first burn_in
/// steps are discarded.
Matrix simulate_var(const VarSystem& sys, Index T, Index burn_in, const Vector& y0, Rng& rng);

/// Largest eigenvalue modulus.
double spectral_radius(const Matrix& m);

Matrix random_orthogonal(Index p, Rng& rng);

struct SimulatedData {
  Matrix Y;                 // p x T
  Matrix omega;             // true precision
  Adjacency adjacency;
  Matrix U;                 // true rotation (identity for setting 3)
  Matrix Z;                 // latent series (empty for setting 3)
  Vector latent_params;     // setting 1: ranges; setting 2: interleaved (phi, theta)
  VarSystem var;            // setting 3 only
};

/// Rotation used for settings 1 and 2: Cayley of a soft-thresholded N(0, 0.3^2) generator.
Matrix random_rotation(Index p, Rng& rng);

/// Unit-variance AR(1) path with coefficient phi, started from stationarity.
Vector simulate_ar1(double phi, Index T, Rng& rng);
/// Unit-variance ARMA(1,1) path with burn-in.
Vector simulate_arma11(double phi, double theta, Index T, Index burn_in, Rng& rng);
/// Innovation variance (1 - phi^2) / (1 + 2 theta phi + theta^2).
double arma11_innovation_variance(double phi, double theta);

SimulatedData gen_setting1(const ScenarioSpec& spec);
SimulatedData gen_setting2(const ScenarioSpec& spec);
SimulatedData gen_setting3(const ScenarioSpec& spec);
SimulatedData generate(const ScenarioSpec& spec);

struct BenchmarkGrid {
  Index p = 20;
  std::vector<int> settings{1, 2, 3};
  std::vector<Index> T_values{40, 100};
  std::vector<double> sparsities{0.05};
  Index replicates = 10;
  std::uint64_t base_seed = 2024;
  double edge_threshold = 0.1;
  Index n_workers = 1;
};

/// Per-replicate result. Failed replicates carry an error message and NaN metrics.
struct ReplicateResult {
  int setting = 0;
  Index T = 0;
  double sparsity = 0.0;
  Index replicate = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  double out_mse = 0.0;
  double baseline_mse = 0.0;
  double out_mcc = 0.0;
  double baseline_mcc = 0.0;
  double seconds = 0.0;
};

struct BenchmarkCell {
  int setting = 0;
  Index T = 0;
  double sparsity = 0.0;
  Index n_ok = 0;
  Index n_failed = 0;
  double out_mse = 0.0;
  double baseline_mse = 0.0;
  double out_mcc = 0.0;
  double baseline_mcc = 0.0;
};

struct BenchmarkResult {
  std::vector<ReplicateResult> replicates;  // ordered by (cell, replicate)
  std::vector<BenchmarkCell> cells;
};

/// Seed of one replicate, a fixed function of the grid seed and the cell coordinates.
std::uint64_t replicate_seed(std::uint64_t base, int setting, Index T, double sparsity, Index replicate);

BenchmarkResult run_benchmark(const BenchmarkGrid& grid, const PriorConfig& prior, const SamplerConfig& sampler);

/// Rows T, columns setting x sparsity x estimator, mirroring the layout of
/// estimation-MSE tables. A failed cell prints "NA".
std::string benchmark_table_csv(const BenchmarkResult& result);
std::string benchmark_replicates_csv(const BenchmarkResult& result);

}  // namespace out
