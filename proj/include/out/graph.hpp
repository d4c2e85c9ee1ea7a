#pragma once

#include "out/chain.hpp"
#include "out/core.hpp"

#include <vector>

namespace out {

/// Posterior mean precision with its partial-correlation scaling and
/// entrywise credible bounds.
struct PrecisionSummary {
  Matrix mean;
  Matrix partial_correlation;  // -Omega_ij / sqrt(Omega_ii Omega_jj); diagonal set to 1
  Matrix lower;
  Matrix upper;
  Index n_draws = 0;
};

struct Edge {
  Index i = 0;  // i < j
  Index j = 0;
  double score = 0.0;
};

struct EdgeSet {
  Index p = 0;
  std::vector<Edge> edges;

  bool contains(Index i, Index j) const;
  Index size() const { return static_cast<Index>(edges.size()); }
};

Matrix partial_correlation(const Matrix& omega);

/// Quantile of ascending `v` by linear interpolation between order statistics.
double quantile_sorted(const std::vector<double>& v, double level);

PrecisionSummary summarize_precision(const std::vector<Matrix>& draws, double lower_level = 0.025,
                                     double upper_level = 0.975);
PrecisionSummary summarize_precision(const ChainOutput& chain, double lower_level = 0.025,
                                     double upper_level = 0.975);
PrecisionSummary summarize_precision(const std::vector<ChainOutput>& chains, double lower_level = 0.025,
                                     double upper_level = 0.975);

/// Edge (i, j) iff |rho_ij| > threshold.
EdgeSet extract_edges(const Matrix& partial_corr, double threshold);
EdgeSet extract_edges(const PrecisionSummary& summary, double threshold);

/// Inverse of the blended covariance (1 - blend) S + blend diag(S). Falls back
/// to blend = 0.5 (with a warning on stderr) if the blended matrix is singular.
Matrix baseline_precision(const Matrix& Y, double blend);

struct EstimateMetrics {
  double frobenius_sq = 0.0;
  double scaled_mse = 0.0;  // frobenius_sq / p^2
  double precision = 0.0;
  double recall = 0.0;
  double mcc = 0.0;
  Index true_positive = 0, false_positive = 0, false_negative = 0, true_negative = 0;
};

/// Estimation error and edge recovery; edges on both sides use the scaled
/// threshold on partial correlations.
EstimateMetrics score_estimate(const Matrix& estimate, const Matrix& truth, double threshold = 0.1);

}  // namespace out
