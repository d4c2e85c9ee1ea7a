#include "out/graph.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <optional>

namespace out {

bool EdgeSet::contains(Index i, Index j) const {
  if (i > j) std::swap(i, j);
  return std::any_of(edges.begin(), edges.end(), [&](const Edge& e) { return e.i == i && e.j == j; });
}

Matrix partial_correlation(const Matrix& omega) {
  const Index p = omega.rows();
  Matrix rho(p, p);
  for (Index i = 0; i < p; ++i)
    for (Index j = 0; j < p; ++j)
      rho(i, j) = i == j ? 1.0 : -omega(i, j) / std::sqrt(omega(i, i) * omega(j, j));
  return rho;
}

double quantile_sorted(const std::vector<double>& v, double level) {
  if (v.empty()) throw InvalidArgument("quantile of an empty sample");
  const double pos = level * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  const double w = pos - static_cast<double>(lo);
  return (1.0 - w) * v[lo] + w * v[hi];
}

PrecisionSummary summarize_precision(const std::vector<Matrix>& draws, double lower_level, double upper_level) {
  if (draws.empty()) throw InvalidArgument("cannot summarize an empty chain");
  const Index p = draws.front().rows();
  PrecisionSummary s;
  s.n_draws = static_cast<Index>(draws.size());
  s.mean = Matrix::Zero(p, p);
  for (const auto& m : draws) s.mean += m;
  s.mean /= static_cast<double>(draws.size());
  s.mean = 0.5 * (s.mean + s.mean.transpose());
  s.partial_correlation = partial_correlation(s.mean);

  s.lower.resize(p, p);
  s.upper.resize(p, p);
  std::vector<double> buf(draws.size());
  for (Index i = 0; i < p; ++i) {
    for (Index j = 0; j <= i; ++j) {
      for (size_t k = 0; k < draws.size(); ++k) buf[k] = draws[k](i, j);
      std::sort(buf.begin(), buf.end());
      s.lower(i, j) = s.lower(j, i) = quantile_sorted(buf, lower_level);
      s.upper(i, j) = s.upper(j, i) = quantile_sorted(buf, upper_level);
    }
  }
  return s;
}

PrecisionSummary summarize_precision(const ChainOutput& chain, double lower_level, double upper_level) {
  std::vector<Matrix> draws;
  draws.reserve(static_cast<size_t>(chain.n_draws()));
  for (Index k = 0; k < chain.n_draws(); ++k) draws.push_back(chain.precision(k));
  return summarize_precision(draws, lower_level, upper_level);
}

PrecisionSummary summarize_precision(const std::vector<ChainOutput>& chains, double lower_level,
                                     double upper_level) {
  std::vector<Matrix> draws;
  for (const auto& c : chains)
    for (Index k = 0; k < c.n_draws(); ++k) draws.push_back(c.precision(k));
  return summarize_precision(draws, lower_level, upper_level);
}

EdgeSet extract_edges(const Matrix& partial_corr, double threshold) {
  if (threshold < 0.0) throw InvalidArgument("edge threshold must be nonnegative");
  EdgeSet es;
  es.p = partial_corr.rows();
  for (Index i = 0; i < es.p; ++i)
    for (Index j = i + 1; j < es.p; ++j)
      if (std::abs(partial_corr(i, j)) > threshold) es.edges.push_back({i, j, partial_corr(i, j)});
  return es;
}

EdgeSet extract_edges(const PrecisionSummary& summary, double threshold) {
  return extract_edges(summary.partial_correlation, threshold);
}

Matrix baseline_precision(const Matrix& Y, double blend) {
  const Index p = Y.rows();
  const Index T = Y.cols();
  if (T <= 3) throw InvalidArgument("baseline precision needs T > 3");
  if (blend < 0.0 || blend > 1.0) throw InvalidArgument("blend weight must lie in [0,1]");
  const Matrix centered = Y.colwise() - Y.rowwise().mean();
  const Matrix S = centered * centered.transpose() / static_cast<double>(T - 1);

  auto attempt = [&](double rho) -> std::optional<Matrix> {
    Matrix C = (1.0 - rho) * S;
    C.diagonal() += rho * S.diagonal();
    Eigen::LLT<Matrix> llt(C);
    if (llt.info() != Eigen::Success) return std::nullopt;
    Matrix inv = llt.solve(Matrix::Identity(p, p));
    if (!inv.allFinite()) return std::nullopt;
    Eigen::SelfAdjointEigenSolver<Matrix> eig(inv, Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() <= 0.0) return std::nullopt;
    return Matrix(0.5 * (inv + inv.transpose()));
  };

  if (auto m = attempt(blend)) return *m;
  std::cerr << "warning: degenerate sample covariance; raising blend weight to 0.5\n";
  if (auto m = attempt(std::max(blend, 0.5))) return *m;
  throw NumericalError("baseline precision: covariance is singular even after blending");
}

EstimateMetrics score_estimate(const Matrix& estimate, const Matrix& truth, double threshold) {
  if (estimate.rows() != truth.rows() || estimate.cols() != truth.cols()) {
    throw InvalidArgument("score_estimate: shape mismatch");
  }
  const Index p = truth.rows();
  EstimateMetrics m;
  m.frobenius_sq = (estimate - truth).squaredNorm();
  m.scaled_mse = m.frobenius_sq / static_cast<double>(p * p);

  const Matrix rho_hat = partial_correlation(estimate);
  const Matrix rho_true = partial_correlation(truth);
  for (Index i = 0; i < p; ++i) {
    for (Index j = i + 1; j < p; ++j) {
      const bool est = std::abs(rho_hat(i, j)) > threshold;
      const bool tru = std::abs(rho_true(i, j)) > threshold;
      if (est && tru) ++m.true_positive;
      else if (est) ++m.false_positive;
      else if (tru) ++m.false_negative;
      else ++m.true_negative;
    }
  }
  const auto tp = static_cast<double>(m.true_positive);
  const auto fp = static_cast<double>(m.false_positive);
  const auto fn = static_cast<double>(m.false_negative);
  const auto tn = static_cast<double>(m.true_negative);
  m.precision = tp + fp > 0 ? tp / (tp + fp) : 1.0;
  m.recall = tp + fn > 0 ? tp / (tp + fn) : 1.0;
  const double denom = std::sqrt((tp + fp) * (tp + fn) * (tn + fp) * (tn + fn));
  if (denom > 0.0) {
    m.mcc = (tp * tn - fp * fn) / denom;
  } else {
    // a degenerate confusion table: perfect agreement counts as 1
    m.mcc = (fp == 0.0 && fn == 0.0) ? 1.0 : 0.0;
  }
  return m;
}

}  // namespace out
