#pragma once

#include "out/core.hpp"
#include "out/params.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace out {

/// Stored posterior draws in columnar form: one row per retained iteration.
/// L and A are the effective (exactly thresholded) matrices in packed form;
/// theta rows are the column-major flattening of the p x K coefficient matrix.
struct ChainDraws {
  std::vector<std::int64_t> iterations;
  Matrix L;
  Matrix d;
  Matrix A;
  Vector lambda;
  Vector lambda_prime;
  Matrix theta;
  Vector log_likelihood;

  Index size() const { return static_cast<Index>(iterations.size()); }
  void reserve(Index n_draws, Index p, Index K);
  void resize_rows(Index n);
};

struct BlockStats {
  std::string block;
  std::int64_t attempts = 0;
  std::int64_t accepted = 0;
  std::int64_t sampling_attempts = 0;
  std::int64_t sampling_accepted = 0;

  double sampling_rate() const {
    return sampling_attempts ? static_cast<double>(sampling_accepted) / static_cast<double>(sampling_attempts) : 0.0;
  }
};

/// One entry per adaptation decision: step-size nudges, covariance refreshes,
/// threshold activation and rank truncation.
struct AdaptationEvent {
  std::int64_t iteration = 0;
  std::string block;
  std::string kind;
  double before = 0.0;
  double after = 0.0;
};

struct ChainOutput {
  Index p = 0;
  Index K = 0;
  std::uint64_t seed = 0;
  ChainDraws draws;
  std::vector<BlockStats> acceptance;
  std::vector<AdaptationEvent> adaptation_log;
  double wall_seconds = 0.0;

  Index n_draws() const { return draws.size(); }
  OutTransform transform(Index draw) const;
  Matrix precision(Index draw) const;
  Matrix theta(Index draw) const;
  const BlockStats* block(const std::string& name) const;
};

}  // namespace out
