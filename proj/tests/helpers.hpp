#pragma once

#include "out/params.hpp"

namespace testing {

using namespace out;

inline Matrix gaussian_matrix(Index r, Index c, Rng& rng, double sd = 1.0) {
  Matrix m(r, c);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = sd * std_normal(rng);
  return m;
}

/// A generic state with every block away from its default.
inline ModelState random_state(Index p, Index K, Index R, Rng& rng, double thresholds = 0.1) {
  ModelState s = ModelState::identity(p, K, R);
  s.l_raw = 0.5 * std_normal_vector(s.l_raw.size(), rng);
  s.log_d = 0.3 * std_normal_vector(p, rng);
  s.a_raw = 0.5 * std_normal_vector(s.a_raw.size(), rng);
  s.thresholds.lambda = thresholds;
  s.thresholds.lambda_prime = thresholds;
  s.spectral.xi = gaussian_matrix(p, R, rng);
  s.spectral.eta = gaussian_matrix(K, R, rng);
  return s;
}

}  // namespace testing
