#pragma once

#include "out/core.hpp"
#include "out/spectral.hpp"

namespace out {

// Strictly lower-triangular p x p matrices are stored as packed vectors of
// length p(p-1)/2 in row order: (1,0), (2,0), (2,1), (3,0), ...
inline Index packed_size(Index p) { return p * (p - 1) / 2; }
inline Index packed_index(Index i, Index j) { return i * (i - 1) / 2 + j; }
Index dimension_from_packed(Index n);

Matrix unpack_lower(const Vector& packed, Index p);
Vector pack_lower(const Matrix& m);
/// Skew-symmetric matrix whose sub-diagonal entries are `packed`.
Matrix unpack_skew(const Vector& packed, Index p);

/// Modified Cholesky factors: Omega = (I - L) D^2 (I - L)^T.
struct CholeskyFactor {
  Matrix L;  // strictly lower triangular
  Vector d;  // positive

  void validate() const;
};

/// Skew-symmetric Cayley generator, stored by its sub-diagonal entries.
struct CayleyFactor {
  Index p = 0;
  Vector entries;

  Matrix matrix() const { return unpack_skew(entries, p); }
};

struct ThresholdLevels {
  double lambda = 0.0;        // hard threshold for L
  double lambda_prime = 0.0;  // soft threshold for A
};

/// Local/column shrinkage latents of the cumulative shrinkage prior on xi.
struct ShrinkageLatents {
  Matrix v;      // p x R local precisions
  Vector delta;  // R multiplicative column increments, tau_r = prod_{i<=r} delta_i
  double sigma_kappa = 1.0;

  Vector tau() const;
};

/// Sampler coordinates. L and A are kept un-thresholded and d in log scale;
/// the effective model matrices are derived on demand.
struct ModelState {
  Vector l_raw;     // packed strictly-lower entries
  Vector log_d;
  Vector a_raw;     // packed sub-diagonal entries of A
  ThresholdLevels thresholds;
  SpectralCoeffs spectral;
  ShrinkageLatents shrinkage;
  double ig_location = 1.0;  // location of the inverse-Gaussian prior on d

  Index p() const { return log_d.size(); }
  Vector d() const { return log_d.array().exp(); }

  /// Zero L and A, unit d, flat spectra.
  static ModelState identity(Index p, Index K, Index R);
};

/// Hard threshold H_lambda applied entrywise.
Matrix effective_L(const Matrix& l_raw, double lambda);
Vector effective_L(const Vector& l_raw_packed, double lambda);

/// Soft threshold S_lambda' applied to the sub-diagonal and mirrored.
Matrix effective_A(const Matrix& a_raw, double lambda_prime);
Vector effective_A(const Vector& a_raw_packed, double lambda_prime);

/// U = (I - A)(I + A)^{-1}.
Matrix cayley_rotation(const Matrix& A);

/// Omega = (I - L) D^2 (I - L)^T, exactly symmetric.
Matrix precision_from_factors(const Matrix& L, const Vector& d);

/// LDL^T without pivoting: the unique (L, d) with Omega = (I-L) D^2 (I-L)^T.
CholeskyFactor modified_cholesky(const Matrix& omega);

/// Concrete OUT map Z = U^T D (I - L)^T Y with exact thresholds applied, so that
/// Cov(Y) = Omega^{-1} for unit-variance latents.
struct OutTransform {
  Matrix L;
  Vector d;
  Matrix U;

  static OutTransform from_state(const ModelState& state);
  Matrix precision() const { return precision_from_factors(L, d); }
};

Matrix latent_from_observed(const Matrix& Y, const OutTransform& transform);
Matrix latent_from_observed(const Matrix& Y, const ModelState& state);

/// Y = (I - L)^{-T} D^{-1} U Z by unit-upper triangular solve.
Matrix observed_from_latent(const Matrix& Z, const OutTransform& transform);
Matrix observed_from_latent(const Matrix& Z, const ModelState& state);

}  // namespace out
