#pragma once

#include "out/core.hpp"

#include <vector>

namespace out {

/// Low-rank spline coefficients: kappa = xi * eta^T, theta = normalized link(kappa).
///
/// `active` marks rank columns still in play; a truncated column has its xi
/// column pinned at zero for the rest of the run.
struct SpectralCoeffs {
  Matrix xi;   // p x R
  Matrix eta;  // K x R
  std::vector<char> active;

  SpectralCoeffs() = default;
  SpectralCoeffs(Index p, Index K, Index R)
      : xi(Matrix::Zero(p, R)), eta(Matrix::Zero(K, R)), active(static_cast<size_t>(R), 1) {}

  Index p() const { return xi.rows(); }
  Index K() const { return eta.rows(); }
  Index R() const { return xi.cols(); }
  Index active_rank() const;
};

/// Clamped cubic B-splines on equispaced knots over [0,1].
///
/// `evaluate` returns the normalized basis B*_k = B_k / int_0^1 B_k, so each
/// function integrates to one.
class BSplineBasis {
 public:
  explicit BSplineBasis(Index K);

  Index size() const { return K_; }
  const std::vector<double>& knots() const { return knots_; }
  const Vector& integrals() const { return integrals_; }

  /// Unnormalized values B_k(u); these form a partition of unity.
  Vector evaluate_raw(double u) const;
  /// Normalized values B*_k(u).
  Vector evaluate(double u) const;

 private:
  static constexpr int kDegree = 3;
  Index K_;
  std::vector<double> knots_;
  Vector integrals_;
};

/// Normalized basis vector (B*_1(u), ..., B*_K(u)). Requires K >= 4, u in [0,1].
Vector bspline_basis(Index K, double u);

/// Link Psi(u) = (1 + u / (1 + |u|)) / 2, a bijection of the real line onto (0,1).
double link(double u);
double link_derivative(double u);

/// theta_jk = Psi(kappa_jk) / (2 sum_l Psi(kappa_jl)); rows sum to 1/2.
Matrix theta_from_lowrank(const SpectralCoeffs& coeffs);

/// g(omega) = 2 sum_k theta_k B*_k(|omega| / pi), the unit-average power spectrum.
double spectral_value(const BSplineBasis& basis, const Eigen::Ref<const Vector>& theta_row,
                      double omega);

/// Orthonormal real Fourier transform of the rows of a p x T data matrix.
///
/// Column t (0-based) of W is coefficient t+1 in the order
/// (c_1, c_2, s_2, c_3, s_3, ..., [c_{T/2+1}]); its frequency slot is
/// freq_index[t] = floor((t+1)/2), i.e. k(t) - 1 in one-based terms.
struct WhittleData {
  Matrix W;
  std::vector<Index> freq_index;
  Vector omegas;  // omega_l = 2 pi (l-1) / T, one per slot

  Index p() const { return W.rows(); }
  Index T() const { return W.cols(); }
  Index n_slots() const { return omegas.size(); }
};

/// The T x T orthonormal real Fourier matrix F; W = Y F^T.
Matrix whittle_matrix(Index T);

WhittleData whittle_transform(const Matrix& Y);

/// Frequency slot (0-based) of one-based transformed coordinate t.
inline Index slot_of(Index t_one_based) { return t_one_based / 2; }

/// Diagonal of S_t (one-based t): g_j(omega_{k(t)}) for every series j.
Vector build_S(Index t_one_based, const BSplineBasis& basis, const Matrix& theta,
               const WhittleData& whittle);

/// K x n_slots matrix of B*_k(omega_slot / pi).
Matrix slot_basis_matrix(const BSplineBasis& basis, const Vector& omegas);

}  // namespace out
