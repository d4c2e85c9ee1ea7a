#include "out/spectral.hpp"

#include <algorithm>
#include <cmath>

namespace out {

Index SpectralCoeffs::active_rank() const {
  return static_cast<Index>(std::count(active.begin(), active.end(), 1));
}

BSplineBasis::BSplineBasis(Index K) : K_(K) {
  if (K < 4) throw InvalidArgument("bspline basis needs K >= 4, got " + std::to_string(K));
  const Index n_interior = K - 4;
  knots_.assign(static_cast<size_t>(K + 4), 0.0);
  for (Index i = 0; i < n_interior; ++i) {
    knots_[static_cast<size_t>(4 + i)] = static_cast<double>(i + 1) / static_cast<double>(n_interior + 1);
  }
  for (Index i = K; i < K + 4; ++i) knots_[static_cast<size_t>(i)] = 1.0;

  integrals_.resize(K);
  for (Index k = 0; k < K; ++k) {
    integrals_[k] = (knots_[static_cast<size_t>(k + kDegree + 1)] - knots_[static_cast<size_t>(k)]) /
                    static_cast<double>(kDegree + 1);
  }
}

Vector BSplineBasis::evaluate_raw(double u) const {
  if (!(u >= 0.0 && u <= 1.0)) throw InvalidArgument("bspline argument outside [0,1]");

  // knot span s with knots[s] <= u < knots[s+1]; the right end belongs to the last span
  Index span = K_ - 1;
  if (u < 1.0) {
    auto it = std::upper_bound(knots_.begin(), knots_.end(), u);
    span = static_cast<Index>(it - knots_.begin()) - 1;
    span = std::clamp<Index>(span, kDegree, K_ - 1);
  }

  double N[kDegree + 1];
  double left[kDegree + 1];
  double right[kDegree + 1];
  N[0] = 1.0;
  for (int j = 1; j <= kDegree; ++j) {
    left[j] = u - knots_[static_cast<size_t>(span + 1 - j)];
    right[j] = knots_[static_cast<size_t>(span + j)] - u;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double temp = N[r] / (right[r + 1] + left[j - r]);
      N[r] = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    N[j] = saved;
  }

  Vector out = Vector::Zero(K_);
  for (int r = 0; r <= kDegree; ++r) out[span - kDegree + r] = N[r];
  return out;
}

Vector BSplineBasis::evaluate(double u) const {
  return evaluate_raw(u).cwiseQuotient(integrals_);
}

Vector bspline_basis(Index K, double u) { return BSplineBasis(K).evaluate(u); }

double link(double u) { return 0.5 * (1.0 + u / (1.0 + std::abs(u))); }

double link_derivative(double u) {
  const double a = 1.0 + std::abs(u);
  return 0.5 / (a * a);
}

Matrix theta_from_lowrank(const SpectralCoeffs& coeffs) {
  const Matrix kappa = coeffs.xi * coeffs.eta.transpose();
  Matrix theta = kappa.unaryExpr([](double k) { return link(k); });
  for (Index j = 0; j < theta.rows(); ++j) {
    const double total = theta.row(j).sum();
    theta.row(j) /= 2.0 * total;
  }
  return theta;
}

double spectral_value(const BSplineBasis& basis, const Eigen::Ref<const Vector>& theta_row,
                      double omega) {
  if (!(std::abs(omega) <= kPi)) throw InvalidArgument("frequency outside [-pi, pi]");
  const double u = std::min(1.0, std::abs(omega) / kPi);
  return 2.0 * theta_row.dot(basis.evaluate(u));
}

Matrix whittle_matrix(Index T) {
  if (T < 1) throw InvalidArgument("whittle transform needs T >= 1");
  Matrix F(T, T);
  const double dc = 1.0 / std::sqrt(static_cast<double>(T));
  const double interior = std::sqrt(2.0 / static_cast<double>(T));
  for (Index s = 0; s < T; ++s) F(0, s) = dc;
  for (Index row = 1; row < T; ++row) {
    const Index slot = slot_of(row + 1);
    const double omega = 2.0 * kPi * static_cast<double>(slot) / static_cast<double>(T);
    const bool nyquist = (T % 2 == 0) && row == T - 1;
    const bool is_cos = (row % 2 == 1) || nyquist;
    for (Index s = 0; s < T; ++s) {
      const double arg = omega * static_cast<double>(s);
      if (nyquist) {
        F(row, s) = dc * ((s % 2 == 0) ? 1.0 : -1.0);
      } else {
        F(row, s) = interior * (is_cos ? std::cos(arg) : std::sin(arg));
      }
    }
  }
  return F;
}

WhittleData whittle_transform(const Matrix& Y) {
  const Index T = Y.cols();
  if (T < 4) throw InvalidArgument("whittle transform needs T >= 4");
  WhittleData out;
  out.W = Y * whittle_matrix(T).transpose();
  out.freq_index.resize(static_cast<size_t>(T));
  for (Index t = 0; t < T; ++t) out.freq_index[static_cast<size_t>(t)] = slot_of(t + 1);
  const Index n_slots = T / 2 + 1;
  out.omegas.resize(n_slots);
  for (Index l = 0; l < n_slots; ++l) {
    out.omegas[l] = 2.0 * kPi * static_cast<double>(l) / static_cast<double>(T);
  }
  return out;
}

Vector build_S(Index t_one_based, const BSplineBasis& basis, const Matrix& theta,
               const WhittleData& whittle) {
  if (t_one_based < 1 || t_one_based > whittle.T()) {
    throw InvalidArgument("S index " + std::to_string(t_one_based) + " outside 1.." +
                          std::to_string(whittle.T()));
  }
  const double omega = whittle.omegas[slot_of(t_one_based)];
  Vector s(theta.rows());
  for (Index j = 0; j < theta.rows(); ++j) s[j] = spectral_value(basis, theta.row(j).transpose(), omega);
  return s;
}

Matrix slot_basis_matrix(const BSplineBasis& basis, const Vector& omegas) {
  Matrix B(basis.size(), omegas.size());
  for (Index l = 0; l < omegas.size(); ++l) {
    B.col(l) = basis.evaluate(std::min(1.0, std::abs(omegas[l]) / kPi));
  }
  return B;
}

}  // namespace out
