#pragma once
// Reference computations used by the tests. Each one is written from its
// textbook definition without calling the library routine it checks.

#include "out/core.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

namespace oracle {

using out::Index;
using out::Matrix;
using out::Vector;

/// Clamped cubic knots on [0,1] for K basis functions.
inline std::vector<double> clamped_knots(Index K) {
  std::vector<double> t;
  for (int i = 0; i < 4; ++i) t.push_back(0.0);
  const Index interior = K - 4;
  for (Index i = 1; i <= interior; ++i) t.push_back(static_cast<double>(i) / static_cast<double>(interior + 1));
  for (int i = 0; i < 4; ++i) t.push_back(1.0);
  return t;
}

/// Cox-de Boor recursion. The last basis function is closed at u = 1.
inline double cox_de_boor(const std::vector<double>& t, Index k, int degree, double u) {
  if (degree == 0) {
    const double a = t[static_cast<size_t>(k)], b = t[static_cast<size_t>(k + 1)];
    if (u >= a && u < b) return 1.0;
    // right end: the last non-degenerate interval includes u = 1
    if (u == 1.0 && b == 1.0 && a < 1.0) return 1.0;
    return 0.0;
  }
  double v = 0.0;
  const double d1 = t[static_cast<size_t>(k + degree)] - t[static_cast<size_t>(k)];
  const double d2 = t[static_cast<size_t>(k + degree + 1)] - t[static_cast<size_t>(k + 1)];
  if (d1 > 0) v += (u - t[static_cast<size_t>(k)]) / d1 * cox_de_boor(t, k, degree - 1, u);
  if (d2 > 0) v += (t[static_cast<size_t>(k + degree + 1)] - u) / d2 * cox_de_boor(t, k + 1, degree - 1, u);
  return v;
}

/// Composite Simpson rule on n (even) panels.
template <typename F>
double simpson(F f, double a, double b, int n = 2000) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

/// Normalized basis B_k / int B_k by Cox-de Boor and Simpson quadrature.
struct SplineOracle {
  Index K;
  std::vector<double> knots;
  std::vector<double> integrals;

  explicit SplineOracle(Index K_) : K(K_), knots(clamped_knots(K_)) {
    for (Index k = 0; k < K; ++k) {
      // integrate piecewise over knot spans so the polynomial pieces are exact
      double total = 0.0;
      for (size_t s = 0; s + 1 < knots.size(); ++s) {
        const double a = knots[s], b = knots[s + 1];
        if (b > a) total += simpson([&](double u) { return cox_de_boor(knots, k, 3, std::min(u, 1.0)); }, a, b, 64);
      }
      integrals.push_back(total);
    }
  }
  double normalized(Index k, double u) const { return cox_de_boor(knots, k, 3, u) / integrals[static_cast<size_t>(k)]; }
};

/// Psi(u) = (1 + u / (1 + |u|)) / 2.
inline double link(double u) { return 0.5 * (1.0 + u / (1.0 + std::abs(u))); }

/// theta_jk = Psi(kappa_jk) / (2 sum_l Psi(kappa_jl)), kappa = xi eta^T.
inline Matrix theta(const Matrix& xi, const Matrix& eta) {
  const Matrix kappa = xi * eta.transpose();
  Matrix th(kappa.rows(), kappa.cols());
  for (Index j = 0; j < kappa.rows(); ++j) {
    double s = 0.0;
    for (Index k = 0; k < kappa.cols(); ++k) s += link(kappa(j, k));
    for (Index k = 0; k < kappa.cols(); ++k) th(j, k) = link(kappa(j, k)) / (2.0 * s);
  }
  return th;
}

/// g(omega) = 2 sum_k theta_k B*_k(omega / pi).
inline double spectrum(const SplineOracle& sp, const Vector& theta_row, double omega) {
  double g = 0.0;
  for (Index k = 0; k < sp.K; ++k) g += 2.0 * theta_row[k] * sp.normalized(k, std::abs(omega) / out::kPi);
  return g;
}

/// Real orthonormal Fourier basis as rows: constant, then cos/sin pairs at
/// 2 pi l / T, then the alternating row when T is even. Returns the frequency
/// of each row in `freq`.
inline Matrix fourier_rows(Index T, std::vector<double>& freq) {
  Matrix F(T, T);
  freq.clear();
  Index r = 0;
  for (Index t = 0; t < T; ++t) F(r, t) = 1.0 / std::sqrt(static_cast<double>(T));
  freq.push_back(0.0);
  ++r;
  for (Index l = 1; 2 * l < T; ++l) {
    const double w = 2.0 * out::kPi * static_cast<double>(l) / static_cast<double>(T);
    for (Index t = 0; t < T; ++t) {
      F(r, t) = std::sqrt(2.0 / T) * std::cos(w * static_cast<double>(t));
      F(r + 1, t) = std::sqrt(2.0 / T) * std::sin(w * static_cast<double>(t));
    }
    freq.push_back(w);
    freq.push_back(w);
    r += 2;
  }
  if (T % 2 == 0) {
    for (Index t = 0; t < T; ++t) F(r, t) = (t % 2 ? -1.0 : 1.0) / std::sqrt(static_cast<double>(T));
    freq.push_back(out::kPi);
  }
  return F;
}

/// Dense Gaussian log density of the Fourier coefficients: w_t ~ N(0, M_t) with
/// M_t = B diag(g(omega_t)) B^T and B = (U^T D (I - L)^T)^{-1}.
inline double dense_whittle(const Matrix& Y, const Matrix& L, const Vector& d, const Matrix& U, const Matrix& th,
                            Index K) {
  const Index p = Y.rows(), T = Y.cols();
  std::vector<double> freq;
  const Matrix F = fourier_rows(T, freq);
  const Matrix W = Y * F.transpose();
  const SplineOracle sp(K);
  const Matrix A = U.transpose() * d.asDiagonal() * (Matrix::Identity(p, p) - L).transpose();
  const Matrix B = A.inverse();
  double ll = 0.0;
  for (Index t = 0; t < T; ++t) {
    Vector g(p);
    for (Index j = 0; j < p; ++j) g[j] = spectrum(sp, th.row(j).transpose(), freq[static_cast<size_t>(t)]);
    const Matrix M = B * g.asDiagonal() * B.transpose();
    const Eigen::FullPivLU<Matrix> lu(M);
    const Vector w = W.col(t);
    ll += -0.5 * static_cast<double>(p) * std::log(2.0 * out::kPi) - 0.5 * std::log(lu.determinant()) -
          0.5 * w.dot(lu.solve(w));
  }
  return ll;
}

/// Exact Gaussian log-likelihood of a scalar series with autocovariances gamma.
inline double exact_gaussian_loglik(const Vector& y, const Vector& gamma) {
  const Index T = y.size();
  Matrix S(T, T);
  for (Index i = 0; i < T; ++i)
    for (Index j = 0; j < T; ++j) S(i, j) = gamma[std::abs(i - j)];
  const Eigen::LLT<Matrix> llt(S);
  const Matrix Lc = llt.matrixL();
  return -0.5 * static_cast<double>(T) * std::log(2.0 * out::kPi) - Lc.diagonal().array().log().sum() -
         0.5 * y.dot(llt.solve(y));
}

inline double normal_cdf(double x) { return boost::math::cdf(boost::math::normal(), x); }

/// Two-sided one-sample Kolmogorov-Smirnov p-value (asymptotic distribution with
/// the Stephens small-sample correction).
template <typename Cdf>
double ks_pvalue(std::vector<double> x, Cdf cdf) {
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double D = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    const double F = cdf(x[i]);
    D = std::max({D, F - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - F});
  }
  const double lam = (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * D;
  double q = 0.0;
  for (int k = 1; k <= 100; ++k) q += 2.0 * (k % 2 ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lam * lam);
  return std::clamp(q, 0.0, 1.0);
}

/// Batch-means Monte Carlo standard error of the mean of a correlated trace.
inline double mc_standard_error(const std::vector<double>& x, int batches = 50) {
  const size_t m = x.size() / static_cast<size_t>(batches);
  std::vector<double> means;
  for (int b = 0; b < batches; ++b) {
    double s = 0.0;
    for (size_t i = 0; i < m; ++i) s += x[static_cast<size_t>(b) * m + i];
    means.push_back(s / static_cast<double>(m));
  }
  double mu = 0.0;
  for (double v : means) mu += v;
  mu /= batches;
  double var = 0.0;
  for (double v : means) var += (v - mu) * (v - mu);
  var /= (batches - 1);
  return std::sqrt(var / batches);
}

/// Solve X = A X A^T + Q through the Kronecker system (I - A (x) A) vec X = vec Q.
inline Matrix lyapunov_kron(const Matrix& A, const Matrix& Q) {
  const Index p = A.rows();
  Matrix K = Matrix::Identity(p * p, p * p);
  for (Index i = 0; i < p; ++i)
    for (Index j = 0; j < p; ++j) K.block(i * p, j * p, p, p) -= A(i, j) * A;
  const Vector q = Eigen::Map<const Vector>(Q.data(), p * p);
  const Vector x = K.fullPivLu().solve(q);
  return Eigen::Map<const Matrix>(x.data(), p, p);
}

}  // namespace oracle
