#include "out/params.hpp"

#include <cmath>

namespace out {

Index dimension_from_packed(Index n) {
  const Index p = static_cast<Index>(std::llround((1.0 + std::sqrt(1.0 + 8.0 * static_cast<double>(n))) / 2.0));
  if (packed_size(p) != n) throw InvalidArgument("packed length " + std::to_string(n) + " is not p(p-1)/2");
  return p;
}

Matrix unpack_lower(const Vector& packed, Index p) {
  if (packed.size() != packed_size(p)) throw InvalidArgument("packed lower entries have wrong length");
  Matrix m = Matrix::Zero(p, p);
  for (Index i = 1; i < p; ++i)
    for (Index j = 0; j < i; ++j) m(i, j) = packed[packed_index(i, j)];
  return m;
}

Vector pack_lower(const Matrix& m) {
  const Index p = m.rows();
  Vector packed(packed_size(p));
  for (Index i = 1; i < p; ++i)
    for (Index j = 0; j < i; ++j) packed[packed_index(i, j)] = m(i, j);
  return packed;
}

Matrix unpack_skew(const Vector& packed, Index p) {
  Matrix a = unpack_lower(packed, p);
  return a - a.transpose();
}

void CholeskyFactor::validate() const {
  const Index p = d.size();
  if (L.rows() != p || L.cols() != p) throw InvalidArgument("cholesky factor dimension mismatch");
  for (Index i = 0; i < p; ++i)
    for (Index j = i; j < p; ++j)
      if (L(i, j) != 0.0) throw InvalidArgument("L must be strictly lower triangular");
  if ((d.array() <= 0.0).any()) throw InvalidArgument("d must be positive");
}

Vector ShrinkageLatents::tau() const {
  Vector t(delta.size());
  double acc = 1.0;
  for (Index r = 0; r < delta.size(); ++r) {
    acc *= delta[r];
    t[r] = acc;
  }
  return t;
}

ModelState ModelState::identity(Index p, Index K, Index R) {
  ModelState s;
  s.l_raw = Vector::Zero(packed_size(p));
  s.log_d = Vector::Zero(p);
  s.a_raw = Vector::Zero(packed_size(p));
  s.spectral = SpectralCoeffs(p, K, R);
  s.shrinkage.v = Matrix::Ones(p, R);
  s.shrinkage.delta = Vector::Ones(R);
  s.shrinkage.sigma_kappa = 1.0;
  return s;
}

namespace {
inline double hard(double z, double lambda) { return std::abs(z) > lambda ? z : 0.0; }
inline double soft(double z, double lambda) {
  const double a = std::abs(z);
  return a > lambda ? z * (1.0 - lambda / a) : 0.0;
}
}  // namespace

Matrix effective_L(const Matrix& l_raw, double lambda) {
  return l_raw.unaryExpr([lambda](double z) { return hard(z, lambda); });
}

Vector effective_L(const Vector& l_raw_packed, double lambda) {
  return l_raw_packed.unaryExpr([lambda](double z) { return hard(z, lambda); });
}

Matrix effective_A(const Matrix& a_raw, double lambda_prime) {
  const Index p = a_raw.rows();
  Matrix a = Matrix::Zero(p, p);
  for (Index i = 1; i < p; ++i)
    for (Index j = 0; j < i; ++j) {
      a(i, j) = soft(a_raw(i, j), lambda_prime);
      a(j, i) = -a(i, j);
    }
  return a;
}

Vector effective_A(const Vector& a_raw_packed, double lambda_prime) {
  return a_raw_packed.unaryExpr([lambda_prime](double z) { return soft(z, lambda_prime); });
}

Matrix cayley_rotation(const Matrix& A) {
  const Index p = A.rows();
  const Matrix I = Matrix::Identity(p, p);
  // (I + A) and (I - A) commute, so (I - A)(I + A)^{-1} = (I + A)^{-1}(I - A).
  Eigen::PartialPivLU<Matrix> lu(I + A);
  Matrix U = lu.solve(I - A);
  if (!U.allFinite()) throw NumericalError("cayley transform: singular I + A");
  return U;
}

Matrix precision_from_factors(const Matrix& L, const Vector& d) {
  const Index p = d.size();
  Matrix M = Matrix::Identity(p, p) - L;
  Matrix omega = M * d.array().square().matrix().asDiagonal() * M.transpose();
  return 0.5 * (omega + omega.transpose());
}

CholeskyFactor modified_cholesky(const Matrix& omega) {
  Eigen::LLT<Matrix> llt(omega);
  if (llt.info() != Eigen::Success) throw NumericalError("modified cholesky: matrix not positive definite");
  const Matrix C = llt.matrixL();
  const Index p = omega.rows();
  CholeskyFactor f;
  f.d = C.diagonal();
  Matrix unit = C * f.d.cwiseInverse().asDiagonal();
  f.L = Matrix::Identity(p, p) - unit;
  f.L.triangularView<Eigen::Upper>().setZero();
  return f;
}

OutTransform OutTransform::from_state(const ModelState& state) {
  const Index p = state.p();
  OutTransform t;
  t.L = unpack_lower(effective_L(state.l_raw, state.thresholds.lambda), p);
  t.d = state.d();
  t.U = cayley_rotation(unpack_skew(effective_A(state.a_raw, state.thresholds.lambda_prime), p));
  return t;
}

Matrix latent_from_observed(const Matrix& Y, const OutTransform& tr) {
  if (Y.rows() != tr.d.size()) throw InvalidArgument("latent_from_observed: dimension mismatch");
  Matrix V = Y - tr.L.transpose().triangularView<Eigen::StrictlyUpper>() * Y;
  return tr.U.transpose() * (tr.d.asDiagonal() * V);
}

Matrix latent_from_observed(const Matrix& Y, const ModelState& state) {
  return latent_from_observed(Y, OutTransform::from_state(state));
}

Matrix observed_from_latent(const Matrix& Z, const OutTransform& tr) {
  if (Z.rows() != tr.d.size()) throw InvalidArgument("observed_from_latent: dimension mismatch");
  const Index p = tr.d.size();
  Matrix rhs = tr.d.cwiseInverse().asDiagonal() * (tr.U * Z);
  const Matrix M = Matrix::Identity(p, p) - tr.L.transpose();
  M.triangularView<Eigen::UnitUpper>().solveInPlace(rhs);
  return rhs;
}

Matrix observed_from_latent(const Matrix& Z, const ModelState& state) {
  return observed_from_latent(Z, OutTransform::from_state(state));
}

}  // namespace out
