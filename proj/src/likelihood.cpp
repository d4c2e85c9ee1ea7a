#include "out/likelihood.hpp"

#include <cmath>

namespace out {

double smooth_indicator(double x, double lambda, double h0) {
  return 0.5 + std::atan((x * x - lambda * lambda) / h0) / kPi;
}

double smooth_indicator_derivative(double x, double lambda, double h0) {
  const double z = (x * x - lambda * lambda) / h0;
  return (2.0 * x / h0) / (kPi * (1.0 + z * z));
}

Block parse_block(std::string_view tag) {
  if (tag == "L_raw") return Block::LRaw;
  if (tag == "log_d") return Block::LogD;
  if (tag == "xi") return Block::Xi;
  if (tag == "eta") return Block::Eta;
  if (tag == "A_raw") return Block::ARaw;
  throw InvalidArgument("unknown coordinate block '" + std::string(tag) + "'");
}

std::string_view block_name(Block b) {
  switch (b) {
    case Block::LRaw: return "L_raw";
    case Block::LogD: return "log_d";
    case Block::Xi: return "xi";
    case Block::Eta: return "eta";
    case Block::ARaw: return "A_raw";
  }
  return "?";
}

LikelihoodContext::LikelihoodContext(WhittleData whittle, Index K, double h0)
    : whittle_(std::move(whittle)), basis_(K), h0_(h0) {
  if (h0 <= 0.0) throw InvalidArgument("smoothing width h0 must be positive");
  slot_basis_ = slot_basis_matrix(basis_, whittle_.omegas);
  slot_counts_ = Vector::Zero(whittle_.n_slots());
  for (Index s : whittle_.freq_index) slot_counts_[s] += 1.0;
}

LikelihoodContext LikelihoodContext::from_observations(const Matrix& Y, Index K, double h0) {
  return LikelihoodContext(whittle_transform(Y), K, h0);
}

namespace {

void resolve_L(const ModelState& state, Thresholding mode, double h0, Matrix& L, Vector& slope) {
  const Index p = state.p();
  const double lambda = state.thresholds.lambda;
  L.setZero(p, p);
  slope.resize(state.l_raw.size());
  for (Index i = 1; i < p; ++i) {
    for (Index j = 0; j < i; ++j) {
      const Index k = packed_index(i, j);
      const double x = state.l_raw[k];
      if (mode == Thresholding::Exact) {
        const bool on = std::abs(x) > lambda;
        L(i, j) = on ? x : 0.0;
        slope[k] = on ? 1.0 : 0.0;
      } else {
        const double s = smooth_indicator(x, lambda, h0);
        L(i, j) = x * s;
        slope[k] = s + x * smooth_indicator_derivative(x, lambda, h0);
      }
    }
  }
}

}  // namespace

WhittleTerms WhittleModel::evaluate(const ModelState& state) const {
  const auto& ctx = *ctx_;
  if (state.p() != ctx.p()) throw InvalidArgument("state dimension does not match data");
  if (state.spectral.K() != ctx.K()) throw InvalidArgument("spectral basis size does not match context");
  WhittleTerms terms;
  resolve_L(state, mode_, ctx.h0(), terms.L, terms.l_slope);
  terms.d = state.d();
  terms.U = cayley_rotation(unpack_skew(effective_A(state.a_raw, state.thresholds.lambda_prime), state.p()));
  terms.theta = theta_from_lowrank(state.spectral);
  terms.g_slots = 2.0 * terms.theta * ctx.slot_basis();
  const Matrix& W = ctx.whittle().W;
  terms.V = W - terms.L.transpose().triangularView<Eigen::StrictlyUpper>() * W;
  terms.R = terms.U.transpose() * (terms.d.asDiagonal() * terms.V);
  finish(terms);
  return terms;
}

void WhittleModel::refresh_L(WhittleTerms& terms, const ModelState& state) const {
  resolve_L(state, mode_, ctx_->h0(), terms.L, terms.l_slope);
  const Matrix& W = ctx_->whittle().W;
  terms.V = W - terms.L.transpose().triangularView<Eigen::StrictlyUpper>() * W;
  terms.R = terms.U.transpose() * (terms.d.asDiagonal() * terms.V);
  finish(terms);
}

void WhittleModel::refresh_d(WhittleTerms& terms, const ModelState& state) const {
  terms.d = state.d();
  terms.R = terms.U.transpose() * (terms.d.asDiagonal() * terms.V);
  finish(terms);
}

void WhittleModel::refresh_U(WhittleTerms& terms, const ModelState& state) const {
  terms.U = cayley_rotation(unpack_skew(effective_A(state.a_raw, state.thresholds.lambda_prime), state.p()));
  terms.R = terms.U.transpose() * (terms.d.asDiagonal() * terms.V);
  finish(terms);
}

void WhittleModel::refresh_spectral(WhittleTerms& terms, const ModelState& state) const {
  terms.theta = theta_from_lowrank(state.spectral);
  terms.g_slots = 2.0 * terms.theta * ctx_->slot_basis();
  finish(terms);
}

void WhittleModel::finish(WhittleTerms& terms) const {
  const auto& wd = ctx_->whittle();
  const Index p = wd.p();
  const Index T = wd.T();
  double log_s = 0.0;
  for (Index s = 0; s < wd.n_slots(); ++s) {
    log_s += ctx_->slot_counts()[s] * terms.g_slots.col(s).array().log().sum();
  }
  double quad = 0.0;
  for (Index t = 0; t < T; ++t) {
    const Index s = wd.freq_index[static_cast<size_t>(t)];
    quad += (terms.R.col(t).array().square() / terms.g_slots.col(s).array()).sum();
  }
  const double pT = static_cast<double>(p * T);
  terms.value = -0.5 * pT * kLog2Pi + static_cast<double>(T) * terms.d.array().log().sum() - 0.5 * log_s -
                0.5 * quad;
}

Vector WhittleModel::gradient(const WhittleTerms& terms, const ModelState& state, Block block) const {
  const auto& wd = ctx_->whittle();
  const Index p = wd.p();
  const Index T = wd.T();

  auto scaled_residual = [&]() {
    Matrix Q(p, T);
    for (Index t = 0; t < T; ++t) {
      const Index s = wd.freq_index[static_cast<size_t>(t)];
      Q.col(t) = terms.R.col(t).cwiseQuotient(terms.g_slots.col(s));
    }
    return Q;
  };

  switch (block) {
    case Block::LRaw: {
      const Matrix UQ = terms.U * scaled_residual();
      // R = U^T D (I - L)^T W, so d ell / d L = W (D U Q)^T
      const Matrix grad_full = wd.W * (terms.d.asDiagonal() * UQ).transpose();
      Vector g = pack_lower(grad_full);
      return g.cwiseProduct(terms.l_slope);
    }
    case Block::ARaw: {
      // d ell / d U = -G Q^T with G = D V; through the Cayley map
      // dU = -(I + U) dA (I + A)^{-1}, so d ell / d A = (I + U)^T G Q^T (I - A)^{-1}.
      const Index pp = p;
      const Matrix A = unpack_skew(effective_A(state.a_raw, state.thresholds.lambda_prime), pp);
      const Matrix I = Matrix::Identity(pp, pp);
      const Matrix GQ = (terms.d.asDiagonal() * terms.V) * scaled_residual().transpose();
      const Matrix left = (I + terms.U).transpose() * GQ;
      const Matrix full = (I - A).transpose().partialPivLu().solve(left.transpose()).transpose();
      Vector g(packed_size(pp));
      for (Index i = 1; i < pp; ++i)
        for (Index j = 0; j < i; ++j) {
          const double a = state.a_raw[packed_index(i, j)];
          const bool live = std::abs(a) > state.thresholds.lambda_prime;
          g[packed_index(i, j)] = live ? full(i, j) - full(j, i) : 0.0;
        }
      return g;
    }
    case Block::LogD: {
      const Matrix UQ = terms.U * scaled_residual();
      // G = D V, so sum_t (UQ)_jt G_jt = d_j sum_t (UQ)_jt V_jt
      Vector g(p);
      for (Index j = 0; j < p; ++j) g[j] = static_cast<double>(T) - terms.d[j] * UQ.row(j).dot(terms.V.row(j));
      return g;
    }
    case Block::Xi:
    case Block::Eta: {
      const auto& sc = state.spectral;
      // d ell / d g at each slot
      Matrix dg = Matrix::Zero(p, wd.n_slots());
      for (Index t = 0; t < T; ++t) {
        const Index s = wd.freq_index[static_cast<size_t>(t)];
        const auto g = terms.g_slots.col(s).array();
        const auto r2 = terms.R.col(t).array().square();
        dg.col(s).array() += 0.5 * (r2 / g.square() - 1.0 / g);
      }
      const Matrix dtheta = 2.0 * dg * ctx_->slot_basis().transpose();
      const Matrix kappa = sc.xi * sc.eta.transpose();
      Matrix dkappa(p, sc.K());
      for (Index j = 0; j < p; ++j) {
        double total = 0.0;
        for (Index k = 0; k < sc.K(); ++k) total += link(kappa(j, k));
        const double centre = 2.0 * dtheta.row(j).dot(terms.theta.row(j));
        for (Index k = 0; k < sc.K(); ++k) {
          dkappa(j, k) = link_derivative(kappa(j, k)) / (2.0 * total) * (dtheta(j, k) - centre);
        }
      }
      Matrix grad = block == Block::Xi ? Matrix(dkappa * sc.eta) : Matrix(dkappa.transpose() * sc.xi);
      for (Index r = 0; r < sc.R(); ++r)
        if (!sc.active[static_cast<size_t>(r)]) grad.col(r).setZero();
      return grad.reshaped();
    }
  }
  throw InvalidArgument("unknown block");
}

double log_whittle_core(const WhittleData& whittle, const Matrix& L, const Vector& d, const Matrix& U,
                        const Matrix& g_slots) {
  const Index p = whittle.p();
  const Index T = whittle.T();
  if (L.rows() != p || d.size() != p || U.rows() != p || g_slots.rows() != p) {
    throw InvalidArgument("log_whittle_core: dimension mismatch");
  }
  const Matrix& W = whittle.W;
  const Matrix R = U.transpose() * (d.asDiagonal() * (W - L.transpose().triangularView<Eigen::StrictlyUpper>() * W));
  double total = -0.5 * static_cast<double>(p * T) * kLog2Pi + static_cast<double>(T) * d.array().log().sum();
  for (Index t = 0; t < T; ++t) {
    const Index s = whittle.freq_index[static_cast<size_t>(t)];
    const auto g = g_slots.col(s).array();
    total += -0.5 * g.log().sum() - 0.5 * (R.col(t).array().square() / g).sum();
  }
  return total;
}

double log_whittle(const ModelState& state, const LikelihoodContext& ctx, Thresholding mode) {
  const double value = WhittleModel(ctx, mode).evaluate(state).value;
  if (!std::isfinite(value)) throw NumericalError("whittle log-likelihood is not finite");
  return value;
}

Vector grad_log_whittle(const ModelState& state, const LikelihoodContext& ctx, Block block) {
  WhittleModel model(ctx, Thresholding::Smoothed);
  return model.gradient(model.evaluate(state), state, block);
}

}  // namespace out
