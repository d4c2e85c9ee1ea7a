#include "out/chain.hpp"

namespace out {

void ChainDraws::reserve(Index n_draws, Index p, Index K) {
  iterations.clear();
  iterations.reserve(static_cast<size_t>(n_draws));
  L.resize(n_draws, packed_size(p));
  d.resize(n_draws, p);
  A.resize(n_draws, packed_size(p));
  lambda.resize(n_draws);
  lambda_prime.resize(n_draws);
  theta.resize(n_draws, p * K);
  log_likelihood.resize(n_draws);
}

void ChainDraws::resize_rows(Index n) {
  iterations.resize(static_cast<size_t>(n));
  L.conservativeResize(n, Eigen::NoChange);
  d.conservativeResize(n, Eigen::NoChange);
  A.conservativeResize(n, Eigen::NoChange);
  lambda.conservativeResize(n);
  lambda_prime.conservativeResize(n);
  theta.conservativeResize(n, Eigen::NoChange);
  log_likelihood.conservativeResize(n);
}

OutTransform ChainOutput::transform(Index draw) const {
  OutTransform t;
  t.L = unpack_lower(draws.L.row(draw).transpose(), p);
  t.d = draws.d.row(draw).transpose();
  t.U = cayley_rotation(unpack_skew(draws.A.row(draw).transpose(), p));
  return t;
}

Matrix ChainOutput::precision(Index draw) const {
  return precision_from_factors(unpack_lower(draws.L.row(draw).transpose(), p), draws.d.row(draw).transpose());
}

Matrix ChainOutput::theta(Index draw) const {
  return draws.theta.row(draw).reshaped(p, K);
}

const BlockStats* ChainOutput::block(const std::string& name) const {
  for (const auto& b : acceptance)
    if (b.block == name) return &b;
  return nullptr;
}

}  // namespace out
