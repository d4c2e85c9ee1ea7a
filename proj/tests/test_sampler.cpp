#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "helpers.hpp"
#include "out/io.hpp"
#include "out/sampler.hpp"
#include "out/simulate.hpp"

using namespace out;

namespace {

/// A schedule short enough for unit tests with every phase present.
SamplerConfig short_config(std::uint64_t seed = 5) {
  SamplerConfig c;
  c.total_iterations = 600;
  c.burn_in = 400;
  c.thin = 2;
  c.spectral_only_iterations = 50;
  c.shrinkage_start = 100;
  c.threshold_activation = 150;
  c.rank_truncation = 200;
  c.adaptation_window = 50;
  c.proposal_refresh = 50;
  c.seed = seed;
  return c;
}

Matrix small_data(int setting = 2, std::uint64_t seed = 3) {
  ScenarioSpec s;
  s.p = 5;
  s.T = 64;
  s.setting = setting;
  s.sparsity = 0.2;
  s.seed = seed;
  return generate(s).Y;
}

}  // namespace

TEST_CASE("a fixed seed gives bit-identical chains") {
  const Matrix Y = small_data();
  const ChainOutput a = gibbs_run(Y, PriorConfig{}, short_config());
  const ChainOutput b = gibbs_run(Y, PriorConfig{}, short_config());
  CHECK(serialize_chain(a) == serialize_chain(b));
  const ChainOutput c = gibbs_run(Y, PriorConfig{}, short_config(6));
  CHECK(serialize_chain(a) != serialize_chain(c));
}

TEST_CASE("resuming from a serialized checkpoint reproduces the uninterrupted chain") {
  const Matrix Y = small_data();
  for (auto kernel : {RotationKernel::Langevin, RotationKernel::AdaptiveMH}) {
    SamplerConfig cfg = short_config();
    cfg.rotation_kernel = kernel;
    GibbsSampler full(Y, PriorConfig{}, cfg);
    full.run();
    // stop both in burn-in (mid adaptation window) and in the sampling phase
    for (Index stop : {Index{175}, Index{473}}) {
      GibbsSampler first(Y, PriorConfig{}, cfg);
      first.run_until(stop);
      const std::string bytes = serialize_checkpoint(first.checkpoint());
      GibbsSampler second = GibbsSampler::resume(Y, PriorConfig{}, cfg, deserialize_checkpoint(bytes));
      CHECK(second.iteration() == stop);
      second.run();
      CHECK(serialize_chain(second.output()) == serialize_chain(full.output()));
    }
  }
}

TEST_CASE("draw count, orthogonality and positivity at every stored draw") {
  const SamplerConfig cfg = short_config();
  const ChainOutput c = gibbs_run(small_data(1), PriorConfig{}, cfg);
  REQUIRE(c.n_draws() == cfg.expected_draws());
  for (Index k = 0; k < c.n_draws(); ++k) {
    CHECK(c.draws.iterations[static_cast<size_t>(k)] > cfg.burn_in);
    const OutTransform tr = c.transform(k);
    CHECK((tr.U.transpose() * tr.U - Matrix::Identity(c.p, c.p)).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK((tr.d.array() > 0.0).all());
    CHECK(std::isfinite(c.draws.log_likelihood[k]));
  }
}

TEST_CASE("thresholds stay exactly zero until activation") {
  const SamplerConfig cfg = short_config();
  GibbsSampler s(small_data(), PriorConfig{}, cfg);
  for (Index i = 1; i <= cfg.threshold_activation; ++i) {
    s.run_until(i);
    REQUIRE(s.state().thresholds.lambda == 0.0);
    REQUIRE(s.state().thresholds.lambda_prime == 0.0);
  }
  s.run_until(cfg.threshold_activation + 1);
  CHECK(s.state().thresholds.lambda >= cfg.lambda_floor);
  CHECK(s.state().thresholds.lambda_prime >= cfg.lambda_floor);
  const ChainOutput out = s.output();
  int activations = 0;
  for (const auto& e : out.adaptation_log)
    if (e.kind == "activate") {
      ++activations;
      CHECK(e.iteration == cfg.threshold_activation + 1);
    }
  CHECK(activations == 2);
}

TEST_CASE("all adaptation stops after burn-in") {
  SamplerConfig cfg = short_config();
  cfg.rotation_kernel = RotationKernel::AdaptiveMH;
  GibbsSampler s(small_data(), PriorConfig{}, cfg);
  s.run_until(cfg.burn_in);
  std::vector<double> steps;
  for (int b = 0; b < GibbsSampler::kNumBlocks; ++b) steps.push_back(s.step(b));
  const Index version = s.rotation_proposal().version();
  const Matrix cov = s.rotation_proposal().base_covariance();
  const Vector xi = s.state().spectral.xi.row(0).transpose();
  s.run();
  for (int b = 0; b < GibbsSampler::kNumBlocks; ++b) CHECK(s.step(b) == steps[static_cast<size_t>(b)]);
  CHECK(s.rotation_proposal().version() == version);
  CHECK((s.rotation_proposal().base_covariance() - cov).norm() == 0.0);
  for (const auto& e : s.output().adaptation_log) CHECK(e.iteration <= cfg.burn_in);
  // columns truncated at the rank step stay at zero
  for (Index r = 0; r < xi.size(); ++r)
    if (xi[r] == 0.0) CHECK(s.state().spectral.xi.col(r).isZero());
}

TEST_CASE("sampling-phase acceptance rates are not degenerate") {
  SamplerConfig cfg = short_config();
  cfg.total_iterations = 1400;
  cfg.burn_in = 800;
  const ChainOutput c = gibbs_run(small_data(1, 11), PriorConfig{}, cfg);
  for (const auto& b : c.acceptance) {
    if (b.sampling_attempts == 0) continue;
    INFO(b.block);
    CHECK(b.sampling_rate() >= 0.05);
    CHECK(b.sampling_rate() <= 0.95);
  }
}

TEST_CASE("joint diagonalizer recovers a common eigenbasis") {
  Rng rng(81);
  const Matrix V = random_orthogonal(5, rng);
  std::vector<Matrix> mats;
  for (int k = 0; k < 4; ++k) {
    const Vector lam = testing::gaussian_matrix(5, 1, rng).col(0);
    mats.push_back(V * lam.asDiagonal() * V.transpose());
  }
  const Matrix W = joint_diagonalizer(mats);
  CHECK((W.transpose() * W - Matrix::Identity(5, 5)).norm() <= 1e-12);
  for (const auto& C : mats) {
    Matrix M = W.transpose() * C * W;
    M.diagonal().setZero();
    CHECK(M.norm() <= 1e-9);
  }
}

TEST_CASE("second-order rotation recovers a mixing rotation") {
  const Index p = 4, T = 20000;
  const double phis[] = {0.9, 0.5, -0.3, 0.0};
  for (double spread : {0.3, 0.08}) {
    Rng rng(82);
    Matrix A = Matrix::Zero(p, p);
    for (Index i = 1; i < p; ++i)
      for (Index j = 0; j < i; ++j) A(i, j) = spread * std_normal(rng);
    A = A - A.transpose().eval();
    const Matrix U = cayley_rotation(A);
    Matrix Z(p, T);
    for (Index j = 0; j < p; ++j) Z.row(j) = simulate_ar1(phis[j], T, rng).transpose();
    const Matrix est = second_order_rotation(U * Z, 5);
    CHECK(est.determinant() == doctest::Approx(1.0));
    // identifiable up to a signed permutation of the columns
    const Matrix M = (U.transpose() * est).cwiseAbs();
    for (Index j = 0; j < p; ++j) CHECK(M.col(j).maxCoeff() >= 0.995);
    // near the identity the alignment picks the true labelling
    if (spread < 0.1) CHECK((est - U).cwiseAbs().maxCoeff() <= 0.05);
  }
}

TEST_CASE("unstandardized draws describe the original series") {
  const Matrix Y = small_data(2, 9) * 7.0;
  Matrix Yw = Y;
  Yw.row(1) *= 0.01;
  Yw.row(3) *= 40.0;
  const Vector s = series_scales(Yw);
  for (Index i = 0; i < Yw.rows(); ++i)
    CHECK(s[i] == doctest::Approx(std::sqrt(Yw.row(i).squaredNorm() / static_cast<double>(Yw.cols()))));
  SamplerConfig cfg = short_config();
  cfg.standardize = false;
  const ChainOutput fitted = gibbs_run(s.cwiseInverse().asDiagonal() * Yw, PriorConfig{}, cfg);
  ChainOutput back = fitted;
  unstandardize(back, s, Yw.cols());
  const LikelihoodContext ctx = LikelihoodContext::from_observations(Yw, fitted.K);
  for (Index k = 0; k < fitted.n_draws(); k += 17) {
    // Omega_Y = S^{-1} Omega_fit S^{-1}
    const Matrix want = s.cwiseInverse().asDiagonal() * fitted.precision(k) * s.cwiseInverse().asDiagonal();
    CHECK((back.precision(k) - want).norm() <= 1e-10 * want.norm());
    const OutTransform tr = back.transform(k);
    const Matrix g = 2.0 * back.theta(k) * ctx.slot_basis();
    const double ll = log_whittle_core(ctx.whittle(), tr.L, tr.d, tr.U, g);
    CHECK(back.draws.log_likelihood[k] == doctest::Approx(ll).epsilon(1e-10));
  }
  // gibbs_run with standardization on is the same composition
  cfg.standardize = true;
  CHECK(serialize_chain(gibbs_run(Yw, PriorConfig{}, cfg)) == serialize_chain(back));
}

TEST_CASE("parallel chains match sequential ones") {
  const Matrix Y = small_data();
  const auto seq = run_chains(Y, PriorConfig{}, short_config(), 3, 1);
  const auto par = run_chains(Y, PriorConfig{}, short_config(), 3, 3);
  for (size_t c = 0; c < 3; ++c) {
    CHECK(seq[c].seed == 5 + c);
    CHECK(serialize_chain(seq[c]) == serialize_chain(par[c]));
  }
}

TEST_CASE("configuration and data are checked up front") {
  const Matrix Y = small_data();
  SamplerConfig c = short_config();
  c.burn_in = c.total_iterations;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c = short_config();
  c.threshold_activation = c.burn_in + 1;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c = short_config();
  c.threshold_activation = c.spectral_only_iterations;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c = short_config();
  c.step_L = 0.0;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c = short_config();
  c.mh_target_high = 1.0;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  CHECK_THROWS_AS(GibbsSampler(Y.leftCols(7), PriorConfig{}, short_config()), InvalidArgument);
  CHECK_THROWS_AS(GibbsSampler(Y.topRows(1), PriorConfig{}, short_config()), InvalidArgument);
  Matrix bad = Y;
  bad(2, 5) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(GibbsSampler(bad, PriorConfig{}, short_config()), InvalidArgument);
}

TEST_CASE("effective sample size of iid and AR(1) traces") {
  Rng rng(83);
  const Index n = 20000;
  const Vector iid = std_normal_vector(n, rng);
  CHECK(effective_sample_size(iid) == doctest::Approx(static_cast<double>(n)).epsilon(0.1));
  const Vector ar = simulate_ar1(0.9, n, rng);
  const double expect = static_cast<double>(n) * 0.1 / 1.9;
  CHECK(effective_sample_size(ar) == doctest::Approx(expect).epsilon(0.25));
}
