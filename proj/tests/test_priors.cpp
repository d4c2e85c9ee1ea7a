#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"
#include "out/priors.hpp"

#include <boost/math/distributions/gamma.hpp>

using namespace out;

TEST_CASE("hard-threshold pushforward zero fraction") {
  PriorConfig cfg;
  Rng rng(31);
  double zeros = 0.0, expected = 0.0, total = 0.0;
  for (int rep = 0; rep < 2000; ++rep) {
    const ModelState s = sample_prior(cfg, 10, rng);
    const Vector l = effective_L(s.l_raw, s.thresholds.lambda);
    const double lam = s.thresholds.lambda / cfg.sigma_T;
    zeros += static_cast<double>((l.array() == 0.0).count());
    expected += static_cast<double>(l.size()) * (oracle::normal_cdf(lam) - oracle::normal_cdf(-lam));
    total += static_cast<double>(l.size());
  }
  CHECK(std::abs(zeros / total - expected / total) <= 0.01);
}

TEST_CASE("zero fraction at a fixed threshold") {
  PriorConfig cfg;
  Rng rng(32);
  for (double lam : {0.05, 0.1, 0.25}) {
    Index zeros = 0, n = 0;
    for (int rep = 0; rep < 400; ++rep) {
      const ModelState s = sample_prior(cfg, 12, rng);
      const Vector l = effective_L(s.l_raw, lam);
      zeros += (l.array() == 0.0).count();
      n += l.size();
    }
    const double want = oracle::normal_cdf(lam / cfg.sigma_T) - oracle::normal_cdf(-lam / cfg.sigma_T);
    CHECK(std::abs(static_cast<double>(zeros) / static_cast<double>(n) - want) <= 0.01);
  }
}

TEST_CASE("E[tau_3] = kappa1 * kappa2^2 = 20.181") {
  PriorConfig cfg;
  CHECK(cfg.kappa1 * cfg.kappa2 * cfg.kappa2 == doctest::Approx(20.181));
  Rng rng(33);
  double sum = 0.0;
  const int n = 100000;
  for (int rep = 0; rep < n; ++rep) sum += sample_prior(cfg, 2, rng).shrinkage.tau()[2];
  CHECK(std::abs(sum / n - 20.181) <= 0.5);
}

TEST_CASE("inverse-Gaussian prior density integrates to one and sampler matches its CDF") {
  for (double loc : {0.5, 1.0, 3.0}) {
    Vector d(1);
    const double mass = oracle::simpson(
        [&](double t) {
          if (t <= 0.0) return 0.0;
          d[0] = t;
          return std::exp(logprior_d(d, loc));
        },
        0.0, 40.0 * loc + 40.0, 200000);
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-4));

    Rng rng(34);
    std::vector<double> xs;
    for (int i = 0; i < 4000; ++i) xs.push_back(sample_inverse_gaussian(loc, loc * loc, rng));
    const double lam = loc * loc;
    auto cdf = [&](double x) {
      const double a = std::sqrt(lam / x);
      return oracle::normal_cdf(a * (x / loc - 1.0)) + std::exp(2.0 * lam / loc) * oracle::normal_cdf(-a * (x / loc + 1.0));
    };
    CHECK(oracle::ks_pvalue(xs, cdf) > 0.01);
  }
}

TEST_CASE("half-normal location hyperprior integrates to one") {
  const double mass =
      oracle::simpson([](double t) { return t <= 0.0 ? 0.0 : std::exp(logprior_ig_location(t, 10.0)); }, 1e-12, 100.0, 20000);
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(logprior_ig_location(-1.0, 10.0) == -std::numeric_limits<double>::infinity());
}

TEST_CASE("threshold prior is uniform on [lambda_L, lambda_U]") {
  PriorConfig cfg;
  CHECK(logprior_threshold(0.1, cfg) == doctest::Approx(-std::log(cfg.lambda_U - cfg.lambda_L)));
  CHECK(logprior_threshold(cfg.lambda_U + 0.01, cfg) == -std::numeric_limits<double>::infinity());
  CHECK(logprior_threshold(-0.01, cfg) == -std::numeric_limits<double>::infinity());
}

TEST_CASE("second-difference penalty has the (1, -2, 1) null space") {
  const auto pen = second_difference_penalty(8);
  Vector lin(8);
  for (Index k = 0; k < 8; ++k) lin[k] = 2.0 + 0.5 * static_cast<double>(k);
  CHECK((pen.P * Vector::Ones(8)).norm() <= 1e-12);
  CHECK((pen.P * lin).norm() <= 1e-12);
  const Eigen::SelfAdjointEigenSolver<Matrix> es(pen.P);
  double logdet = 0.0;
  for (Index k = 2; k < 8; ++k) logdet += std::log(es.eigenvalues()[k]);
  CHECK(pen.log_pseudo_det == doctest::Approx(logdet));
}

TEST_CASE("prior gradients match finite differences") {
  PriorConfig cfg;
  Rng rng(35);
  const Vector l = 0.2 * std_normal_vector(6, rng);
  const Vector g = grad_logprior_L(l, cfg);
  const Vector logd = 0.3 * std_normal_vector(4, rng);
  const Vector gd = grad_logprior_log_d(logd, 1.3);
  const double h = 1e-6;
  for (Index k = 0; k < 6; ++k) {
    Vector a = l, b = l;
    a[k] += h;
    b[k] -= h;
    CHECK(g[k] == doctest::Approx((logprior_L(a, 0.0, cfg) - logprior_L(b, 0.0, cfg)) / (2 * h)).epsilon(1e-6));
  }
  for (Index k = 0; k < 4; ++k) {
    Vector a = logd, b = logd;
    a[k] += h;
    b[k] -= h;
    CHECK(gd[k] == doctest::Approx((logprior_log_d(a, 1.3) - logprior_log_d(b, 1.3)) / (2 * h)).epsilon(1e-6));
  }
}

TEST_CASE("every prior draw has a finite log density") {
  PriorConfig cfg;
  Rng rng(36);
  int finite = 0;
  const int n = 10000;
  for (int rep = 0; rep < n; ++rep) {
    const ModelState s = sample_prior(cfg, 3, rng);
    const double lp = logprior_L(s.l_raw, s.thresholds.lambda, cfg) + logprior_A(s.a_raw, s.thresholds.lambda_prime, cfg) +
                      logprior_threshold(s.thresholds.lambda, cfg) + logprior_threshold(s.thresholds.lambda_prime, cfg) +
                      logprior_d(s.d(), s.ig_location) + logprior_ig_location(s.ig_location, cfg.sigma_d) +
                      logprior_spectral(s.spectral.xi, s.spectral.eta, s.shrinkage.v, s.shrinkage.delta,
                                        s.shrinkage.sigma_kappa, cfg);
    finite += std::isfinite(lp) ? 1 : 0;
  }
  CHECK(finite == n);
}

TEST_CASE("gamma draws follow Gamma(shape, rate)") {
  Rng rng(37);
  std::vector<double> xs;
  for (int i = 0; i < 4000; ++i) xs.push_back(gamma_draw(3.1, 1.0, rng));
  const boost::math::gamma_distribution<double> dist(3.1, 1.0);
  CHECK(oracle::ks_pvalue(xs, [&](double x) { return boost::math::cdf(dist, x); }) > 0.01);
}

TEST_CASE("config validation") {
  PriorConfig cfg;
  cfg.sigma_T = -1.0;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  cfg = PriorConfig{};
  cfg.lambda_U = 0.0;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  cfg = PriorConfig{};
  cfg.K = 3;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
}
