// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
//
//   acceptance [--only 1,2,...] [--workers N] [--scratch DIR]
//
// Criteria 5 and 6 share one benchmark run (about five minutes on one core).

#include "helpers.hpp"
#include "oracles.hpp"
#include "out/commands.hpp"

#include <boost/math/distributions/beta.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <thread>
#include <unistd.h>

using namespace out;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double x, int digits = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, x);
  return buf;
}

Index g_workers = 1;
fs::path g_scratch;

// 1. Parameterizations.
Outcome criterion1() {
  Rng rng(101);
  double orth = 0.0, det = 0.0;
  for (int rep = 0; rep < 1000; ++rep) {
    const Index p = 2 + rep % 19;
    const Matrix U = cayley_rotation(unpack_skew(std_normal_vector(packed_size(p), rng), p));
    orth = std::max(orth, (U * U.transpose() - Matrix::Identity(p, p)).norm());
    det = std::max(det, std::abs(U.determinant() - 1.0));
  }
  double round_trip = 0.0;
  for (Index p : {2, 5, 10, 20}) {
    const ModelState s = testing::random_state(p, 10, 3, rng);
    const Matrix Y = testing::gaussian_matrix(p, 40, rng);
    round_trip = std::max(round_trip, (observed_from_latent(latent_from_observed(Y, s), s) - Y).norm() / Y.norm());
  }
  double row_sum = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    SpectralCoeffs c(8, 10, 4);
    c.xi = testing::gaussian_matrix(8, 4, rng, 3.0);
    c.eta = testing::gaussian_matrix(10, 4, rng, 3.0);
    row_sum = std::max(row_sum, (theta_from_lowrank(c).rowwise().sum().array() - 0.5).abs().maxCoeff());
  }
  double whittle = 0.0;
  for (Index T : {4, 5, 64, 101}) {
    const Matrix F = whittle_matrix(T);
    whittle = std::max(whittle, (F * F.transpose() - Matrix::Identity(T, T)).cwiseAbs().maxCoeff());
  }
  return {orth <= 1e-10 && det <= 1e-10 && round_trip <= 1e-10 && row_sum <= 1e-15 && whittle <= 1e-10,
          "max |UU'-I|_F " + fmt(orth) + ", |det U - 1| " + fmt(det) + ", round trip " + fmt(round_trip) +
              ", |row sum - 1/2| " + fmt(row_sum) + ", Whittle " + fmt(whittle)};
}

// 2. Likelihood fidelity.
Outcome criterion2() {
  Rng rng(102);
  double dense = 0.0;
  for (Index p : {2, 3, 4})
    for (Index T : {5, 8, 16}) {
      const ModelState s = testing::random_state(p, 6, 3, rng);
      const Matrix Y = testing::gaussian_matrix(p, T, rng);
      const OutTransform tr = OutTransform::from_state(s);
      const double want = oracle::dense_whittle(Y, tr.L, tr.d, tr.U, oracle::theta(s.spectral.xi, s.spectral.eta), 6);
      dense = std::max(dense, std::abs(log_whittle(s, LikelihoodContext::from_observations(Y, 6)) - want));
    }
  double grad = 0.0;
  for (Index p : {2, 5})
    for (Index T : {8, 33}) {
      const ModelState s = testing::random_state(p, 6, 3, rng, 0.05);
      const auto ctx = LikelihoodContext::from_observations(testing::gaussian_matrix(p, T, rng), 6, 1e-3);
      for (Block b : {Block::LRaw, Block::LogD, Block::Xi, Block::Eta, Block::ARaw}) {
        const Vector g = grad_log_whittle(s, ctx, b);
        for (Index k = 0; k < g.size(); ++k) {
          auto at = [&](double h) {
            ModelState t = s;
            switch (b) {
              case Block::LRaw: t.l_raw[k] += h; break;
              case Block::LogD: t.log_d[k] += h; break;
              case Block::Xi: t.spectral.xi.data()[k] += h; break;
              case Block::Eta: t.spectral.eta.data()[k] += h; break;
              case Block::ARaw: t.a_raw[k] += h; break;
            }
            return log_whittle(t, ctx, Thresholding::Smoothed);
          };
          const double fd = (at(1e-5) - at(-1e-5)) / 2e-5;
          grad = std::max(grad, std::abs(fd - g[k]) / std::max(1.0, std::abs(fd)));
        }
      }
    }
  double gap = 0.0;
  const double phi = 0.5;
  const Index T = 256;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    Rng r(seed);
    const Vector y = simulate_ar1(phi, T, r);
    Vector gamma(T);
    for (Index h = 0; h < T; ++h) gamma[h] = std::pow(phi, static_cast<double>(h));
    const WhittleData w = whittle_transform(y.transpose());
    Matrix g(1, w.n_slots());
    for (Index s = 0; s < w.n_slots(); ++s)
      g(0, s) = (1 - phi * phi) / (1 - 2 * phi * std::cos(w.omegas[s]) + phi * phi);
    const double wl = log_whittle_core(w, Matrix::Zero(1, 1), Vector::Ones(1), Matrix::Identity(1, 1), g);
    gap = std::max(gap, std::abs(wl - oracle::exact_gaussian_loglik(y, gamma)) / static_cast<double>(T));
  }
  return {dense <= 1e-8 && grad <= 1e-5 && gap <= 0.02, "dense oracle " + fmt(dense) + ", gradient rel. error " +
                                                             fmt(grad) + ", Whittle-exact gap/obs " + fmt(gap)};
}

// 3. Kernels on toy targets and prior pushforwards.
struct TraceCheck {
  bool ok = true;
  double worst_z = 0.0, worst_p = 1.0;
  void add(std::vector<double> xs, double mean, const std::function<double(double)>& cdf, size_t thin) {
    double m = 0.0;
    for (double v : xs) m += v;
    m /= static_cast<double>(xs.size());
    const double z = std::abs(m - mean) / oracle::mc_standard_error(xs);
    std::vector<double> t;
    for (size_t i = 0; i < xs.size(); i += thin) t.push_back(xs[i]);
    const double p = oracle::ks_pvalue(t, cdf);
    worst_z = std::max(worst_z, z);
    worst_p = std::min(worst_p, p);
    ok = ok && z <= 3.0 && p > 0.01;
  }
};

Outcome criterion3() {
  const Vector mu = (Vector(2) << 1.0, -2.0).finished();
  const Matrix cov = (Matrix(2, 2) << 1.0, 0.6, 0.6, 2.0).finished();
  const Matrix prec = cov.inverse();
  auto target = [&](const Vector& x) -> std::pair<double, Vector> {
    const Vector r = x - mu;
    return {-0.5 * r.dot(prec * r), -prec * r};
  };
  auto gauss_cdf = [&](Index c) {
    return [&, c](double x) { return oracle::normal_cdf((x - mu[c]) / std::sqrt(cov(c, c))); };
  };
  TraceCheck tc;

  Rng rng(103);
  DensityPoint cur;
  cur.x = Vector::Zero(2);
  std::tie(cur.log_density, cur.grad) = target(cur.x);
  std::vector<double> m0, m1;
  for (int i = 0; i < 60000; ++i) {
    mala_step(cur, target, 0.9, rng);
    if (i >= 1000) m0.push_back(cur.x[0]), m1.push_back(cur.x[1]);
  }
  tc.add(m0, mu[0], gauss_cdf(0), 20);
  tc.add(m1, mu[1], gauss_cdf(1), 20);

  AdaptiveProposal prop(2, 0.5, 100);
  Vector x = Vector::Zero(2);
  double ld = target(x).first;
  std::vector<double> a0, a1;
  for (int i = 0; i < 100000; ++i) {
    adaptive_mh_step(x, ld, [&](const Vector& v) { return target(v).first; }, prop, rng);
    prop.record(x);
    if (i >= 2000) a0.push_back(x[0]), a1.push_back(x[1]);
  }
  tc.add(a0, mu[0], gauss_cdf(0), 40);
  tc.add(a1, mu[1], gauss_cdf(1), 40);

  auto beta_target = [](double v) { return std::log(v) + 4.0 * std::log1p(-v); };
  double v = 0.3, lt = beta_target(v);
  std::vector<double> bs;
  for (int i = 0; i < 100000; ++i) {
    rwmh_log_scale(v, lt, beta_target, 0.0, 1.0, 0.8, rng);
    if (i >= 1000) bs.push_back(v);
  }
  const boost::math::beta_distribution<double> beta(2.0, 5.0);
  tc.add(bs, 2.0 / 7.0, [&](double q) { return boost::math::cdf(beta, q); }, 25);

  PriorConfig prior;
  double zeros = 0.0, expected = 0.0, total = 0.0;
  for (int rep = 0; rep < 2000; ++rep) {
    const ModelState s = sample_prior(prior, 10, rng);
    const Vector l = effective_L(s.l_raw, s.thresholds.lambda);
    const double lam = s.thresholds.lambda / prior.sigma_T;
    zeros += static_cast<double>((l.array() == 0.0).count());
    expected += static_cast<double>(l.size()) * (oracle::normal_cdf(lam) - oracle::normal_cdf(-lam));
    total += static_cast<double>(l.size());
  }
  const double zero_gap = std::abs(zeros - expected) / total;
  double tau = 0.0;
  for (int rep = 0; rep < 100000; ++rep) tau += sample_prior(prior, 2, rng).shrinkage.tau()[2];
  tau /= 100000.0;
  return {tc.ok && zero_gap <= 0.01 && std::abs(tau - 20.181) <= 0.5,
          "kernels: worst |mean err|/se " + fmt(tc.worst_z) + ", min KS p " + fmt(tc.worst_p) +
              "; zero-fraction gap " + fmt(zero_gap) + "; E[tau_3] " + fmt(tau, 5)};
}

// 4. Algorithm 1.
Outcome criterion4() {
  double resid = 0.0, radius = 0.0;
  for (Index p : {5, 10})
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      Rng rng(4000 + seed + static_cast<std::uint64_t>(p) * 131);
      const Matrix omega = gen_sparse_precision(p, 0.1, rng).omega;
      const VarSystem sys = algorithm1_var(omega, rng);
      const Matrix gamma = omega.inverse();
      resid = std::max(resid, (gamma - sys.phi * gamma * sys.phi.transpose() - sys.sigma_e).norm() / gamma.norm());
      radius = std::max(radius, spectral_radius(sys.phi));
    }
  return {radius < 1.0 && resid <= 1e-8,
          "100 instances: max spectral radius " + fmt(radius, 4) + ", max relative Lyapunov residual " + fmt(resid)};
}

// 5 and 6 share the benchmark.
BenchmarkResult g_bench;
double g_bench_seconds = -1.0;

void ensure_benchmark() {
  if (g_bench_seconds >= 0.0) return;
  BenchmarkGrid grid;  // p = 20, T in {40, 100}, 5%, 10 replicates, settings 1-3, seed 2024
  grid.n_workers = g_workers;
  const auto t0 = std::chrono::steady_clock::now();
  g_bench = run_benchmark(grid, PriorConfig{}, SamplerConfig{});
  g_bench_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::cout << benchmark_table_csv(g_bench);
}

Outcome criterion5() {
  ensure_benchmark();
  Index wins = 0, failed = 0;
  for (const auto& c : g_bench.cells) {
    wins += c.n_ok > 0 && c.out_mse < c.baseline_mse ? 1 : 0;
    failed += c.n_failed;
  }
  const Index cells = static_cast<Index>(g_bench.cells.size());
  const bool pass = cells == 6 && failed == 0 && static_cast<double>(wins) >= 0.8 * static_cast<double>(cells) &&
                    g_bench_seconds <= 1800.0;
  return {pass, "OUT beats baseline in " + std::to_string(wins) + "/" + std::to_string(cells) + " cells, " +
                    std::to_string(failed) + " failed replicates, " + fmt(g_bench_seconds / 60.0) + " min on " +
                    std::to_string(g_workers) + " worker(s)"};
}

Outcome criterion6() {
  ensure_benchmark();
  for (const auto& c : g_bench.cells)
    if (c.setting == 1 && c.T == 100)
      return {c.out_mcc >= 0.5, "setting 1, T = 100: mean MCC " + fmt(c.out_mcc) + " (floor 0.5; baseline " +
                                    fmt(c.baseline_mcc) + ")"};
  return {false, "setting-1 T = 100 cell missing"};
}

// 7. Forecast sanity.
Outcome criterion7() {
  ForecastGrid grid;  // p = 10, T = 100, setting 2, 10 replicates
  grid.n_workers = g_workers;
  const ForecastBenchmark fb = run_forecast_benchmark(grid, PriorConfig{}, SamplerConfig{});
  const double ratio = fb.out_mse / fb.oracle_mse;
  return {fb.n_ok == grid.replicates && ratio <= 1.2,
          "MSE OUT " + fmt(fb.out_mse) + ", oracle " + fmt(fb.oracle_mse) + ", VAR(1) " + fmt(fb.var1_mse) +
              "; OUT/oracle " + fmt(ratio) + " (limit 1.2), " + std::to_string(fb.n_ok) + " replicates"};
}

// 8. Determinism of stored artifacts.
Outcome criterion8() {
  const fs::path root = g_scratch / "determinism";
  fs::remove_all(root);
  RunConfig sim;
  sim.simulate.scenario.p = 10;
  sim.simulate.scenario.T = 100;
  sim.simulate.scenario.seed = 808;
  sim.output.dir = root / "sim";
  cmd_simulate(sim);
  RunConfig cfg;
  cfg.data.path = root / "sim" / "data.csv";
  cfg.output.workers = g_workers;
  for (const char* run : {"a", "b"}) {
    cfg.output.dir = root / run;
    cmd_fit(cfg, FitOptions{false, true});
  }
  Index compared = 0, differ = 0;
  for (const auto& entry : fs::recursive_directory_iterator(root / "a")) {
    const fs::path rel = fs::relative(entry.path(), root / "a");
    const std::string ext = rel.extension().string();
    if (!entry.is_regular_file() || (ext != ".bin" && ext != ".csv")) continue;
    ++compared;
    differ += read_text_file(entry.path()) == read_text_file(root / "b" / rel) ? 0 : 1;
  }
  fs::remove_all(root);
  return {compared >= 10 && differ == 0, std::to_string(compared) + " chain and summary files compared, " +
                                             std::to_string(differ) + " differ"};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  g_workers = std::max<Index>(1, static_cast<Index>(std::thread::hardware_concurrency()));
  g_scratch = fs::temp_directory_path() / ("out_acceptance_" + std::to_string(::getpid()));
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--only" && i + 1 < argc) {
      std::stringstream ss(argv[++i]);
      std::string tok;
      while (std::getline(ss, tok, ',')) only.insert(std::stoi(tok));
    } else if (a == "--workers" && i + 1 < argc) {
      g_workers = std::stol(argv[++i]);
    } else if (a == "--scratch" && i + 1 < argc) {
      g_scratch = argv[++i];
    } else {
      std::cerr << "usage: acceptance [--only 1,2,...] [--workers N] [--scratch DIR]\n";
      return 2;
    }
  }
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"parameterizations", criterion1}, {"likelihood fidelity", criterion2}, {"priors and kernels", criterion3},
      {"Algorithm 1", criterion4},       {"estimation benchmark", criterion5}, {"graph recovery", criterion6},
      {"forecast sanity", criterion7},   {"determinism", criterion8}};
  bool all = true;
  std::vector<std::string> lines;
  for (size_t k = 0; k < criteria.size(); ++k) {
    const int n = static_cast<int>(k) + 1;
    if (!only.empty() && !only.count(n)) continue;
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    all = all && o.pass;
    lines.push_back("Criterion " + std::to_string(n) + ": " + (o.pass ? "PASS" : "FAIL") + " " + criteria[k].first +
                    " (" + o.detail + ")");
    std::cout << lines.back() << std::endl;
  }
  fs::remove_all(g_scratch);
  std::cout << "\nSummary\n";
  for (const auto& l : lines) std::cout << l << "\n";
  return all ? 0 : 1;
}
