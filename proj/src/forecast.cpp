#include "out/forecast.hpp"

#include "out/params.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>
#include <thread>

namespace out {

namespace {

Index grid_size(Index max_lag) { return std::max<Index>(512, 4 * max_lag); }

double folded(double omega) { return omega > kPi ? 2.0 * kPi - omega : omega; }

}  // namespace

Vector acvf_from_spectrum(const BSplineBasis& basis, const Eigen::Ref<const Vector>& theta_row, Index max_lag) {
  if (max_lag < 0) throw InvalidArgument("acvf_from_spectrum: max_lag must be >= 0");
  if (theta_row.size() != basis.size()) throw InvalidArgument("acvf_from_spectrum: theta length != K");
  const Index Tq = grid_size(max_lag);
  Vector gamma = Vector::Zero(max_lag + 1);
  for (Index k = 0; k < Tq; ++k) {
    const double w = 2.0 * kPi * static_cast<double>(k) / static_cast<double>(Tq);
    const double g = spectral_value(basis, theta_row, folded(w));
    for (Index h = 0; h <= max_lag; ++h) gamma[h] += g * std::cos(static_cast<double>(h) * w);
  }
  return gamma / static_cast<double>(Tq);
}

AcvfTable::AcvfTable(const BSplineBasis& basis, Index max_lag) {
  if (max_lag < 0) throw InvalidArgument("AcvfTable: max_lag must be >= 0");
  const Index Tq = grid_size(max_lag);
  table_ = Matrix::Zero(max_lag + 1, basis.size());
  for (Index k = 0; k < Tq; ++k) {
    const double w = 2.0 * kPi * static_cast<double>(k) / static_cast<double>(Tq);
    // g = 2 sum_k theta_k B*_k(|w| / pi)
    const Vector b = 2.0 * basis.evaluate(folded(w) / kPi);
    for (Index h = 0; h <= max_lag; ++h) table_.row(h) += std::cos(static_cast<double>(h) * w) * b.transpose();
  }
  table_ /= static_cast<double>(Tq);
}

LinearPrediction blp_one_step(const Vector& history, const Vector& gamma) {
  const Index m = std::min<Index>(history.size(), kForecastHistory);
  if (m < 1) throw InvalidArgument("blp_one_step: empty history");
  if (gamma.size() < m + 1) throw InvalidArgument("blp_one_step: autocovariances do not cover the history");
  const Vector x = history.tail(m);

  std::vector<double> phi(static_cast<size_t>(m) + 1, 0.0), prev(static_cast<size_t>(m) + 1, 0.0);
  double v = gamma[0];
  if (!(v > 0.0) || !std::isfinite(v)) throw NumericalError("blp_one_step: nonpositive variance");
  // A (numerically) deterministic component drives v to zero; the order reached
  // by then already predicts it, so the recursion stops there.
  const double floor = 1e-12 * gamma[0];
  for (Index n = 1; n <= m; ++n) {
    double acc = gamma[n];
    for (Index j = 1; j < n; ++j) acc -= prev[static_cast<size_t>(j)] * gamma[n - j];
    const double pnn = acc / v;
    phi[static_cast<size_t>(n)] = pnn;
    for (Index j = 1; j < n; ++j)
      phi[static_cast<size_t>(j)] = prev[static_cast<size_t>(j)] - pnn * prev[static_cast<size_t>(n - j)];
    const double next = v * (1.0 - pnn * pnn);
    if (!std::isfinite(next)) throw NumericalError("blp_one_step: Toeplitz recursion diverged");
    if (next <= floor) break;
    v = next;
    std::swap(phi, prev);
  }
  // prev now holds phi_{m,1..m}; x is oldest first, so x[m - j] is lag j
  LinearPrediction out;
  for (Index j = 1; j <= m; ++j) out.mean += prev[static_cast<size_t>(j)] * x[m - j];
  out.variance = v;
  return out;
}

namespace {

Vector forecast_draw(const Matrix& Y, const OutTransform& transform, const Matrix& theta, const AcvfTable& table) {
  const Matrix Z = latent_from_observed(Y, transform);
  Matrix z_next(Z.rows(), 1);
  for (Index j = 0; j < Z.rows(); ++j)
    z_next(j, 0) = blp_one_step(Z.row(j).transpose(), table.acvf(theta.row(j).transpose())).mean;
  return observed_from_latent(z_next, transform).col(0);
}

void check_chain(const Matrix& Y, const ChainOutput& chain) {
  if (chain.n_draws() < 1) throw InvalidArgument("forecast: chain has no draws");
  if (chain.p != Y.rows()) throw InvalidArgument("forecast: chain dimension does not match data");
  if (Y.cols() < 1) throw InvalidArgument("forecast: no observations");
}

}  // namespace

ForecastResult forecast_one_step(const Matrix& Y, const std::vector<ChainOutput>& chains, bool keep_draws) {
  if (chains.empty()) throw InvalidArgument("forecast: no chains");
  Index total = 0;
  for (const auto& c : chains) {
    check_chain(Y, c);
    if (c.K != chains.front().K) throw InvalidArgument("forecast: chains disagree on K");
    total += c.n_draws();
  }
  const Index p = Y.rows();
  const BSplineBasis basis(chains.front().K);
  const AcvfTable table(basis, std::min<Index>(Y.cols(), kForecastHistory));

  ForecastResult res;
  res.point = Vector::Zero(p);
  if (keep_draws) res.per_draw.resize(total, p);
  Index row = 0;
  for (const auto& c : chains) {
    for (Index k = 0; k < c.n_draws(); ++k, ++row) {
      const Vector f = forecast_draw(Y, c.transform(k), c.theta(k), table);
      res.point += f;
      if (keep_draws) res.per_draw.row(row) = f.transpose();
    }
  }
  res.point /= static_cast<double>(total);
  if (!res.point.allFinite()) throw NumericalError("forecast: non-finite forecast");
  return res;
}

ForecastResult forecast_one_step(const Matrix& Y, const ChainOutput& chain, bool keep_draws) {
  return forecast_one_step(Y, std::vector<ChainOutput>{chain}, keep_draws);
}

Vector oracle_forecast(const Matrix& Y, const OutTransform& transform, const std::vector<Vector>& latent_acvf) {
  if (static_cast<Index>(latent_acvf.size()) != Y.rows()) throw InvalidArgument("oracle_forecast: one ACVF per series");
  const Matrix Z = latent_from_observed(Y, transform);
  Matrix z_next(Z.rows(), 1);
  for (Index j = 0; j < Z.rows(); ++j)
    z_next(j, 0) = blp_one_step(Z.row(j).transpose(), latent_acvf[static_cast<size_t>(j)]).mean;
  return observed_from_latent(z_next, transform).col(0);
}

Vector arma11_acvf(double phi, double theta, double sigma2, Index max_lag) {
  if (!(std::abs(phi) < 1.0)) throw InvalidArgument("arma11_acvf: need |phi| < 1");
  Vector g(max_lag + 1);
  g[0] = sigma2 * (1.0 + 2.0 * phi * theta + theta * theta) / (1.0 - phi * phi);
  if (max_lag >= 1) g[1] = sigma2 * (1.0 + phi * theta) * (phi + theta) / (1.0 - phi * phi);
  for (Index h = 2; h <= max_lag; ++h) g[h] = phi * g[h - 1];
  return g;
}

double score_forecast(ForecastResult& result, const Vector& truth) {
  if (truth.size() != result.point.size()) throw InvalidArgument("score_forecast: length mismatch");
  result.mse = (result.point - truth).squaredNorm() / static_cast<double>(truth.size());
  return result.mse;
}

Vector var1_forecast(const Matrix& Y) {
  if (Y.cols() < 2) throw InvalidArgument("var1_forecast: need at least two observations");
  const Index n = Y.cols() - 1;
  const Matrix X0 = Y.leftCols(n);
  const Matrix X1 = Y.rightCols(n);
  Matrix gram = X0 * X0.transpose();
  gram.diagonal().array() += 1e-8;
  const Matrix phi = (X1 * X0.transpose()) * gram.inverse();
  return phi * Y.col(Y.cols() - 1);
}

Vector true_model_forecast(const Matrix& Y, const SimulatedData& data, int setting) {
  if (setting == 3) return data.var.phi * Y.col(Y.cols() - 1);
  const Index p = Y.rows();
  const Index lags = std::min<Index>(Y.cols(), kForecastHistory);
  std::vector<Vector> acvf;
  for (Index j = 0; j < p; ++j) {
    if (setting == 1) {
      const double phi = std::exp(-1.0 / data.latent_params[j]);
      Vector g(lags + 1);
      for (Index h = 0; h <= lags; ++h) g[h] = std::pow(phi, static_cast<double>(h));
      acvf.push_back(g);
    } else {
      const double phi = data.latent_params[2 * j];
      const double theta = data.latent_params[2 * j + 1];
      acvf.push_back(arma11_acvf(phi, theta, arma11_innovation_variance(phi, theta), lags));
    }
  }
  const CholeskyFactor f = modified_cholesky(data.omega);
  return oracle_forecast(Y, OutTransform{f.L, f.d, data.U}, acvf);
}

ForecastBenchmark run_forecast_benchmark(const ForecastGrid& grid, const PriorConfig& prior,
                                         const SamplerConfig& sampler) {
  if (grid.replicates < 0) throw InvalidArgument("forecast benchmark: replicates must be >= 0");
  if (grid.T < 8) throw InvalidArgument("forecast benchmark: T must be >= 8");
  prior.validate();
  sampler.validate();
  ForecastBenchmark res;
  res.grid = grid;
  for (Index r = 0; r < grid.replicates; ++r) {
    ForecastReplicate fr;
    fr.replicate = r;
    fr.seed = grid.base_seed + static_cast<std::uint64_t>(r);
    res.replicates.push_back(fr);
  }

  auto work = [&](ForecastReplicate& fr) {
    try {
      ScenarioSpec spec;
      spec.p = grid.p;
      spec.T = grid.T + 1;
      spec.setting = grid.setting;
      spec.seed = fr.seed;
      const SimulatedData data = generate(spec);
      const Matrix Y = data.Y.leftCols(grid.T);
      const Vector truth = data.Y.col(grid.T);
      SamplerConfig cfg = sampler;
      cfg.seed = fr.seed;
      ForecastResult f = forecast_one_step(Y, gibbs_run(Y, prior, cfg));
      fr.out_mse = score_forecast(f, truth);
      const double p = static_cast<double>(grid.p);
      fr.oracle_mse = (true_model_forecast(Y, data, grid.setting) - truth).squaredNorm() / p;
      fr.var1_mse = (var1_forecast(Y) - truth).squaredNorm() / p;
      fr.ok = true;
    } catch (const std::exception& e) {
      fr.ok = false;
      fr.error = e.what();
      fr.out_mse = fr.oracle_mse = fr.var1_mse = std::nan("");
    }
  };
  std::atomic<size_t> next{0};
  auto worker = [&]() {
    for (size_t k = next++; k < res.replicates.size(); k = next++) work(res.replicates[k]);
  };
  const Index n_workers = std::max<Index>(1, grid.n_workers);
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (Index w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& fr : res.replicates) {
    if (!fr.ok) continue;
    ++res.n_ok;
    res.out_mse += fr.out_mse;
    res.oracle_mse += fr.oracle_mse;
    res.var1_mse += fr.var1_mse;
  }
  const double n = res.n_ok ? static_cast<double>(res.n_ok) : std::nan("");
  res.out_mse /= n;
  res.oracle_mse /= n;
  res.var1_mse /= n;
  return res;
}

std::string forecast_table_csv(const std::vector<ForecastBenchmark>& runs) {
  std::ostringstream os;
  os << "setting,p,T,replicates,n_ok,OUT,oracle,VAR1\n";
  for (const auto& r : runs) {
    os << r.grid.setting << "," << r.grid.p << "," << r.grid.T << "," << r.grid.replicates << "," << r.n_ok << ","
       << format_real(r.out_mse) << "," << format_real(r.oracle_mse) << "," << format_real(r.var1_mse) << "\n";
  }
  return os.str();
}

std::string forecast_replicates_csv(const ForecastBenchmark& run) {
  std::ostringstream os;
  os << "replicate,seed,status,out_mse,oracle_mse,var1_mse,error\n";
  for (const auto& r : run.replicates) {
    std::string err = r.error;
    std::replace(err.begin(), err.end(), ',', ';');
    std::replace(err.begin(), err.end(), '\n', ' ');
    os << r.replicate << "," << r.seed << "," << (r.ok ? "ok" : "failed") << "," << format_real(r.out_mse) << ","
       << format_real(r.oracle_mse) << "," << format_real(r.var1_mse) << "," << err << "\n";
  }
  return os.str();
}

}  // namespace out
