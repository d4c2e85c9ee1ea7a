#pragma once

#include "out/chain.hpp"
#include "out/core.hpp"
#include "out/simulate.hpp"
#include "out/spectral.hpp"

#include <limits>
#include <vector>

namespace out {

struct ForecastResult {
  Vector point;        // posterior-mean forecast of Y_{T+1}
  Matrix per_draw;     // n_draws x p, empty unless requested
  double mse = std::numeric_limits<double>::quiet_NaN();  // set by score_forecast
};

/// gamma(h) = (1/Tq) sum_k g(w_k) cos(h w_k) on w_k = 2 pi k / Tq, Tq = max(512, 4 max_lag).
Vector acvf_from_spectrum(const BSplineBasis& basis, const Eigen::Ref<const Vector>& theta_row, Index max_lag);

/// The same quadrature precomputed per basis function, so gamma = table * theta.
class AcvfTable {
 public:
  AcvfTable(const BSplineBasis& basis, Index max_lag);
  Index max_lag() const { return table_.rows() - 1; }
  Vector acvf(const Eigen::Ref<const Vector>& theta_row) const { return table_ * theta_row; }

 private:
  Matrix table_;  // (max_lag + 1) x K
};

struct LinearPrediction {
  double mean = 0.0;
  double variance = 0.0;
};

/// Best linear predictor of the next value from the last min(n, 200) entries of
/// `history` (oldest first), by Durbin-Levinson on gamma with 1e-8 added to gamma(0).
/// gamma must cover lags 0..min(n, 200).
LinearPrediction blp_one_step(const Vector& history, const Vector& gamma);

inline constexpr Index kForecastHistory = 200;

/// Per draw: latents of Y, one-step BLP per latent series from that draw's
/// spectrum, mapped back to the observed scale. The point forecast averages
/// over draws.
ForecastResult forecast_one_step(const Matrix& Y, const ChainOutput& chain, bool keep_draws = false);
ForecastResult forecast_one_step(const Matrix& Y, const std::vector<ChainOutput>& chains, bool keep_draws = false);

/// Forecast from a known transform and known latent autocovariances (one vector per series).
Vector oracle_forecast(const Matrix& Y, const OutTransform& transform, const std::vector<Vector>& latent_acvf);

/// ARMA(1,1) autocovariances gamma(0..max_lag) for innovation variance sigma2.
Vector arma11_acvf(double phi, double theta, double sigma2, Index max_lag);

/// Mean squared error over series.
double score_forecast(ForecastResult& result, const Vector& truth);

/// Least-squares VAR(1) one-step forecast (no intercept, ridge 1e-8 on the Gram matrix).
Vector var1_forecast(const Matrix& Y);

/// Forecast from the data-generating process: latent BLP from the true latent
/// autocovariances (settings 1 and 2) or Phi y_T (setting 3).
Vector true_model_forecast(const Matrix& Y, const SimulatedData& data, int setting);

/// Held-out one-step comparison: each replicate simulates T + 1 points, fits on
/// the first T and forecasts the last.
struct ForecastGrid {
  Index p = 10;
  Index T = 100;
  int setting = 2;
  Index replicates = 10;
  std::uint64_t base_seed = 900;
  Index n_workers = 1;
};

struct ForecastReplicate {
  Index replicate = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  double out_mse = 0.0;
  double oracle_mse = 0.0;
  double var1_mse = 0.0;
};

struct ForecastBenchmark {
  ForecastGrid grid;
  std::vector<ForecastReplicate> replicates;
  Index n_ok = 0;
  double out_mse = 0.0;  // means over successful replicates
  double oracle_mse = 0.0;
  double var1_mse = 0.0;
};

ForecastBenchmark run_forecast_benchmark(const ForecastGrid& grid, const PriorConfig& prior,
                                         const SamplerConfig& sampler);
/// One row per grid: size, estimator columns (OUT, oracle, VAR(1)).
std::string forecast_table_csv(const std::vector<ForecastBenchmark>& runs);
std::string forecast_replicates_csv(const ForecastBenchmark& run);

}  // namespace out
