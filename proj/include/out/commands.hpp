#pragma once

#include "out/config.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace out {

/// Thrown for problems found before any artifact is written (exit code 2).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitRuntime = 3;

struct FitOptions {
  bool resume = false;
  bool quiet = false;
  /// Stop every chain at this iteration and keep its checkpoint so a later
  /// resume can finish the run. 0 runs to completion.
  Index stop_at = 0;
};

/// Fit artifacts, relative to the output directory:
///   chains/chain_<c>.bin            columnar draws per chain
///   summary/precision_{mean,lower,upper}.csv, summary/partial_correlation.csv
///   graph/edges.csv, graph/graph.dot
///   forecast.csv                    one-step forecast aligned with series names
///   diagnostics/{acceptance,adaptation,traces}.csv
///   spectral/spectral_curves.csv    posterior mean and bands of each latent spectrum
///   manifest.json
/// Checkpoints live in checkpoints/ while a run is in progress.
struct FitArtifacts {
  std::vector<std::filesystem::path> files;  // relative paths, in write order
  bool paused = false;                         // stopped early by FitOptions::stop_at
};

/// All commands validate `cfg` (and for fit, the data) before touching the
/// output directory. ValidationError / InvalidArgument before side effects,
/// anything else afterwards.
FitArtifacts cmd_fit(const RunConfig& cfg, const FitOptions& opts = {});
std::vector<std::filesystem::path> cmd_simulate(const RunConfig& cfg);
std::vector<std::filesystem::path> cmd_benchmark(const RunConfig& cfg, bool quiet = false);

/// Reads the data file named by cfg.data and applies the preprocessing flags.
Dataset load_dataset(const RunConfig& cfg);

/// Posterior mean and pointwise bands of g on `n_grid` frequencies in [0, pi].
/// Columns: omega, then <name>_mean, <name>_lower, <name>_upper per series.
std::string spectral_curves_csv(const std::vector<ChainOutput>& chains, const std::vector<std::string>& names,
                                Index n_grid, double lower_level, double upper_level);

/// {"status":"error","kind":...,"message":...}
std::string error_report_json(const std::string& kind, const std::string& message);

}  // namespace out
