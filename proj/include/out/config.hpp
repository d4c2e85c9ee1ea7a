#pragma once

#include "out/forecast.hpp"
#include "out/io.hpp"
#include "out/priors.hpp"
#include "out/sampler.hpp"
#include "out/simulate.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace out {

struct DataConfig {
  std::filesystem::path path;
  Orientation orientation = Orientation::SeriesInColumns;
  bool log_transform = false;
  int diff_order = 0;
};

struct OutputConfig {
  std::filesystem::path dir = "out_run";
  double edge_threshold = 0.1;
  double lower_level = 0.025;
  double upper_level = 0.975;
  Index chains = 2;
  Index workers = 1;
  Index checkpoint_every = 1000;  // iterations; 0 disables checkpoints
  Index spectral_grid = 101;      // frequencies in [0, pi] for the curve CSVs
};

struct SimulateConfig {
  ScenarioSpec scenario;
  Orientation orientation = Orientation::SeriesInColumns;
};

struct BenchmarkConfig {
  BenchmarkGrid grid;
  bool forecast = true;
  ForecastGrid forecast_grid;
};

/// Everything a command needs. Loaded from an INI file with sections
/// [data] [prior] [sampler] [output] [simulate] [benchmark]; any key not listed
/// by config_keys() is an error.
struct RunConfig {
  DataConfig data;
  PriorConfig prior;
  SamplerConfig sampler;
  OutputConfig output;
  SimulateConfig simulate;
  BenchmarkConfig benchmark;
};

/// "section.key" names accepted by the loader and by set_config_value.
std::vector<std::string> config_keys();

/// Assign one value by its "section.key" name; throws InvalidArgument on an
/// unknown key or a value that does not parse.
void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value);

RunConfig parse_run_config(const std::string& ini_text, const std::string& source = "<memory>");
RunConfig load_run_config(const std::filesystem::path& path);

enum class Command { Fit, Simulate, Benchmark };

/// Range and consistency checks for the parts `command` uses. Also checks
/// that the data file exists for fit.
void validate_config(const RunConfig& cfg, Command command);

/// Every field in INI form, sections and keys sorted. Loads back to the same config.
std::string canonical_config(const RunConfig& cfg);

}  // namespace out
