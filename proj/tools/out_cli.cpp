// out: fit, simulate and benchmark the OUT model from the command line.
//
//   out fit --config run.ini [--data y.csv] [--out dir] [--stop-at N] [--resume]
//   out simulate --config run.ini [--setting 2] [--out dir]
//   out benchmark --config run.ini [--replicates 10] [--workers 4]
//
// Any config key can be overridden with --set section.key=value.
// Exit codes: 0 success, 2 validation error, 3 runtime failure.

#include "out/commands.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>

namespace {

using out::Index;

struct Overrides {
  std::string config_path;
  std::vector<std::string> sets;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  // fit
  std::optional<std::string> data;
  std::optional<std::string> orientation;
  std::optional<Index> chains;
  std::optional<Index> workers;
  std::optional<double> edge_threshold;
  std::optional<Index> iterations;
  std::optional<Index> burn_in;
  bool log_transform = false;
  std::optional<int> diff_order;
  // simulate
  std::optional<int> setting;
  std::optional<Index> p;
  std::optional<Index> T;
  // benchmark
  std::optional<Index> replicates;
};

out::RunConfig build_config(const Overrides& o, out::Command command) {
  out::RunConfig cfg = o.config_path.empty() ? out::RunConfig{} : out::load_run_config(o.config_path);
  for (const auto& kv : o.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw out::InvalidArgument("--set expects section.key=value, got '" + kv + "'");
    out::set_config_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (o.out_dir) cfg.output.dir = *o.out_dir;
  if (o.seed) {
    cfg.sampler.seed = *o.seed;
    if (command == out::Command::Simulate) cfg.simulate.scenario.seed = *o.seed;
    if (command == out::Command::Benchmark) cfg.benchmark.grid.base_seed = *o.seed;
  }
  if (o.data) cfg.data.path = *o.data;
  if (o.orientation) {
    const auto orient = out::parse_orientation(*o.orientation);
    cfg.data.orientation = orient;
    cfg.simulate.orientation = orient;
  }
  if (o.chains) cfg.output.chains = *o.chains;
  if (o.workers) {
    cfg.output.workers = *o.workers;
    cfg.benchmark.grid.n_workers = *o.workers;
  }
  if (o.edge_threshold) {
    cfg.output.edge_threshold = *o.edge_threshold;
    cfg.benchmark.grid.edge_threshold = *o.edge_threshold;
  }
  if (o.iterations) cfg.sampler.total_iterations = *o.iterations;
  if (o.burn_in) cfg.sampler.burn_in = *o.burn_in;
  if (o.log_transform) cfg.data.log_transform = true;
  if (o.diff_order) cfg.data.diff_order = *o.diff_order;
  if (o.setting) cfg.simulate.scenario.setting = *o.setting;
  if (o.p) cfg.simulate.scenario.p = *o.p;
  if (o.T) cfg.simulate.scenario.T = *o.T;
  if (o.replicates) cfg.benchmark.grid.replicates = *o.replicates;
  return cfg;
}

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("-c,--config", o.config_path, "INI run config")->check(CLI::ExistingFile);
  cmd->add_option("--set", o.sets, "Override a config key: section.key=value (repeatable)");
  cmd->add_option("-o,--out", o.out_dir, "Output directory");
  cmd->add_option("--seed", o.seed, "Seed (sampler; scenario for simulate; grid for benchmark)");
}

int report(const std::string& kind, const std::string& msg, int code) {
  std::cerr << out::error_report_json(kind, msg) << std::endl;
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"OUT model: Bayesian sparse precision estimation for multivariate time series"};
  app.set_version_flag("--version", std::string(out::kVersion));
  app.require_subcommand(1);
  Overrides o;
  bool resume = false;
  bool quiet = false;
  Index stop_at = 0;

  auto* fit = app.add_subcommand("fit", "Fit the model to a CSV panel");
  add_common(fit, o);
  fit->add_option("-d,--data", o.data, "CSV data file");
  fit->add_option("--orientation", o.orientation, "columns (series in columns) or rows");
  fit->add_flag("--log", o.log_transform, "Log-transform before differencing");
  fit->add_option("--diff", o.diff_order, "Differencing order 0, 1 or 2");
  fit->add_option("--chains", o.chains, "Number of chains");
  fit->add_option("--workers", o.workers, "Worker threads");
  fit->add_option("--edge-threshold", o.edge_threshold, "Partial-correlation threshold for edges");
  fit->add_option("--iterations", o.iterations, "Total iterations per chain");
  fit->add_option("--burn-in", o.burn_in, "Burn-in iterations");
  fit->add_flag("--resume", resume, "Continue from checkpoints in the output directory");
  fit->add_option("--stop-at", stop_at, "Pause every chain at this iteration, keeping checkpoints for --resume")
      ->check(CLI::NonNegativeNumber);
  fit->add_flag("-q,--quiet", quiet, "No progress messages");

  auto* sim = app.add_subcommand("simulate", "Generate a synthetic dataset with its truth");
  add_common(sim, o);
  sim->add_option("--setting", o.setting, "1: GP latents, 2: ARMA(1,1) latents, 3: VAR(1)");
  sim->add_option("--p", o.p, "Dimension");
  sim->add_option("--T", o.T, "Length");
  sim->add_option("--orientation", o.orientation, "columns or rows");

  auto* bench = app.add_subcommand("benchmark", "Estimation and forecast benchmark on simulated data");
  add_common(bench, o);
  bench->add_option("--replicates", o.replicates, "Replicates per cell");
  bench->add_option("--workers", o.workers, "Worker threads");
  bench->add_option("--edge-threshold", o.edge_threshold, "Partial-correlation threshold for MCC");
  bench->add_flag("-q,--quiet", quiet, "No summary line");

  auto* keys = app.add_subcommand("keys", "Print every accepted config key with its default");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report("validation", e.what(), out::kExitValidation);
  }

  if (keys->parsed()) {
    std::cout << out::canonical_config(out::RunConfig{});
    return out::kExitOk;
  }

  out::Command command = out::Command::Fit;
  if (sim->parsed()) command = out::Command::Simulate;
  if (bench->parsed()) command = out::Command::Benchmark;

  out::RunConfig cfg;
  try {
    cfg = build_config(o, command);
    out::validate_config(cfg, command);
  } catch (const std::exception& e) {
    return report("validation", e.what(), out::kExitValidation);
  }

  try {
    if (command == out::Command::Fit) {
      out::Dataset ds;
      try {
        ds = out::load_dataset(cfg);
      } catch (const std::exception& e) {
        return report("validation", e.what(), out::kExitValidation);
      }
      const auto res = out::cmd_fit(cfg, out::FitOptions{resume, quiet, stop_at});
      if (!quiet && !res.paused) std::cerr << "fit: wrote " << res.files.size() << " files to " << cfg.output.dir << "\n";
    } else if (command == out::Command::Simulate) {
      const auto files = out::cmd_simulate(cfg);
      std::cerr << "simulate: wrote " << files.size() << " files to " << cfg.output.dir << "\n";
    } else {
      out::cmd_benchmark(cfg, quiet);
    }
  } catch (const out::ValidationError& e) {
    return report("validation", e.what(), out::kExitValidation);
  } catch (const std::exception& e) {
    return report("runtime", e.what(), out::kExitRuntime);
  }
  return out::kExitOk;
}
