#include "out/commands.hpp"

#include "out/forecast.hpp"
#include "out/graph.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

namespace out {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

std::vector<std::string> numbered(const std::string& prefix, Index n) {
  std::vector<std::string> v;
  for (Index k = 0; k < n; ++k) v.push_back(prefix + std::to_string(k + 1));
  return v;
}

/// Writes files under one root and remembers them for the manifest.
class ArtifactWriter {
 public:
  explicit ArtifactWriter(fs::path root) : root_(std::move(root)) {}

  void write(const fs::path& rel, const std::string& content) {
    write_text_file(root_ / rel, content);
    std::lock_guard<std::mutex> lock(mu_);
    files_.push_back({rel, content.size(), hex64(fnv1a64(content))});
  }
  void write_chain(const fs::path& rel, const ChainOutput& chain) { write(rel, serialize_chain(chain)); }

  ordered_json listing() const {
    ordered_json arr = ordered_json::array();
    for (const auto& f : files_) arr.push_back({{"path", f.path.generic_string()}, {"bytes", f.bytes}, {"fnv1a64", f.hash}});
    return arr;
  }
  std::vector<fs::path> paths() const {
    std::vector<fs::path> out;
    for (const auto& f : files_) out.push_back(f.path);
    return out;
  }
  const fs::path& root() const { return root_; }

 private:
  struct Entry {
    fs::path path;
    size_t bytes;
    std::string hash;
  };
  fs::path root_;
  std::vector<Entry> files_;
  std::mutex mu_;
};

ordered_json config_json(const RunConfig& cfg) {
  ordered_json j = ordered_json::object();
  std::istringstream in(canonical_config(cfg));
  std::string line, section;
  while (std::getline(in, line)) {
    if (!line.empty() && line.front() == '[') section = line.substr(1, line.size() - 2);
    const auto eq = line.find(" = ");
    if (eq != std::string::npos) j[section + "." + line.substr(0, eq)] = line.substr(eq + 3);
  }
  return j;
}

std::string config_hash(const RunConfig& cfg) { return hex64(fnv1a64(canonical_config(cfg))); }

ordered_json manifest_head(const std::string& command, const RunConfig& cfg) {
  ordered_json m;
  m["tool"] = "out";
  m["version"] = kVersion;
  m["command"] = command;
  m["config_hash"] = config_hash(cfg);
  m["config"] = config_json(cfg);
  return m;
}

std::string acceptance_csv(const std::vector<ChainOutput>& chains) {
  std::ostringstream os;
  os << "chain,block,attempts,accepted,rate,sampling_attempts,sampling_accepted,sampling_rate\n";
  for (size_t c = 0; c < chains.size(); ++c)
    for (const auto& b : chains[c].acceptance) {
      const double rate = b.attempts ? static_cast<double>(b.accepted) / static_cast<double>(b.attempts) : 0.0;
      os << c << "," << b.block << "," << b.attempts << "," << b.accepted << "," << format_real(rate) << ","
         << b.sampling_attempts << "," << b.sampling_accepted << "," << format_real(b.sampling_rate()) << "\n";
    }
  return os.str();
}

std::string adaptation_csv(const std::vector<ChainOutput>& chains) {
  std::ostringstream os;
  os << "chain,iteration,block,kind,before,after\n";
  for (size_t c = 0; c < chains.size(); ++c)
    for (const auto& e : chains[c].adaptation_log)
      os << c << "," << e.iteration << "," << e.block << "," << e.kind << "," << format_real(e.before) << ","
         << format_real(e.after) << "\n";
  return os.str();
}

std::string traces_csv(const std::vector<ChainOutput>& chains) {
  std::ostringstream os;
  os << "chain,iteration,log_likelihood,lambda,lambda_prime\n";
  for (size_t c = 0; c < chains.size(); ++c) {
    const auto& d = chains[c].draws;
    for (Index k = 0; k < d.size(); ++k)
      os << c << "," << d.iterations[static_cast<size_t>(k)] << "," << format_real(d.log_likelihood[k]) << ","
         << format_real(d.lambda[k]) << "," << format_real(d.lambda_prime[k]) << "\n";
  }
  return os.str();
}

std::string ess_csv(const std::vector<ChainOutput>& chains) {
  std::ostringstream os;
  os << "chain,draws,ess_log_likelihood,ess_lambda,ess_lambda_prime\n";
  for (size_t c = 0; c < chains.size(); ++c) {
    const auto& d = chains[c].draws;
    os << c << "," << d.size() << "," << format_real(effective_sample_size(d.log_likelihood)) << ","
       << format_real(effective_sample_size(d.lambda)) << "," << format_real(effective_sample_size(d.lambda_prime))
       << "\n";
  }
  return os.str();
}

std::string forecast_csv(const ForecastResult& f, const std::vector<std::string>& names) {
  std::ostringstream os;
  os << "statistic";
  for (const auto& n : names) os << "," << n;
  os << "\nmean";
  for (Index j = 0; j < f.point.size(); ++j) os << "," << format_real(f.point[j]);
  os << "\nsd";
  const double n = static_cast<double>(f.per_draw.rows());
  for (Index j = 0; j < f.point.size(); ++j) {
    const double var = (f.per_draw.col(j).array() - f.point[j]).square().sum() / std::max(1.0, n - 1.0);
    os << "," << format_real(std::sqrt(var));
  }
  os << "\n";
  return os.str();
}

struct ChainJob {
  Index index = 0;
  std::uint64_t seed = 0;
  bool resumed = false;
  bool paused = false;
  ChainOutput output;
  std::exception_ptr error;
};

}  // namespace

std::string error_report_json(const std::string& kind, const std::string& message) {
  ordered_json j;
  j["status"] = "error";
  j["kind"] = kind;
  j["message"] = message;
  return j.dump();
}

Dataset load_dataset(const RunConfig& cfg) {
  const Dataset raw = ingest_csv(cfg.data.path, cfg.data.orientation);
  Dataset ds = preprocess(raw, cfg.data.log_transform, cfg.data.diff_order);
  if (ds.p() < 2) throw InvalidArgument("data: need at least two series, got " + std::to_string(ds.p()));
  if (ds.T() < 8) {
    throw InvalidArgument("data: need at least 8 time points after preprocessing, got " + std::to_string(ds.T()));
  }
  return ds;
}

std::string spectral_curves_csv(const std::vector<ChainOutput>& chains, const std::vector<std::string>& names,
                                Index n_grid, double lower_level, double upper_level) {
  if (chains.empty() || n_grid < 2) throw InvalidArgument("spectral curves: need chains and a grid of >= 2 points");
  const Index p = chains.front().p;
  const BSplineBasis basis(chains.front().K);
  Vector omegas(n_grid);
  Matrix B(n_grid, basis.size());
  for (Index k = 0; k < n_grid; ++k) {
    omegas[k] = kPi * static_cast<double>(k) / static_cast<double>(n_grid - 1);
    B.row(k) = 2.0 * basis.evaluate(omegas[k] / kPi).transpose();
  }
  Index total = 0;
  for (const auto& c : chains) total += c.n_draws();

  Matrix mean(n_grid, p), lower(n_grid, p), upper(n_grid, p);
  for (Index j = 0; j < p; ++j) {
    Matrix g(total, n_grid);
    Index row = 0;
    for (const auto& c : chains)
      for (Index k = 0; k < c.n_draws(); ++k) g.row(row++) = (B * c.theta(k).row(j).transpose()).transpose();
    mean.col(j) = g.colwise().mean().transpose();
    std::vector<double> buf(static_cast<size_t>(total));
    for (Index w = 0; w < n_grid; ++w) {
      for (Index r = 0; r < total; ++r) buf[static_cast<size_t>(r)] = g(r, w);
      std::sort(buf.begin(), buf.end());
      lower(w, j) = quantile_sorted(buf, lower_level);
      upper(w, j) = quantile_sorted(buf, upper_level);
    }
  }
  std::ostringstream os;
  os << "omega";
  for (const auto& n : names) os << "," << n << "_mean," << n << "_lower," << n << "_upper";
  os << "\n";
  for (Index w = 0; w < n_grid; ++w) {
    os << format_real(omegas[w]);
    for (Index j = 0; j < p; ++j)
      os << "," << format_real(mean(w, j)) << "," << format_real(lower(w, j)) << "," << format_real(upper(w, j));
    os << "\n";
  }
  return os.str();
}

FitArtifacts cmd_fit(const RunConfig& cfg, const FitOptions& opts) {
  validate_config(cfg, Command::Fit);
  const Dataset ds = load_dataset(cfg);
  const std::string data_hash = hex64(fnv1a64(read_text_file(cfg.data.path)));
  const fs::path root = cfg.output.dir;
  const fs::path ckpt_dir = root / "checkpoints";
  const std::string run_key = config_hash(cfg) + " " + data_hash + "\n";
  if (opts.resume) {
    const fs::path key_file = ckpt_dir / "run_key.txt";
    if (!fs::exists(key_file)) throw ValidationError("--resume: no checkpoint directory in '" + root.string() + "'");
    if (read_text_file(key_file) != run_key)
      throw ValidationError("--resume: config or data differ from the checkpointed run");
  }

  // side effects start here
  fs::create_directories(ckpt_dir);
  write_text_file(ckpt_dir / "run_key.txt", run_key);

  const Matrix& Y = ds.values;
  const Vector scale = cfg.sampler.standardize ? series_scales(Y) : Vector::Ones(Y.rows());
  const Matrix Ys = scale.cwiseInverse().asDiagonal() * Y;
  const Index n_chains = cfg.output.chains;
  std::vector<ChainJob> jobs(static_cast<size_t>(n_chains));
  std::mutex log_mu;
  auto note = [&](const std::string& msg) {
    if (opts.quiet) return;
    std::lock_guard<std::mutex> lock(log_mu);
    std::cerr << msg << std::endl;
  };

  auto run_one = [&](ChainJob& job) {
    try {
      SamplerConfig local = cfg.sampler;
      local.seed = job.seed;
      const fs::path ckpt = ckpt_dir / ("chain_" + std::to_string(job.index) + ".ckpt");
      std::optional<GibbsSampler> sampler;
      if (opts.resume && fs::exists(ckpt)) {
        const SamplerCheckpoint cp = deserialize_checkpoint(read_text_file(ckpt));
        sampler.emplace(GibbsSampler::resume(Ys, cfg.prior, local, cp));
        job.resumed = true;
        note("chain " + std::to_string(job.index) + ": resumed at iteration " + std::to_string(cp.iteration));
      } else {
        sampler.emplace(Ys, cfg.prior, local);
      }
      const Index total = local.total_iterations;
      const Index stop = opts.stop_at > 0 ? std::min(total, opts.stop_at) : total;
      const Index every = cfg.output.checkpoint_every > 0 ? cfg.output.checkpoint_every : total;
      while (sampler->iteration() < stop) {
        sampler->run_until(std::min(stop, sampler->iteration() + every));
        if (sampler->iteration() < total && (cfg.output.checkpoint_every > 0 || sampler->iteration() == stop)) {
          write_text_file(ckpt, serialize_checkpoint(sampler->checkpoint()));
          note("chain " + std::to_string(job.index) + ": iteration " + std::to_string(sampler->iteration()) + "/" +
               std::to_string(total));
        }
      }
      if (sampler->iteration() < total) {
        job.paused = true;
        return;
      }
      job.output = sampler->output();
      if (cfg.sampler.standardize) unstandardize(job.output, scale, Y.cols());
    } catch (...) {
      job.error = std::current_exception();
    }
  };

  for (Index c = 0; c < n_chains; ++c) {
    jobs[static_cast<size_t>(c)].index = c;
    jobs[static_cast<size_t>(c)].seed = cfg.sampler.seed + static_cast<std::uint64_t>(c);
  }
  const Index workers = std::clamp<Index>(cfg.output.workers, 1, n_chains);
  {
    std::atomic<size_t> next{0};
    auto worker = [&]() {
      for (size_t k = next++; k < jobs.size(); k = next++) run_one(jobs[k]);
    };
    std::vector<std::thread> pool;
    for (Index w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
  }
  for (auto& j : jobs)
    if (j.error) std::rethrow_exception(j.error);

  if (std::any_of(jobs.begin(), jobs.end(), [](const ChainJob& j) { return j.paused; })) {
    note("fit: paused at iteration " + std::to_string(opts.stop_at) + "; continue with --resume");
    FitArtifacts res;
    res.paused = true;
    return res;
  }

  std::vector<ChainOutput> chains;
  for (auto& j : jobs) chains.push_back(std::move(j.output));

  ArtifactWriter out(root);
  for (size_t c = 0; c < chains.size(); ++c) out.write_chain("chains/chain_" + std::to_string(c) + ".bin", chains[c]);

  const PrecisionSummary summary = summarize_precision(chains, cfg.output.lower_level, cfg.output.upper_level);
  out.write("summary/precision_mean.csv", matrix_csv(summary.mean, ds.names, ds.names));
  out.write("summary/precision_lower.csv", matrix_csv(summary.lower, ds.names, ds.names));
  out.write("summary/precision_upper.csv", matrix_csv(summary.upper, ds.names, ds.names));
  out.write("summary/partial_correlation.csv", matrix_csv(summary.partial_correlation, ds.names, ds.names));

  const EdgeSet edges = extract_edges(summary, cfg.output.edge_threshold);
  out.write("graph/edges.csv", edges_csv(edges, ds.names));
  out.write("graph/graph.dot", edges_dot(edges, ds.names));

  const ForecastResult fc = forecast_one_step(Y, chains, true);
  out.write("forecast.csv", forecast_csv(fc, ds.names));

  out.write("diagnostics/acceptance.csv", acceptance_csv(chains));
  out.write("diagnostics/adaptation.csv", adaptation_csv(chains));
  out.write("diagnostics/traces.csv", traces_csv(chains));
  out.write("diagnostics/ess.csv", ess_csv(chains));
  out.write("spectral/spectral_curves.csv", spectral_curves_csv(chains, ds.names, cfg.output.spectral_grid,
                                                                cfg.output.lower_level, cfg.output.upper_level));

  ordered_json m = manifest_head("fit", cfg);
  m["data"] = {{"path", cfg.data.path.string()}, {"fnv1a64", data_hash}, {"p", ds.p()}, {"T", ds.T()},
               {"names", ds.names}};
  ordered_json cj = ordered_json::array();
  for (size_t c = 0; c < chains.size(); ++c) {
    cj.push_back({{"index", c},
                  {"seed", jobs[c].seed},
                  {"draws", chains[c].n_draws()},
                  {"resumed", jobs[c].resumed},
                  {"wall_seconds", chains[c].wall_seconds}});
  }
  m["chains"] = cj;
  m["edges"] = edges.size();
  m["files"] = out.listing();
  write_text_file(root / "manifest.json", m.dump(2) + "\n");

  for (Index c = 0; c < n_chains; ++c) fs::remove(ckpt_dir / ("chain_" + std::to_string(c) + ".ckpt"));
  fs::remove(ckpt_dir / "run_key.txt");
  fs::remove(ckpt_dir);

  FitArtifacts res;
  res.files = out.paths();
  res.files.push_back("manifest.json");
  return res;
}

std::vector<fs::path> cmd_simulate(const RunConfig& cfg) {
  validate_config(cfg, Command::Simulate);
  const ScenarioSpec& spec = cfg.simulate.scenario;
  const SimulatedData sim = generate(spec);

  Dataset ds{sim.Y, numbered("s", spec.p), numbered("", spec.T)};
  ArtifactWriter out(cfg.output.dir);
  if (cfg.simulate.orientation == Orientation::SeriesInColumns) {
    out.write("data.csv", dataset_csv(ds));
  } else {
    out.write("data.csv", matrix_csv(ds.values, ds.time_labels));
  }
  out.write("truth/omega.csv", matrix_csv(sim.omega, ds.names, ds.names));
  out.write("truth/partial_correlation.csv", matrix_csv(partial_correlation(sim.omega), ds.names, ds.names));
  out.write("truth/adjacency.csv", matrix_csv(sim.adjacency.cast<double>(), ds.names, ds.names));
  out.write("truth/U.csv", matrix_csv(sim.U, ds.names, ds.names));
  if (sim.Z.size() > 0) out.write("truth/latent.csv", dataset_csv(Dataset{sim.Z, numbered("z", spec.p), {}}));
  if (spec.setting == 3) {
    out.write("truth/var_phi.csv", matrix_csv(sim.var.phi, ds.names, ds.names));
    out.write("truth/var_sigma_e.csv", matrix_csv(sim.var.sigma_e, ds.names, ds.names));
  }
  ordered_json m = manifest_head("simulate", cfg);
  m["seed"] = spec.seed;
  m["edges"] = (sim.adjacency.sum() / 2);
  m["files"] = out.listing();
  write_text_file(fs::path(cfg.output.dir) / "manifest.json", m.dump(2) + "\n");
  auto files = out.paths();
  files.push_back("manifest.json");
  return files;
}

std::vector<fs::path> cmd_benchmark(const RunConfig& cfg, bool quiet) {
  validate_config(cfg, Command::Benchmark);
  const auto start = std::chrono::steady_clock::now();
  const BenchmarkResult res = run_benchmark(cfg.benchmark.grid, cfg.prior, cfg.sampler);
  std::vector<ForecastBenchmark> fc;
  if (cfg.benchmark.forecast) {
    ForecastGrid fg = cfg.benchmark.forecast_grid;
    fg.n_workers = cfg.benchmark.grid.n_workers;
    fc.push_back(run_forecast_benchmark(fg, cfg.prior, cfg.sampler));
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  ArtifactWriter out(cfg.output.dir);
  out.write("table.csv", benchmark_table_csv(res));
  out.write("replicates.csv", benchmark_replicates_csv(res));
  out.write("forecast.csv", forecast_table_csv(fc));
  if (!fc.empty()) out.write("forecast_replicates.csv", forecast_replicates_csv(fc.front()));

  Index failed = 0;
  for (const auto& r : res.replicates) failed += r.ok ? 0 : 1;
  ordered_json m = manifest_head("benchmark", cfg);
  m["replicates"] = res.replicates.size();
  m["failed_replicates"] = failed;
  m["wall_seconds"] = seconds;
  m["files"] = out.listing();
  write_text_file(fs::path(cfg.output.dir) / "manifest.json", m.dump(2) + "\n");
  if (!quiet) {
    std::cerr << "benchmark: " << res.replicates.size() << " replicates (" << failed << " failed) in " << seconds
              << " s\n";
  }
  auto files = out.paths();
  files.push_back("manifest.json");
  return files;
}

}  // namespace out
