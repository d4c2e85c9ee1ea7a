#include "out/simulate.hpp"

#include "out/graph.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <thread>

namespace out {

void ScenarioSpec::validate() const {
  if (p < 2) throw InvalidArgument("scenario: p must be >= 2");
  if (T < 8) throw InvalidArgument("scenario: T must be >= 8");
  if (setting < 1 || setting > 3) throw InvalidArgument("scenario: setting must be 1, 2 or 3");
  if (!(sparsity > 0.0 && sparsity < 1.0)) throw InvalidArgument("scenario: sparsity must lie in (0,1)");
  if (burn_in < 0) throw InvalidArgument("scenario: burn_in must be >= 0");
}

namespace {

std::vector<Index> block_sizes(Index p) {
  std::vector<Index> sizes(3, p / 3);
  for (Index k = 0; k < p % 3; ++k) ++sizes[static_cast<size_t>(k)];
  return sizes;
}

Index uniform_index(Index n, Rng& rng) {
  return std::uniform_int_distribution<Index>(0, n - 1)(rng);
}

using EdgeKey = std::pair<Index, Index>;
EdgeKey key(Index a, Index b) { return a < b ? EdgeKey{a, b} : EdgeKey{b, a}; }

}  // namespace

Adjacency small_world_pattern(Index p, double sparsity, Rng& rng) {
  if (p < 2) throw InvalidArgument("pattern: p must be >= 2");
  if (!(sparsity >= 0.0 && sparsity < 1.0)) throw InvalidArgument("pattern: sparsity must lie in [0,1)");
  const Index n_pairs = p * (p - 1) / 2;
  const auto target = static_cast<Index>(std::llround(sparsity * static_cast<double>(n_pairs)));

  std::vector<Index> block_of(static_cast<size_t>(p));
  std::set<EdgeKey> present;
  Index start = 0;
  int b = 0;
  for (Index n : block_sizes(p)) {
    for (Index k = 0; k < n; ++k) block_of[static_cast<size_t>(start + k)] = b;
    std::vector<EdgeKey> ring;
    if (n == 2) ring.push_back({start, start + 1});
    if (n >= 3)
      for (Index k = 0; k < n; ++k) ring.push_back(key(start + k, start + (k + 1) % n));
    for (const auto& e : ring) present.insert(e);
    // Watts-Strogatz rewiring with probability 0.1 per ring edge
    for (const auto& e : ring) {
      if (n < 4 || uniform01(rng) >= 0.1) continue;
      const Index u = e.first;
      const Index w = start + uniform_index(n, rng);
      if (w == u || present.count(key(u, w))) continue;
      present.erase(e);
      present.insert(key(u, w));
    }
    start += n;
    ++b;
  }

  std::vector<EdgeKey> edges(present.begin(), present.end());
  if (static_cast<Index>(edges.size()) > target) {
    // the rings alone are denser than the target: keep a random subset
    std::shuffle(edges.begin(), edges.end(), rng);
    edges.resize(static_cast<size_t>(target));
  } else {
    Index n_cross = 0;
    for (Index i = 0; i < p; ++i)
      for (Index j = i + 1; j < p; ++j) n_cross += block_of[static_cast<size_t>(i)] != block_of[static_cast<size_t>(j)];
    const double q = n_cross ? static_cast<double>(target - static_cast<Index>(edges.size())) / n_cross : 0.0;
    if (q > 1.0) throw InvalidArgument("pattern: sparsity infeasible for this dimension");
    for (Index i = 0; i < p; ++i)
      for (Index j = i + 1; j < p; ++j)
        if (block_of[static_cast<size_t>(i)] != block_of[static_cast<size_t>(j)] && uniform01(rng) < q)
          edges.push_back({i, j});
  }

  Adjacency adj = Adjacency::Zero(p, p);
  for (const auto& [i, j] : edges) adj(i, j) = adj(j, i) = 1;
  return adj;
}

SparsePrecision gen_sparse_precision(Index p, double sparsity, Rng& rng) {
  const Adjacency pattern = small_world_pattern(p, sparsity, rng);
  const double d2 = 6.0;
  Matrix L = Matrix::Zero(p, p);
  for (Index i = 1; i < p; ++i)
    for (Index j = 0; j < i; ++j)
      if (pattern(i, j)) L(i, j) = std_normal(rng);

  auto masked = [&]() {
    Matrix full = precision_from_factors(L, Vector::Constant(p, std::sqrt(d2)));
    for (Index i = 0; i < p; ++i)
      for (Index j = 0; j < p; ++j)
        if (i != j && !pattern(i, j)) full(i, j) = 0.0;
    return full;
  };

  // entries that would fall below the truncation level are redrawn a bounded
  // number of times so the realized graph stays close to the designed one
  Matrix omega = masked();
  for (int round = 0; round < 50; ++round) {
    bool redrawn = false;
    for (Index i = 1; i < p; ++i)
      for (Index j = 0; j < i; ++j)
        if (pattern(i, j) && std::abs(omega(i, j)) < 1.0) {
          L(i, j) = std_normal(rng);
          redrawn = true;
        }
    if (!redrawn) break;
    omega = masked();
  }
  for (Index i = 0; i < p; ++i)
    for (Index j = 0; j < p; ++j)
      if (i != j && std::abs(omega(i, j)) < 1.0) omega(i, j) = 0.0;

  Eigen::SelfAdjointEigenSolver<Matrix> eig(omega, Eigen::EigenvaluesOnly);
  double lo = eig.eigenvalues().minCoeff();
  double hi = eig.eigenvalues().maxCoeff();
  double shift = 0.0;
  if (lo <= 0.0) shift = std::abs(lo) + 0.1;
  const double max_cond = 1e4;
  if (hi + shift > max_cond * (lo + shift)) shift = 1.01 * (hi - max_cond * lo) / (max_cond - 1.0);
  omega.diagonal().array() += shift;

  SparsePrecision out;
  out.omega = 0.5 * (omega + omega.transpose());
  out.adjacency = Adjacency::Zero(p, p);
  for (Index i = 0; i < p; ++i)
    for (Index j = 0; j < p; ++j)
      if (i != j && out.omega(i, j) != 0.0) out.adjacency(i, j) = 1;
  return out;
}

Matrix random_orthogonal(Index p, Rng& rng) {
  Matrix G(p, p);
  for (Index i = 0; i < G.size(); ++i) G.data()[i] = std_normal(rng);
  Eigen::HouseholderQR<Matrix> qr(G);
  Matrix Q = qr.householderQ();
  const Matrix R = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Index j = 0; j < p; ++j)
    if (R(j, j) < 0.0) Q.col(j) = -Q.col(j);
  return Q;
}

double spectral_radius(const Matrix& m) {
  Eigen::EigenSolver<Matrix> es(m, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

namespace {
Matrix spd_sqrt(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  if (es.info() != Eigen::Success || es.eigenvalues().minCoeff() <= 0.0)
    throw NumericalError("square root of a matrix that is not positive definite");
  return es.operatorSqrt();
}
}  // namespace

VarSystem algorithm1_var(const Matrix& omega, const Matrix& K_aux, const Matrix& Q_aux) {
  const Index p = omega.rows();
  if (omega.cols() != p || K_aux.rows() != p || K_aux.cols() != p || Q_aux.rows() != p || Q_aux.cols() != p)
    throw InvalidArgument("algorithm1_var: dimension mismatch");
  const Matrix I = Matrix::Identity(p, p);
  if ((Q_aux * Q_aux.transpose() - I).norm() > 1e-8) throw InvalidArgument("algorithm1_var: Q must be orthogonal");
  Eigen::LLT<Matrix> llt_omega(omega);
  if (llt_omega.info() != Eigen::Success) throw InvalidArgument("algorithm1_var: omega must be SPD");

  const Matrix C0 = llt_omega.solve(I);  // C0 = D0 = Gamma(0) = omega^{-1}
  // T = (I + K^T C0 K)^{-1}, so that Sigma_e = C0 - C0 K T K^T C0 = (omega + K K^T)^{-1} = C1
  const Matrix inner = I + K_aux.transpose() * C0 * K_aux;
  Eigen::LLT<Matrix> llt_inner(inner);
  if (llt_inner.info() != Eigen::Success) throw NumericalError("algorithm1_var: singular T-solve");
  Matrix Tm = llt_inner.solve(I);
  Tm = 0.5 * (Tm + Tm.transpose());

  VarSystem sys;
  sys.sigma_e = C0 - C0 * K_aux * Tm * K_aux.transpose() * C0;
  sys.sigma_e = 0.5 * (sys.sigma_e + sys.sigma_e.transpose());
  const Matrix K1 = C0 * K_aux * spd_sqrt(Tm);
  const Matrix gamma1 = K1 * Q_aux * spd_sqrt(0.5 * (C0 + C0.transpose()));
  sys.phi = gamma1 * omega;

  const double residual = (C0 - sys.phi * C0 * sys.phi.transpose() - sys.sigma_e).norm();
  if (!(residual <= 1e-8 * C0.norm())) throw NumericalError("algorithm1_var: Lyapunov identity violated");
  return sys;
}

VarSystem algorithm1_var(const Matrix& omega, Rng& rng) {
  const Index p = omega.rows();
  Matrix K(p, p);
  for (Index i = 0; i < K.size(); ++i) K.data()[i] = std_normal(rng);
  const Matrix Q = random_orthogonal(p, rng);
  return algorithm1_var(omega, K, Q);
}

Matrix simulate_var(const VarSystem& sys, Index T, Index burn_in, const Vector& y0, Rng& rng) {
  const Index p = sys.phi.rows();
  if (y0.size() != p) throw InvalidArgument("simulate_var: initial state dimension mismatch");
  Eigen::LLT<Matrix> llt(sys.sigma_e);
  if (llt.info() != Eigen::Success) throw NumericalError("simulate_var: innovation covariance is not SPD");
  const Matrix C = llt.matrixL();
  Matrix Y(p, T);
  Vector y = y0;
  for (Index t = 0; t < burn_in + T; ++t) {
    y = sys.phi * y + C * std_normal_vector(p, rng);
    if (t >= burn_in) Y.col(t - burn_in) = y;
  }
  return Y;
}

Matrix random_rotation(Index p, Rng& rng) {
  const Index m = packed_size(p);
  Vector a(m);
  for (Index k = 0; k < m; ++k) a[k] = 0.3 * std_normal(rng);
  return cayley_rotation(unpack_skew(effective_A(a, 0.3), p));
}

Vector simulate_ar1(double phi, Index T, Rng& rng) {
  if (!(std::abs(phi) < 1.0)) throw InvalidArgument("AR(1) coefficient must satisfy |phi| < 1");
  const double s = std::sqrt(1.0 - phi * phi);
  Vector z(T);
  double x = std_normal(rng);
  for (Index t = 0; t < T; ++t) {
    if (t > 0) x = phi * x + s * std_normal(rng);
    z[t] = x;
  }
  return z;
}

double arma11_innovation_variance(double phi, double theta) {
  return (1.0 - phi * phi) / (1.0 + 2.0 * theta * phi + theta * theta);
}

Vector simulate_arma11(double phi, double theta, Index T, Index burn_in, Rng& rng) {
  if (!(std::abs(phi) < 1.0)) throw InvalidArgument("ARMA(1,1) requires |phi| < 1");
  const double sd = std::sqrt(arma11_innovation_variance(phi, theta));
  Vector z(T);
  double x = 0.0;
  double e_prev = 0.0;
  for (Index t = 0; t < burn_in + T; ++t) {
    const double e = sd * std_normal(rng);
    x = phi * x + theta * e_prev + e;
    e_prev = e;
    if (t >= burn_in) z[t - burn_in] = x;
  }
  return z;
}

namespace {

OutTransform truth_transform(const Matrix& omega, const Matrix& U) {
  const CholeskyFactor f = modified_cholesky(omega);
  return OutTransform{f.L, f.d, U};
}

double near_unit(Rng& rng) {
  const double mag = 0.9 + 0.1 * uniform01(rng);
  return uniform01(rng) < 0.5 ? -mag : mag;
}

}  // namespace

SimulatedData gen_setting1(const ScenarioSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  SimulatedData out;
  const SparsePrecision sp = gen_sparse_precision(spec.p, spec.sparsity, rng);
  out.omega = sp.omega;
  out.adjacency = sp.adjacency;
  out.U = random_rotation(spec.p, rng);
  out.latent_params.resize(spec.p);
  out.Z.resize(spec.p, spec.T);
  for (Index j = 0; j < spec.p; ++j) {
    // exponential kernel exp(-|h| / range) on the integer grid is AR(1) with phi = exp(-1 / range)
    double range = 10.0 * uniform01(rng);
    while (range <= 0.0) range = 10.0 * uniform01(rng);
    out.latent_params[j] = range;
    out.Z.row(j) = simulate_ar1(std::exp(-1.0 / range), spec.T, rng).transpose();
  }
  out.Y = observed_from_latent(out.Z, truth_transform(out.omega, out.U));
  return out;
}

SimulatedData gen_setting2(const ScenarioSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  SimulatedData out;
  const SparsePrecision sp = gen_sparse_precision(spec.p, spec.sparsity, rng);
  out.omega = sp.omega;
  out.adjacency = sp.adjacency;
  out.U = random_rotation(spec.p, rng);
  out.latent_params.resize(2 * spec.p);
  out.Z.resize(spec.p, spec.T);
  for (Index j = 0; j < spec.p; ++j) {
    const double phi = near_unit(rng);
    const double theta = near_unit(rng);
    out.latent_params[2 * j] = phi;
    out.latent_params[2 * j + 1] = theta;
    out.Z.row(j) = simulate_arma11(phi, theta, spec.T, spec.burn_in, rng).transpose();
  }
  out.Y = observed_from_latent(out.Z, truth_transform(out.omega, out.U));
  return out;
}

SimulatedData gen_setting3(const ScenarioSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  SimulatedData out;
  const SparsePrecision sp = gen_sparse_precision(spec.p, spec.sparsity, rng);
  out.omega = sp.omega;
  out.adjacency = sp.adjacency;
  out.U = Matrix::Identity(spec.p, spec.p);
  out.var = algorithm1_var(out.omega, rng);
  Eigen::LLT<Matrix> llt(out.omega);
  // y0 ~ N(0, omega^{-1}): solve L^T y = z with omega = L L^T
  const Vector y0 = llt.matrixU().solve(std_normal_vector(spec.p, rng));
  out.Y = simulate_var(out.var, spec.T, spec.burn_in, y0, rng);
  return out;
}

SimulatedData generate(const ScenarioSpec& spec) {
  switch (spec.setting) {
    case 1: return gen_setting1(spec);
    case 2: return gen_setting2(spec);
    case 3: return gen_setting3(spec);
    default: throw InvalidArgument("scenario: setting must be 1, 2 or 3");
  }
}

std::uint64_t replicate_seed(std::uint64_t base, int setting, Index T, double sparsity, Index replicate) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  std::uint64_t h = mix(base);
  h = mix(h ^ static_cast<std::uint64_t>(setting));
  h = mix(h ^ static_cast<std::uint64_t>(T));
  h = mix(h ^ static_cast<std::uint64_t>(std::llround(sparsity * 1e6)));
  h = mix(h ^ static_cast<std::uint64_t>(replicate));
  return h;
}

BenchmarkResult run_benchmark(const BenchmarkGrid& grid, const PriorConfig& prior, const SamplerConfig& sampler) {
  if (grid.replicates < 0) throw InvalidArgument("benchmark: replicates must be >= 0");
  prior.validate();
  sampler.validate();

  BenchmarkResult result;
  for (int s : grid.settings)
    for (Index T : grid.T_values)
      for (double sp : grid.sparsities) {
        result.cells.push_back(BenchmarkCell{s, T, sp});
        for (Index r = 0; r < grid.replicates; ++r) {
          ReplicateResult rr;
          rr.setting = s;
          rr.T = T;
          rr.sparsity = sp;
          rr.replicate = r;
          rr.seed = replicate_seed(grid.base_seed, s, T, sp, r);
          result.replicates.push_back(rr);
        }
      }

  auto work = [&](ReplicateResult& rr) {
    const auto start = std::chrono::steady_clock::now();
    try {
      ScenarioSpec spec;
      spec.p = grid.p;
      spec.T = rr.T;
      spec.setting = rr.setting;
      spec.sparsity = rr.sparsity;
      spec.seed = rr.seed;
      const SimulatedData data = generate(spec);
      SamplerConfig cfg = sampler;
      cfg.seed = rr.seed;
      const ChainOutput chain = gibbs_run(data.Y, prior, cfg);
      const Matrix est = summarize_precision(chain).mean;
      const Matrix base = baseline_precision(data.Y, sampler.baseline_blend);
      const EstimateMetrics mo = score_estimate(est, data.omega, grid.edge_threshold);
      const EstimateMetrics mb = score_estimate(base, data.omega, grid.edge_threshold);
      rr.out_mse = mo.scaled_mse;
      rr.baseline_mse = mb.scaled_mse;
      rr.out_mcc = mo.mcc;
      rr.baseline_mcc = mb.mcc;
      rr.ok = true;
    } catch (const std::exception& e) {
      rr.ok = false;
      rr.error = e.what();
      rr.out_mse = rr.baseline_mse = rr.out_mcc = rr.baseline_mcc = std::nan("");
    }
    rr.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };

  std::atomic<size_t> next{0};
  auto worker = [&]() {
    for (size_t k = next++; k < result.replicates.size(); k = next++) work(result.replicates[k]);
  };
  const Index n_workers = std::max<Index>(1, grid.n_workers);
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (Index w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  for (auto& cell : result.cells) {
    for (const auto& rr : result.replicates) {
      if (rr.setting != cell.setting || rr.T != cell.T || rr.sparsity != cell.sparsity) continue;
      if (!rr.ok) {
        ++cell.n_failed;
        continue;
      }
      ++cell.n_ok;
      cell.out_mse += rr.out_mse;
      cell.baseline_mse += rr.baseline_mse;
      cell.out_mcc += rr.out_mcc;
      cell.baseline_mcc += rr.baseline_mcc;
    }
    if (cell.n_ok > 0) {
      const double n = static_cast<double>(cell.n_ok);
      cell.out_mse /= n;
      cell.baseline_mse /= n;
      cell.out_mcc /= n;
      cell.baseline_mcc /= n;
    } else {
      cell.out_mse = cell.baseline_mse = cell.out_mcc = cell.baseline_mcc = std::nan("");
    }
  }
  return result;
}

namespace {
std::string sparsity_label(double s) {
  std::ostringstream os;
  os << std::llround(s * 100.0) << "pct";
  return os.str();
}
}  // namespace

std::string benchmark_table_csv(const BenchmarkResult& result) {
  std::vector<std::pair<int, double>> columns;
  std::vector<Index> rows;
  for (const auto& c : result.cells) {
    if (std::find(columns.begin(), columns.end(), std::make_pair(c.setting, c.sparsity)) == columns.end())
      columns.emplace_back(c.setting, c.sparsity);
    if (std::find(rows.begin(), rows.end(), c.T) == rows.end()) rows.push_back(c.T);
  }
  std::ostringstream os;
  os << "T";
  for (const auto& [s, sp] : columns)
    os << ",setting" << s << "_" << sparsity_label(sp) << "_OUT,setting" << s << "_" << sparsity_label(sp)
       << "_iid-baseline";
  os << "\n";
  for (Index T : rows) {
    bool any = false;
    std::ostringstream line;
    line << T;
    for (const auto& [s, sp] : columns) {
      const BenchmarkCell* cell = nullptr;
      for (const auto& c : result.cells)
        if (c.setting == s && c.sparsity == sp && c.T == T) cell = &c;
      if (cell && cell->n_ok + cell->n_failed > 0) any = true;
      line << "," << (cell ? format_real(cell->out_mse) : "NA") << ","
           << (cell ? format_real(cell->baseline_mse) : "NA");
    }
    if (any) os << line.str() << "\n";
  }
  return os.str();
}

std::string benchmark_replicates_csv(const BenchmarkResult& result) {
  std::ostringstream os;
  os << "setting,T,sparsity,replicate,seed,status,out_mse,baseline_mse,out_mcc,baseline_mcc,error\n";
  for (const auto& r : result.replicates) {
    std::string err = r.error;
    std::replace(err.begin(), err.end(), ',', ';');
    std::replace(err.begin(), err.end(), '\n', ' ');
    os << r.setting << "," << r.T << "," << format_real(r.sparsity) << "," << r.replicate << "," << r.seed << ","
       << (r.ok ? "ok" : "failed") << "," << format_real(r.out_mse) << "," << format_real(r.baseline_mse) << ","
       << format_real(r.out_mcc) << "," << format_real(r.baseline_mcc) << "," << err << "\n";
  }
  return os.str();
}

}  // namespace out
