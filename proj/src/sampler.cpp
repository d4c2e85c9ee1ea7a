#include "out/sampler.hpp"

#include "out/graph.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>
#include <thread>

namespace out {

void SamplerConfig::validate() const {
  auto fail = [](const std::string& msg) { throw InvalidArgument("sampler config: " + msg); };
  if (total_iterations < 1) fail("total_iterations must be positive");
  if (burn_in < 0 || burn_in >= total_iterations) fail("need 0 <= burn_in < total_iterations");
  if (thin < 1) fail("thin must be >= 1");
  if (expected_draws() < 1) fail("no draws would be stored");
  if (spectral_only_iterations < 0) fail("spectral_only_iterations must be >= 0");
  if (threshold_activation <= spectral_only_iterations) fail("threshold_activation must follow the spectral-only phase");
  if (threshold_activation > burn_in) fail("threshold_activation must lie inside burn-in");
  if (shrinkage_start < 0 || shrinkage_start > burn_in) fail("shrinkage_start must lie inside burn-in");
  if (rank_truncation < 0 || rank_truncation > burn_in) fail("rank_truncation must lie inside burn-in");
  if (adaptation_window < 1 || proposal_refresh < 1) fail("window lengths must be positive");
  if (!(truncation_epsilon >= 0.0)) fail("truncation_epsilon must be >= 0");
  for (double s : {step_L, step_log_d, step_xi, step_eta, step_A, rotation_scale, threshold_scale, location_scale})
    if (!(s > 0.0)) fail("step sizes must be positive");
  auto band = [&](double lo, double hi) {
    if (!(lo > 0.0 && lo < hi && hi < 1.0)) fail("acceptance targets must satisfy 0 < low < high < 1");
  };
  band(mh_target_low, mh_target_high);
  band(lmc_target_low, lmc_target_high);
  if (!(baseline_blend >= 0.0 && baseline_blend <= 1.0)) fail("baseline_blend must lie in [0,1]");
  if (!(lambda_quantile > 0.0 && lambda_quantile < 1.0)) fail("lambda_quantile must lie in (0,1)");
}

namespace {

std::vector<Index> active_columns(const SpectralCoeffs& sc) {
  std::vector<Index> cols;
  for (Index r = 0; r < sc.R(); ++r)
    if (sc.active[static_cast<size_t>(r)]) cols.push_back(r);
  return cols;
}

Vector gather(const Matrix& m, const std::vector<Index>& cols) {
  Vector x(m.rows() * static_cast<Index>(cols.size()));
  for (size_t c = 0; c < cols.size(); ++c) x.segment(static_cast<Index>(c) * m.rows(), m.rows()) = m.col(cols[c]);
  return x;
}

void scatter(Matrix& m, const std::vector<Index>& cols, const Vector& x) {
  for (size_t c = 0; c < cols.size(); ++c) m.col(cols[c]) = x.segment(static_cast<Index>(c) * m.rows(), m.rows());
}

double quantile(std::vector<double> v, double level) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const double pos = level * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  const double w = pos - static_cast<double>(lo);
  return (1.0 - w) * v[lo] + w * v[hi];
}

}  // namespace

struct GibbsSampler::Impl {
  std::unique_ptr<LikelihoodContext> ctx;
  WhittleModel model;
  WhittleTerms terms;
  Matrix penalty;  // P + ridge I

  Impl(const Matrix& Y, const PriorConfig& prior)
      : ctx(std::make_unique<LikelihoodContext>(whittle_transform(Y), prior.K, prior.h0)),
        model(*ctx, Thresholding::Smoothed) {
    penalty = second_difference_penalty(prior.K).P;
    penalty.diagonal().array() += prior.penalty_ridge;
  }
};

const char* GibbsSampler::block_label(int id) {
  static const char* names[] = {"xi", "eta", "L_raw", "log_d", "A_raw", "lambda", "lambda_prime", "ig_location"};
  return names[id];
}

GibbsSampler::GibbsSampler(GibbsSampler&&) noexcept = default;
GibbsSampler& GibbsSampler::operator=(GibbsSampler&&) noexcept = default;
GibbsSampler::~GibbsSampler() = default;

namespace {
void validate_data(const Matrix& Y) {
  if (Y.rows() < 2) throw InvalidArgument("sampler needs p >= 2 series");
  if (Y.cols() < 8) throw InvalidArgument("sampler needs T >= 8 observations");
  if (!Y.allFinite()) throw InvalidArgument("data contain non-finite values");
}
}  // namespace

GibbsSampler::GibbsSampler(const Matrix& Y, PriorConfig prior, SamplerConfig cfg)
    : prior_(prior), cfg_(cfg) {
  validate_data(Y);
  prior_.validate();
  cfg_.validate();
  const Index p = Y.rows();
  rng_.seed(cfg_.seed);

  // hot start: modified Cholesky of the blended-covariance precision, U = I, thresholds 0
  state_ = ModelState::identity(p, prior_.K, prior_.R);
  const CholeskyFactor hot = modified_cholesky(baseline_precision(Y, cfg_.baseline_blend));
  state_.l_raw = pack_lower(hot.L);
  state_.log_d = hot.d.array().log();
  state_.ig_location = hot.d.mean();
  if (cfg_.rotation_hot_start && cfg_.update_rotation) {
    const OutTransform start{hot.L, hot.d, Matrix::Identity(p, p)};
    const Matrix U0 = second_order_rotation(latent_from_observed(Y, start), cfg_.hot_start_lags);
    const Matrix A0 = inverse_cayley(U0);
    // keep U = I when the estimate sits too close to a -1 eigenvalue
    if (A0.allFinite() && A0.cwiseAbs().maxCoeff() < 5.0) state_.a_raw = pack_lower(A0);
  }
  for (Index i = 0; i < state_.spectral.xi.size(); ++i)
    state_.spectral.xi.data()[i] = cfg_.spectral_init_scale * std_normal(rng_);
  for (Index i = 0; i < state_.spectral.eta.size(); ++i)
    state_.spectral.eta.data()[i] = cfg_.spectral_init_scale * std_normal(rng_);

  impl_ = std::make_unique<Impl>(Y, prior_);
  init_common();
}

GibbsSampler::GibbsSampler(const Matrix& Y, PriorConfig prior, SamplerConfig cfg, ModelState initial)
    : prior_(prior), cfg_(cfg), state_(std::move(initial)) {
  validate_data(Y);
  prior_.validate();
  cfg_.validate();
  if (state_.p() != Y.rows()) throw InvalidArgument("initial state dimension does not match data");
  rng_.seed(cfg_.seed);
  impl_ = std::make_unique<Impl>(Y, prior_);
  init_common();
}

void GibbsSampler::init_common() {
  const Index p = state_.p();
  impl_->terms = impl_->model.evaluate(state_);
  if (!std::isfinite(impl_->terms.value)) throw NumericalError("non-finite likelihood at initialization");

  const double a_step =
      cfg_.rotation_kernel == RotationKernel::Langevin ? cfg_.step_A : cfg_.rotation_scale;
  steps_ = {cfg_.step_xi, cfg_.step_eta,      cfg_.step_L,          cfg_.step_log_d,
            a_step,       cfg_.threshold_scale, cfg_.threshold_scale, cfg_.location_scale};
  windows_.assign(kNumBlocks, AcceptanceWindow{});
  stats_.clear();
  for (int b = 0; b < kNumBlocks; ++b) stats_.push_back(BlockStats{block_label(b)});
  a_proposal_ = AdaptiveProposal(packed_size(p), 1.0, cfg_.proposal_refresh);
  l_scale_ = Vector::Ones(packed_size(p));
  l_mean_sum_ = Vector::Zero(packed_size(p));
  a_mean_sum_ = Vector::Zero(packed_size(p));
  mean_count_ = 0;

  out_ = ChainOutput{};
  out_.p = p;
  out_.K = prior_.K;
  out_.seed = cfg_.seed;
  out_.draws.reserve(cfg_.expected_draws(), p, prior_.K);
}

GibbsSampler GibbsSampler::resume(const Matrix& Y, PriorConfig prior, SamplerConfig cfg,
                                  const SamplerCheckpoint& cp) {
  GibbsSampler s(Y, prior, cfg, cp.state);
  s.iteration_ = cp.iteration;
  s.steps_ = cp.steps;
  s.l_scale_ = cp.l_scale;
  s.windows_ = cp.windows;
  s.a_proposal_ = AdaptiveProposal::restore(cp.rotation_proposal);
  s.l_mean_sum_ = cp.l_mean_sum;
  s.a_mean_sum_ = cp.a_mean_sum;
  s.mean_count_ = cp.mean_count;
  std::istringstream in(cp.rng_state);
  in >> s.rng_;
  s.out_ = cp.partial;
  s.stats_ = cp.partial.acceptance;
  const Index stored = s.out_.n_draws();
  if (stored > cfg.expected_draws()) throw InvalidArgument("checkpoint holds more draws than the run stores");
  // storage stays at full capacity; iterations.size() counts the filled rows
  s.out_.draws.reserve(cfg.expected_draws(), s.state_.p(), prior.K);
  s.out_.draws.iterations = cp.partial.draws.iterations;
  s.out_.draws.L.topRows(stored) = cp.partial.draws.L;
  s.out_.draws.d.topRows(stored) = cp.partial.draws.d;
  s.out_.draws.A.topRows(stored) = cp.partial.draws.A;
  s.out_.draws.lambda.head(stored) = cp.partial.draws.lambda;
  s.out_.draws.lambda_prime.head(stored) = cp.partial.draws.lambda_prime;
  s.out_.draws.theta.topRows(stored) = cp.partial.draws.theta;
  s.out_.draws.log_likelihood.head(stored) = cp.partial.draws.log_likelihood;
  s.elapsed_ = cp.partial.wall_seconds;
  return s;
}

double GibbsSampler::log_likelihood() const { return impl_->terms.value; }

void GibbsSampler::run_until(Index target) {
  target = std::min(target, cfg_.total_iterations);
  const auto start = std::chrono::steady_clock::now();
  while (iteration_ < target) sweep();
  elapsed_ += std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

void GibbsSampler::record(int block, bool accepted) {
  auto& st = stats_[static_cast<size_t>(block)];
  ++st.attempts;
  st.accepted += accepted ? 1 : 0;
  if (iteration_ > cfg_.burn_in) {
    ++st.sampling_attempts;
    st.sampling_accepted += accepted ? 1 : 0;
  }
  if (iteration_ <= cfg_.burn_in) windows_[static_cast<size_t>(block)].add(accepted);
}

void GibbsSampler::sweep() {
  ++iteration_;
  const Index i = iteration_;
  const bool main_phase = i > cfg_.spectral_only_iterations;
  const bool thresholds_on = i > cfg_.threshold_activation;

  if (i == cfg_.spectral_only_iterations + 1) compute_preconditioner();
  if (i == cfg_.threshold_activation + 1) activate_thresholds();

  update_xi();
  update_eta();
  if (main_phase) {
    update_L();
    update_log_d();
    update_location();
    if (cfg_.update_rotation) update_A();
  }
  if (thresholds_on) {
    update_lambda(false);
    update_lambda(true);
  }
  if (i > cfg_.shrinkage_start) update_shrinkage();

  if (main_phase && !thresholds_on) {
    l_mean_sum_ += impl_->terms.L.size() ? pack_lower(impl_->terms.L) : Vector();
    a_mean_sum_ += effective_A(state_.a_raw, state_.thresholds.lambda_prime);
    ++mean_count_;
  }
  if (i == cfg_.rank_truncation) truncate_rank();
  if (i <= cfg_.burn_in && i % cfg_.adaptation_window == 0) adapt();
  if (i > cfg_.burn_in && (i - cfg_.burn_in) % cfg_.thin == 0) store();
}

void GibbsSampler::update_xi() {
  auto& sc = state_.spectral;
  const auto cols = active_columns(sc);
  if (cols.empty()) return;
  const Index p = sc.p();
  const Vector tau = state_.shrinkage.tau();
  const Matrix& v = state_.shrinkage.v;

  auto prior_part = [&](const Matrix& xi, Matrix& grad) {
    double val = 0.0;
    for (Index r : cols)
      for (Index j = 0; j < p; ++j) {
        const double prec = v(j, r) * tau[r];
        val -= 0.5 * prec * xi(j, r) * xi(j, r);
        grad(j, r) -= prec * xi(j, r);
      }
    return val;
  };
  auto eval = [&](WhittleTerms& terms) -> std::pair<double, Vector> {
    Matrix grad = impl_->model.gradient(terms, state_, Block::Xi).reshaped(p, sc.R());
    const double prior = prior_part(sc.xi, grad);
    return {terms.value + prior, gather(grad, cols)};
  };

  const Vector x0 = gather(sc.xi, cols);
  DensityPoint cur;
  cur.x = x0;
  std::tie(cur.log_density, cur.grad) = eval(impl_->terms);

  WhittleTerms trial = impl_->terms;
  auto target = [&](const Vector& x) {
    scatter(sc.xi, cols, x);
    impl_->model.refresh_spectral(trial, state_);
    return eval(trial);
  };
  const bool ok = mala_step(cur, target, steps_[kXi], rng_);
  if (ok) {
    scatter(sc.xi, cols, cur.x);
    impl_->terms = std::move(trial);
  } else {
    scatter(sc.xi, cols, x0);
  }
  record(kXi, ok);
}

void GibbsSampler::update_eta() {
  auto& sc = state_.spectral;
  const auto cols = active_columns(sc);
  if (cols.empty()) return;
  const Index K = sc.K();
  const double sk = state_.shrinkage.sigma_kappa;
  const Matrix& P = impl_->penalty;

  auto eval = [&](WhittleTerms& terms) -> std::pair<double, Vector> {
    Matrix grad = impl_->model.gradient(terms, state_, Block::Eta).reshaped(K, sc.R());
    double prior = 0.0;
    for (Index r : cols) {
      const Vector Pe = P * sc.eta.col(r);
      prior -= 0.5 * sc.eta.col(r).dot(Pe) / sk;
      grad.col(r) -= Pe / sk;
    }
    return {terms.value + prior, gather(grad, cols)};
  };

  const Vector x0 = gather(sc.eta, cols);
  DensityPoint cur;
  cur.x = x0;
  std::tie(cur.log_density, cur.grad) = eval(impl_->terms);

  WhittleTerms trial = impl_->terms;
  auto target = [&](const Vector& x) {
    scatter(sc.eta, cols, x);
    impl_->model.refresh_spectral(trial, state_);
    return eval(trial);
  };
  const bool ok = mala_step(cur, target, steps_[kEta], rng_);
  if (ok) {
    scatter(sc.eta, cols, cur.x);
    impl_->terms = std::move(trial);
  } else {
    scatter(sc.eta, cols, x0);
  }
  record(kEta, ok);
}

void GibbsSampler::update_L() {
  if (state_.l_raw.size() == 0) return;
  auto eval = [&](WhittleTerms& terms) -> std::pair<double, Vector> {
    Vector grad = impl_->model.gradient(terms, state_, Block::LRaw) + grad_logprior_L(state_.l_raw, prior_);
    const double prior = -0.5 * state_.l_raw.squaredNorm() / (prior_.sigma_T * prior_.sigma_T);
    return {terms.value + prior, std::move(grad)};
  };
  const Vector x0 = state_.l_raw;
  DensityPoint cur;
  cur.x = x0;
  std::tie(cur.log_density, cur.grad) = eval(impl_->terms);

  WhittleTerms trial = impl_->terms;
  auto target = [&](const Vector& x) {
    state_.l_raw = x;
    impl_->model.refresh_L(trial, state_);
    return eval(trial);
  };
  const bool ok = mala_step(cur, target, steps_[kL], rng_, l_scale_);
  if (ok) {
    state_.l_raw = cur.x;
    impl_->terms = std::move(trial);
  } else {
    state_.l_raw = x0;
  }
  record(kL, ok);
}

void GibbsSampler::update_log_d() {
  const double T = static_cast<double>(impl_->ctx->T());
  const Vector scale = Vector::Constant(state_.p(), 1.0 / std::sqrt(2.0 * T));
  auto eval = [&](WhittleTerms& terms) -> std::pair<double, Vector> {
    Vector grad = impl_->model.gradient(terms, state_, Block::LogD) +
                  grad_logprior_log_d(state_.log_d, state_.ig_location);
    return {terms.value + logprior_log_d(state_.log_d, state_.ig_location), std::move(grad)};
  };
  const Vector x0 = state_.log_d;
  DensityPoint cur;
  cur.x = x0;
  std::tie(cur.log_density, cur.grad) = eval(impl_->terms);

  WhittleTerms trial = impl_->terms;
  auto target = [&](const Vector& x) {
    state_.log_d = x;
    impl_->model.refresh_d(trial, state_);
    return eval(trial);
  };
  const bool ok = mala_step(cur, target, steps_[kLogD], rng_, scale);
  if (ok) {
    state_.log_d = cur.x;
    impl_->terms = std::move(trial);
  } else {
    state_.log_d = x0;
  }
  record(kLogD, ok);
}

void GibbsSampler::update_A_langevin() {
  const double prec = 1.0 / (prior_.sigma_T * prior_.sigma_T);
  auto eval = [&](WhittleTerms& terms) -> std::pair<double, Vector> {
    Vector grad = impl_->model.gradient(terms, state_, Block::ARaw) - prec * state_.a_raw;
    return {terms.value + logprior_A(state_.a_raw, state_.thresholds.lambda_prime, prior_), std::move(grad)};
  };
  const Vector x0 = state_.a_raw;
  DensityPoint cur;
  cur.x = x0;
  std::tie(cur.log_density, cur.grad) = eval(impl_->terms);

  WhittleTerms trial = impl_->terms;
  auto target = [&](const Vector& x) {
    state_.a_raw = x;
    impl_->model.refresh_U(trial, state_);
    return eval(trial);
  };
  const bool ok = mala_step(cur, target, steps_[kA], rng_);
  if (ok) {
    state_.a_raw = cur.x;
    impl_->terms = std::move(trial);
  } else {
    state_.a_raw = x0;
  }
  record(kA, ok);
}

void GibbsSampler::update_A() {
  if (state_.a_raw.size() == 0) return;
  if (cfg_.rotation_kernel == RotationKernel::Langevin) {
    update_A_langevin();
    return;
  }
  const double lp = state_.thresholds.lambda_prime;
  Vector x = state_.a_raw;
  double current = impl_->terms.value + logprior_A(x, lp, prior_);
  WhittleTerms trial = impl_->terms;
  auto target = [&](const Vector& y) {
    state_.a_raw = y;
    impl_->model.refresh_U(trial, state_);
    return trial.value + logprior_A(y, lp, prior_);
  };
  const bool ok = adaptive_mh_step(x, current, target, a_proposal_, rng_);
  state_.a_raw = x;
  if (ok) impl_->terms = std::move(trial);
  record(kA, ok);
  if (iteration_ <= cfg_.burn_in) {
    const Index before = a_proposal_.version();
    a_proposal_.record(x);
    if (a_proposal_.version() != before) {
      out_.adaptation_log.push_back({iteration_, block_label(kA), "covariance_refresh",
                                     static_cast<double>(before), static_cast<double>(a_proposal_.version())});
    }
  }
}

void GibbsSampler::update_lambda(bool prime) {
  const int id = prime ? kLambdaPrime : kLambda;
  double& slot = prime ? state_.thresholds.lambda_prime : state_.thresholds.lambda;
  double value = slot;
  double current = impl_->terms.value;
  WhittleTerms trial = impl_->terms;
  auto target = [&](double v) {
    slot = v;
    if (prime) impl_->model.refresh_U(trial, state_);
    else impl_->model.refresh_L(trial, state_);
    return trial.value;
  };
  const bool ok = rwmh_log_scale(value, current, target, prior_.lambda_L, prior_.lambda_U, steps_[static_cast<size_t>(id)], rng_);
  slot = value;
  if (ok) impl_->terms = std::move(trial);
  record(id, ok);
}

void GibbsSampler::update_location() {
  const Vector d = state_.d();
  auto target = [&](double loc) { return logprior_d(d, loc) + logprior_ig_location(loc, prior_.sigma_d); };
  double current = target(state_.ig_location);
  const bool ok = rwmh_log_scale(state_.ig_location, current, target, 0.0, std::numeric_limits<double>::infinity(),
                                 steps_[kLocation], rng_);
  record(kLocation, ok);
}

void GibbsSampler::update_shrinkage() {
  auto& sc = state_.spectral;
  auto& sh = state_.shrinkage;
  const auto cols = active_columns(sc);
  const Index p = sc.p();
  const Index R = sc.R();

  Vector tau = sh.tau();
  for (Index r : cols)
    for (Index j = 0; j < p; ++j)
      sh.v(j, r) = gamma_draw(prior_.nu1 + 0.5, prior_.nu1 + 0.5 * tau[r] * sc.xi(j, r) * sc.xi(j, r), rng_);

  // Delta_h | rest is Gamma: tau_r is linear in Delta_h for every r >= h.
  for (Index h = 0; h < R; ++h) {
    double shape = h == 0 ? prior_.kappa1 : prior_.kappa2;
    double rate = 1.0;
    tau = sh.tau();
    for (Index r : cols) {
      if (r < h) continue;
      const double tau_without = tau[r] / sh.delta[h];
      double ss = 0.0;
      for (Index j = 0; j < p; ++j) ss += sh.v(j, r) * sc.xi(j, r) * sc.xi(j, r);
      shape += 0.5 * static_cast<double>(p);
      rate += 0.5 * tau_without * ss;
    }
    sh.delta[h] = gamma_draw(shape, rate, rng_);
  }

  if (cfg_.update_sigma_kappa && !cols.empty()) {
    double ss = 0.0;
    for (Index r : cols) ss += sc.eta.col(r).dot(impl_->penalty * sc.eta.col(r));
    const double shape = prior_.c1 + 0.5 * static_cast<double>(sc.K() * static_cast<Index>(cols.size()));
    sh.sigma_kappa = 1.0 / gamma_draw(shape, prior_.c1 + 0.5 * ss, rng_);
  }
}

void GibbsSampler::compute_preconditioner() {
  const Matrix& W = impl_->ctx->whittle().W;
  const Index p = state_.p();
  const Vector d = state_.d();
  const Vector energy = W.rowwise().squaredNorm();
  const double prior_prec = 1.0 / (prior_.sigma_T * prior_.sigma_T);
  for (Index i = 1; i < p; ++i)
    for (Index j = 0; j < i; ++j)
      l_scale_[packed_index(i, j)] = 1.0 / std::sqrt(d[j] * d[j] * energy[i] + prior_prec);
}

void GibbsSampler::activate_thresholds() {
  const double n = static_cast<double>(std::max<Index>(mean_count_, 1));
  auto level = [&](const Vector& sum) {
    std::vector<double> mags(static_cast<size_t>(sum.size()));
    for (Index k = 0; k < sum.size(); ++k) mags[static_cast<size_t>(k)] = std::abs(sum[k] / n);
    const double q = quantile(mags, cfg_.lambda_quantile);
    return std::clamp(std::max(cfg_.lambda_floor, q), prior_.lambda_L, prior_.lambda_U);
  };
  const double before_l = state_.thresholds.lambda;
  const double before_a = state_.thresholds.lambda_prime;
  state_.thresholds.lambda = level(l_mean_sum_);
  state_.thresholds.lambda_prime = level(a_mean_sum_);
  impl_->model.refresh_L(impl_->terms, state_);
  impl_->model.refresh_U(impl_->terms, state_);
  out_.adaptation_log.push_back({iteration_, "lambda", "activate", before_l, state_.thresholds.lambda});
  out_.adaptation_log.push_back({iteration_, "lambda_prime", "activate", before_a, state_.thresholds.lambda_prime});
}

void GibbsSampler::truncate_rank() {
  auto& sc = state_.spectral;
  const auto cols = active_columns(sc);
  std::vector<Index> dropped;
  for (Index r : cols)
    if (sc.xi.col(r).cwiseAbs().maxCoeff() < cfg_.truncation_epsilon) dropped.push_back(r);
  if (dropped.size() == cols.size() && !dropped.empty()) {
    // keep the strongest column so the spectral model stays identifiable in rank
    Index keep = dropped.front();
    for (Index r : dropped)
      if (sc.xi.col(r).norm() > sc.xi.col(keep).norm()) keep = r;
    dropped.erase(std::find(dropped.begin(), dropped.end(), keep));
  }
  for (Index r : dropped) {
    sc.active[static_cast<size_t>(r)] = 0;
    sc.xi.col(r).setZero();
  }
  impl_->model.refresh_spectral(impl_->terms, state_);
  out_.adaptation_log.push_back({iteration_, "xi", "rank_truncation", static_cast<double>(cols.size()),
                                 static_cast<double>(sc.active_rank())});
}

void GibbsSampler::adapt() {
  for (int b = 0; b < kNumBlocks; ++b) {
    auto& w = windows_[static_cast<size_t>(b)];
    if (w.attempts == 0) continue;
    const bool lmc = b == kXi || b == kEta || b == kL || b == kLogD ||
                     (b == kA && cfg_.rotation_kernel == RotationKernel::Langevin);
    const double f = lmc ? w.factor(cfg_.lmc_target_low, cfg_.lmc_target_high)
                         : w.factor(cfg_.mh_target_low, cfg_.mh_target_high);
    if (f != 1.0) {
      const double before = steps_[static_cast<size_t>(b)];
      steps_[static_cast<size_t>(b)] *= f;
      if (b == kA && cfg_.rotation_kernel == RotationKernel::AdaptiveMH)
        a_proposal_.set_scale(steps_[kA] / cfg_.rotation_scale);
      out_.adaptation_log.push_back({iteration_, block_label(b), "step", before, steps_[static_cast<size_t>(b)]});
    }
    w.reset();
  }
}

void GibbsSampler::store() {
  auto& dr = out_.draws;
  const Index k = dr.size();
  const Index p = state_.p();
  dr.iterations.push_back(iteration_);
  dr.L.row(k) = effective_L(state_.l_raw, state_.thresholds.lambda).transpose();
  dr.d.row(k) = state_.d().transpose();
  dr.A.row(k) = effective_A(state_.a_raw, state_.thresholds.lambda_prime).transpose();
  dr.lambda[k] = state_.thresholds.lambda;
  dr.lambda_prime[k] = state_.thresholds.lambda_prime;
  const Matrix theta = impl_->terms.theta;
  dr.theta.row(k) = theta.reshaped(1, p * prior_.K);
  dr.log_likelihood[k] = log_whittle(state_, *impl_->ctx, Thresholding::Exact);
}

ChainOutput GibbsSampler::output() const {
  ChainOutput o = out_;
  o.draws.resize_rows(out_.draws.size());
  o.acceptance = stats_;
  o.wall_seconds = elapsed_;
  return o;
}

SamplerCheckpoint GibbsSampler::checkpoint() const {
  SamplerCheckpoint cp;
  cp.iteration = iteration_;
  cp.state = state_;
  cp.steps = steps_;
  cp.l_scale = l_scale_;
  cp.windows = windows_;
  cp.rotation_proposal = a_proposal_.snapshot();
  cp.l_mean_sum = l_mean_sum_;
  cp.a_mean_sum = a_mean_sum_;
  cp.mean_count = mean_count_;
  std::ostringstream os;
  os << rng_;
  cp.rng_state = os.str();
  cp.partial = output();
  return cp;
}

Matrix joint_diagonalizer(std::vector<Matrix> mats, double tol, int max_sweeps) {
  if (mats.empty()) throw InvalidArgument("joint_diagonalizer: no matrices");
  const Index p = mats.front().rows();
  Matrix V = Matrix::Identity(p, p);
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    bool rotated = false;
    for (Index i = 0; i + 1 < p; ++i) {
      for (Index j = i + 1; j < p; ++j) {
        double g11 = 0.0, g12 = 0.0, g22 = 0.0;
        for (const auto& C : mats) {
          const double a = C(i, i) - C(j, j);
          const double b = C(i, j) + C(j, i);
          g11 += a * a;
          g12 += a * b;
          g22 += b * b;
        }
        const double ton = g11 - g22;
        const double toff = 2.0 * g12;
        const double theta = 0.5 * std::atan2(toff, ton + std::sqrt(ton * ton + toff * toff));
        const double c = std::cos(theta);
        const double s = std::sin(theta);
        if (std::abs(s) <= tol) continue;
        rotated = true;
        for (auto& C : mats) {
          for (Index k = 0; k < p; ++k) {
            const double ci = C(i, k), cj = C(j, k);
            C(i, k) = c * ci + s * cj;
            C(j, k) = -s * ci + c * cj;
          }
          for (Index k = 0; k < p; ++k) {
            const double ci = C(k, i), cj = C(k, j);
            C(k, i) = c * ci + s * cj;
            C(k, j) = -s * ci + c * cj;
          }
        }
        for (Index k = 0; k < p; ++k) {
          const double vi = V(k, i), vj = V(k, j);
          V(k, i) = c * vi + s * vj;
          V(k, j) = -s * vi + c * vj;
        }
      }
    }
    if (!rotated) break;
  }
  return V;
}

Matrix second_order_rotation(const Matrix& X, Index max_lag) {
  const Index p = X.rows();
  const Index T = X.cols();
  if (max_lag < 1 || max_lag >= T) throw InvalidArgument("second_order_rotation: need 1 <= max_lag < T");
  std::vector<Matrix> lagged;
  for (Index h = 1; h <= max_lag; ++h) {
    const Matrix C = X.leftCols(T - h) * X.rightCols(T - h).transpose() / static_cast<double>(T);
    lagged.push_back(0.5 * (C + C.transpose()));
  }
  const Matrix V = joint_diagonalizer(lagged);

  // greedy column matching towards the identity, then signs and orientation
  Matrix U(p, p);
  std::vector<char> row_used(static_cast<size_t>(p), 0), col_used(static_cast<size_t>(p), 0);
  for (Index step = 0; step < p; ++step) {
    Index bi = -1, bj = -1;
    double best = -1.0;
    for (Index i = 0; i < p; ++i) {
      if (row_used[static_cast<size_t>(i)]) continue;
      for (Index j = 0; j < p; ++j) {
        if (col_used[static_cast<size_t>(j)]) continue;
        if (std::abs(V(i, j)) > best) {
          best = std::abs(V(i, j));
          bi = i;
          bj = j;
        }
      }
    }
    row_used[static_cast<size_t>(bi)] = col_used[static_cast<size_t>(bj)] = 1;
    U.col(bi) = V(bi, bj) < 0.0 ? Vector(-V.col(bj)) : Vector(V.col(bj));
  }
  if (U.determinant() < 0.0) {
    Index weakest = 0;
    for (Index j = 1; j < p; ++j)
      if (U(j, j) < U(weakest, weakest)) weakest = j;
    U.col(weakest) = -U.col(weakest);
  }
  return U;
}

Matrix inverse_cayley(const Matrix& U) {
  const Index p = U.rows();
  const Matrix I = Matrix::Identity(p, p);
  Matrix A = (I + U).transpose().partialPivLu().solve((I - U).transpose()).transpose();
  return 0.5 * (A - A.transpose());
}

Vector series_scales(const Matrix& Y) {
  Vector s = (Y.rowwise().squaredNorm() / static_cast<double>(Y.cols())).array().sqrt();
  if (!(s.array() > 0.0).all()) throw InvalidArgument("a series is identically zero");
  return s;
}

void unstandardize(ChainOutput& chain, const Vector& scale, Index T) {
  const Index p = chain.p;
  if (scale.size() != p) throw InvalidArgument("unstandardize: scale length does not match p");
  const double shift = static_cast<double>(T) * scale.array().log().sum();
  for (Index k = 0; k < chain.n_draws(); ++k) {
    for (Index i = 1; i < p; ++i)
      for (Index j = 0; j < i; ++j) chain.draws.L(k, packed_index(i, j)) *= scale[j] / scale[i];
    for (Index i = 0; i < p; ++i) chain.draws.d(k, i) /= scale[i];
    chain.draws.log_likelihood[k] -= shift;
  }
}

ChainOutput gibbs_run(const Matrix& Y, const PriorConfig& prior, const SamplerConfig& cfg) {
  if (!cfg.standardize) {
    GibbsSampler s(Y, prior, cfg);
    s.run();
    return s.output();
  }
  const Vector scale = series_scales(Y);
  GibbsSampler s(scale.cwiseInverse().asDiagonal() * Y, prior, cfg);
  s.run();
  ChainOutput out = s.output();
  unstandardize(out, scale, Y.cols());
  return out;
}

std::vector<ChainOutput> run_chains(const Matrix& Y, const PriorConfig& prior, const SamplerConfig& cfg,
                                    Index n_chains, Index n_workers) {
  if (n_chains < 1) throw InvalidArgument("need at least one chain");
  std::vector<ChainOutput> outputs(static_cast<size_t>(n_chains));
  std::vector<std::exception_ptr> errors(static_cast<size_t>(n_chains));
  auto work = [&](Index c) {
    try {
      SamplerConfig local = cfg;
      local.seed = cfg.seed + static_cast<std::uint64_t>(c);
      outputs[static_cast<size_t>(c)] = gibbs_run(Y, prior, local);
    } catch (...) {
      errors[static_cast<size_t>(c)] = std::current_exception();
    }
  };
  const Index workers = std::clamp<Index>(n_workers, 1, n_chains);
  if (workers == 1) {
    for (Index c = 0; c < n_chains; ++c) work(c);
  } else {
    for (Index start = 0; start < n_chains; start += workers) {
      std::vector<std::thread> pool;
      for (Index c = start; c < std::min(n_chains, start + workers); ++c) pool.emplace_back(work, c);
      for (auto& t : pool) t.join();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return outputs;
}

double effective_sample_size(const Vector& trace) {
  const Index n = trace.size();
  if (n < 4) return static_cast<double>(n);
  const Vector x = trace.array() - trace.mean();
  const double var = x.squaredNorm() / static_cast<double>(n);
  if (var <= 0.0) return static_cast<double>(n);
  auto rho = [&](Index lag) {
    return x.head(n - lag).dot(x.tail(n - lag)) / (static_cast<double>(n) * var);
  };
  double sum = 0.0;
  for (Index k = 0; 2 * k + 1 < n; ++k) {
    const double pair = rho(2 * k) + rho(2 * k + 1);
    if (pair <= 0.0) break;
    sum += pair;
  }
  const double tau = std::max(1.0, 2.0 * sum - 1.0);
  return static_cast<double>(n) / tau;
}

}  // namespace out
