#pragma once

#include "out/core.hpp"
#include "out/params.hpp"
#include "out/spectral.hpp"

#include <string_view>
#include <vector>

namespace out {

/// Arctangent surrogate of 1{|x| > lambda} with width h0.
double smooth_indicator(double x, double lambda, double h0);
/// d/dx of smooth_indicator.
double smooth_indicator_derivative(double x, double lambda, double h0);

/// Continuously updated coordinate blocks that carry analytic gradients.
enum class Block { LRaw, LogD, Xi, Eta, ARaw };
Block parse_block(std::string_view tag);
std::string_view block_name(Block b);

/// How the hard threshold on L is resolved when forming the likelihood.
/// The sampler targets the smoothed surrogate; reporting uses the exact map.
enum class Thresholding { Exact, Smoothed };

/// Read-only per-dataset data: the Whittle transform plus the normalized
/// spline basis evaluated at every Fourier frequency.
class LikelihoodContext {
 public:
  LikelihoodContext(WhittleData whittle, Index K, double h0 = 1e-8);
  static LikelihoodContext from_observations(const Matrix& Y, Index K, double h0 = 1e-8);

  const WhittleData& whittle() const { return whittle_; }
  const BSplineBasis& basis() const { return basis_; }
  const Matrix& slot_basis() const { return slot_basis_; }
  const Vector& slot_counts() const { return slot_counts_; }
  double h0() const { return h0_; }
  Index p() const { return whittle_.p(); }
  Index T() const { return whittle_.T(); }
  Index K() const { return basis_.size(); }

 private:
  WhittleData whittle_;
  BSplineBasis basis_;
  Matrix slot_basis_;
  Vector slot_counts_;
  double h0_;
};

/// Cached intermediates of one likelihood evaluation. Each block update only
/// recomputes the pieces it touches.
struct WhittleTerms {
  Matrix L;        // effective L
  Vector l_slope;  // packed d L_eff / d L_raw
  Vector d;
  Matrix U;
  Matrix V;        // (I - L)^T W
  Matrix R;        // U^T D V
  Matrix theta;    // p x K
  Matrix g_slots;  // p x n_slots spectral values
  double value = 0.0;
};

class WhittleModel {
 public:
  WhittleModel(const LikelihoodContext& ctx, Thresholding mode) : ctx_(&ctx), mode_(mode) {}

  const LikelihoodContext& context() const { return *ctx_; }
  Thresholding mode() const { return mode_; }

  WhittleTerms evaluate(const ModelState& state) const;

  // Partial refreshes after a block of `state` changed; each recomputes `value`.
  void refresh_L(WhittleTerms& terms, const ModelState& state) const;
  void refresh_d(WhittleTerms& terms, const ModelState& state) const;
  void refresh_U(WhittleTerms& terms, const ModelState& state) const;
  void refresh_spectral(WhittleTerms& terms, const ModelState& state) const;

  /// Gradient of the log-likelihood in the block's flattened coordinates
  /// (packed L_raw, log d, column-major xi, column-major eta, packed A_raw).
  Vector gradient(const WhittleTerms& terms, const ModelState& state, Block block) const;

 private:
  void finish(WhittleTerms& terms) const;

  const LikelihoodContext* ctx_;
  Thresholding mode_;
};

/// Core Whittle log-likelihood for explicit model matrices and spectral
/// values g_slots (p x n_slots).
double log_whittle_core(const WhittleData& whittle, const Matrix& L, const Vector& d, const Matrix& U,
                        const Matrix& g_slots);

/// Whittle log pseudo-likelihood of the state; exact thresholds by default.
double log_whittle(const ModelState& state, const LikelihoodContext& ctx,
                   Thresholding mode = Thresholding::Exact);

/// Gradient of log_whittle with the smoothed hard threshold on L.
Vector grad_log_whittle(const ModelState& state, const LikelihoodContext& ctx, Block block);

}  // namespace out
