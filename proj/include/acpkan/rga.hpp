#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "acpkan/autodiff.hpp"

namespace acpkan {

struct RgaConfig {
  /// false: static unit weights (RBA weights fixed at 1, GRA factor 1).
  bool enabled = true;
  double eta = 0.001;
  double beta_w = 0.001;
  double eps = 1e-8;
  double lambda_r = 1.0;
  double lambda_d = 1.0;
  /// Use log(lambda_gra) in the loss; false keeps the raw lambda.
  bool use_log = true;
  int gra_stride = 1;

  void validate() const;
};

/// Lower bound applied to every GRA weight: e + eps.
inline double gra_floor(double eps) { return std::numbers::e + eps; }

/// w <- (1 - eta) w + eta |r| / max|r|, element-wise. No-op when max|r| = 0.
void rba_update(std::span<double> weights, std::span<const double> abs_residuals, double eta);

struct GradStats {
  double max_abs = 0.0;
  double mean_abs = 0.0;
};

/// Max and mean of |g_p| over the scalar parameters.
GradStats grad_stats(std::span<const double> g);

/// lambda_hat = g_r_max / (eps + g_term_mean); EMA with rate beta_w; clamp at
/// e + eps. Updates `lambda` in place and returns the new value.
double gra_update(double& lambda, double g_r_max, double g_term_mean, double beta_w, double eps);

/// Residual-gradient attention state: one RBA weight vector per loss term
/// (term 0 is the PDE residual) and one GRA scalar per data term.
class RgaState {
 public:
  RgaState() = default;
  /// `term_sizes[0]` is the residual term; the rest are data terms.
  RgaState(std::span<const std::size_t> term_sizes, const RgaConfig& config);

  std::size_t term_count() const { return rba_.size(); }
  std::span<double> rba(std::size_t term) { return rba_[term]; }
  std::span<const double> rba(std::size_t term) const { return rba_[term]; }
  double rba_mean(std::size_t term) const;

  /// GRA weight of data term `term` (1-based term index, term >= 1).
  double lambda_gra(std::size_t term) const { return lambda_[term - 1]; }
  double& lambda_gra(std::size_t term) { return lambda_[term - 1]; }

  /// Multiplier of data term `term` in the total loss:
  /// lambda_d * log(lambda_gra), lambda_d * lambda_gra without the log, or
  /// lambda_d when RGA is disabled.
  double data_factor(std::size_t term, const RgaConfig& config) const;
  double residual_factor(const RgaConfig& config) const { return config.lambda_r; }

  /// GRA update of every data term from per-term gradients of the
  /// RBA-weighted term losses. `grads[0]` is the residual term.
  void update_gra(std::span<const GradientVector> grads, const RgaConfig& config);

 private:
  std::vector<std::vector<double>> rba_;
  std::vector<double> lambda_;
};

/// Builds L = lambda_r L_r + sum_k factor_k L_k on the tape, where
/// L_k = mean_j w_kj rho_kj^2. RBA weights and GRA factors enter as constants.
Var rga_total_loss(Tape& tape, std::span<const std::vector<Var>> residuals, const RgaState& state,
                   const RgaConfig& config);

/// mean_j w_j rho_j^2 on the tape.
Var weighted_mean_square(Tape& tape, std::span<const Var> residuals, std::span<const double> weights);

}  // namespace acpkan
