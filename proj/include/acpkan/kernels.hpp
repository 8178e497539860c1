#pragma once

#include <span>
#include <vector>

#include "acpkan/model.hpp"
#include "acpkan/pde.hpp"

namespace acpkan {

/// Result of one loss term at the current parameters.
struct TermEvaluation {
  /// mean_j w_j rho_j^2 with the weights after this step's RBA update.
  double loss = 0.0;
  double max_abs_residual = 0.0;
  /// d loss / d theta, one entry per scalar parameter.
  GradientVector grad;
};

/// Records every residual of `term`, applies the RBA update to `weights`
/// (skipped when eta == 0), and differentiates the weighted mean square.
/// Single tape; the reference implementation.
TermEvaluation evaluate_term_serial(const Network& model, std::span<const double> params, const TermSpec& term,
                                    std::span<double> weights, double eta);

/// Same contract, with points split into fixed shards evaluated by OpenMP
/// threads. Shard results are reduced in shard order, so the output does not
/// depend on the thread count.
TermEvaluation evaluate_term_parallel(const Network& model, std::span<const double> params, const TermSpec& term,
                                      std::span<double> weights, double eta, std::size_t shard_size = 16);

/// Residual values only (no gradient).
std::vector<double> term_residuals(const Network& model, std::span<const double> params, const TermSpec& term);

/// First network output at every point; order-0 forward with constant
/// parameters.
std::vector<double> predict_points_serial(const Network& model, const CollocationSet& points);
std::vector<double> predict_points(const Network& model, const CollocationSet& points);

}  // namespace acpkan
