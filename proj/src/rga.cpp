#include "acpkan/rga.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace acpkan {

void RgaConfig::validate() const {
  if (!(eta > 0.0 && eta <= 1.0)) throw std::invalid_argument("rga: eta must lie in (0, 1]");
  if (!(beta_w > 0.0 && beta_w <= 1.0)) throw std::invalid_argument("rga: beta_w must lie in (0, 1]");
  if (!(eps > 0.0)) throw std::invalid_argument("rga: eps must be positive");
  if (gra_stride < 1) throw std::invalid_argument("rga: gra_stride must be at least 1");
}

void rba_update(std::span<double> weights, std::span<const double> abs_residuals, double eta) {
  if (weights.size() != abs_residuals.size()) throw std::invalid_argument("rba_update: length mismatch");
  double max_r = 0.0;
  for (double r : abs_residuals) max_r = std::max(max_r, r);
  if (max_r == 0.0) return;
  for (std::size_t j = 0; j < weights.size(); ++j) {
    weights[j] = (1.0 - eta) * weights[j] + eta * (abs_residuals[j] / max_r);
  }
}

GradStats grad_stats(std::span<const double> g) {
  if (g.empty()) throw std::invalid_argument("grad_stats: empty gradient");
  GradStats s;
  double sum = 0.0;
  for (double v : g) {
    const double a = std::fabs(v);
    s.max_abs = std::max(s.max_abs, a);
    sum += a;
  }
  s.mean_abs = sum / static_cast<double>(g.size());
  return s;
}

double gra_update(double& lambda, double g_r_max, double g_term_mean, double beta_w, double eps) {
  const double target = g_r_max / (eps + g_term_mean);
  lambda = (1.0 - beta_w) * lambda + beta_w * target;
  lambda = std::max(lambda, gra_floor(eps));
  return lambda;
}

RgaState::RgaState(std::span<const std::size_t> term_sizes, const RgaConfig& config) {
  if (term_sizes.empty()) throw std::invalid_argument("rga: a residual term is required");
  const double w0 = config.enabled ? 0.0 : 1.0;
  for (std::size_t n : term_sizes) rba_.emplace_back(n, w0);
  lambda_.assign(term_sizes.size() - 1, config.enabled ? 1.0 : gra_floor(config.eps));
}

double RgaState::rba_mean(std::size_t term) const {
  const auto& w = rba_[term];
  if (w.empty()) return 0.0;
  return std::accumulate(w.begin(), w.end(), 0.0) / static_cast<double>(w.size());
}

double RgaState::data_factor(std::size_t term, const RgaConfig& config) const {
  if (!config.enabled) return config.lambda_d;
  const double lambda = lambda_gra(term);
  return config.lambda_d * (config.use_log ? std::log(lambda) : lambda);
}

void RgaState::update_gra(std::span<const GradientVector> grads, const RgaConfig& config) {
  if (grads.size() != rba_.size()) throw std::invalid_argument("update_gra: one gradient per term is required");
  const double g_r_max = grad_stats(grads[0]).max_abs;
  for (std::size_t k = 1; k < grads.size(); ++k) {
    gra_update(lambda_gra(k), g_r_max, grad_stats(grads[k]).mean_abs, config.beta_w, config.eps);
  }
}

Var weighted_mean_square(Tape& tape, std::span<const Var> residuals, std::span<const double> weights) {
  if (residuals.size() != weights.size()) throw std::invalid_argument("weighted_mean_square: length mismatch");
  if (residuals.empty()) throw std::invalid_argument("weighted_mean_square: empty term");
  Var acc = tape.scale(tape.square(residuals[0]), weights[0]);
  for (std::size_t j = 1; j < residuals.size(); ++j) {
    acc = tape.add(acc, tape.scale(tape.square(residuals[j]), weights[j]));
  }
  return tape.scale(acc, 1.0 / static_cast<double>(residuals.size()));
}

Var rga_total_loss(Tape& tape, std::span<const std::vector<Var>> residuals, const RgaState& state,
                   const RgaConfig& config) {
  if (residuals.size() != state.term_count()) throw std::invalid_argument("rga_total_loss: term count mismatch");
  Var total = tape.scale(weighted_mean_square(tape, residuals[0], state.rba(0)), state.residual_factor(config));
  for (std::size_t k = 1; k < residuals.size(); ++k) {
    Var term = weighted_mean_square(tape, residuals[k], state.rba(k));
    total = tape.add(total, tape.scale(term, state.data_factor(k, config)));
  }
  return total;
}

}  // namespace acpkan
