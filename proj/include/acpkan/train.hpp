#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "acpkan/model.hpp"
#include "acpkan/pde.hpp"
#include "acpkan/rga.hpp"

namespace acpkan {

/// Raised when a loss term becomes non-finite; names the term.
class NumericalAbort : public std::runtime_error {
 public:
  NumericalAbort(const std::string& term, int step)
      : std::runtime_error("non-finite loss in term '" + term + "' at step " + std::to_string(step)),
        term_(term),
        step_(step) {}
  const std::string& term() const { return term_; }
  int step() const { return step_; }

 private:
  std::string term_;
  int step_;
};

struct AdamWConfig {
  double lr = 1e-3;
  double weight_decay = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void validate() const;
};

/// Adam with decoupled weight decay:
///   theta -= lr * (m_hat / (sqrt(v_hat) + eps) + wd * theta)
class AdamW {
 public:
  AdamW() = default;
  AdamW(std::size_t n, const AdamWConfig& config);

  void step(std::span<double> params, std::span<const double> grads);

  std::size_t steps() const { return t_; }
  const AdamWConfig& config() const { return config_; }
  std::span<const double> first_moment() const { return m_; }
  std::span<const double> second_moment() const { return v_; }

 private:
  AdamWConfig config_;
  std::vector<double> m_;
  std::vector<double> v_;
  std::size_t t_ = 0;
};

struct Metrics {
  double rmae = 0.0;
  double rrmse = 0.0;
};

/// rMAE = sum|p - r| / sum|r|, rRMSE = sqrt(sum (p - r)^2 / sum r^2).
/// Throws std::domain_error when the reference is identically zero.
Metrics compute_metrics(std::span<const double> predicted, std::span<const double> reference);
Metrics metrics_eval(const Network& model, const Reference& reference);

struct TrainConfig {
  std::string problem = "reaction";
  /// acpkan | mlp
  std::string model = "acpkan";
  AcPkanConfig acpkan = AcPkanConfig::desk();
  std::vector<int> mlp_sizes = MlpPinn::small_sizes();
  int epochs = 3000;
  RgaConfig rga;
  AdamWConfig adam;
  std::uint64_t seed = 0;
  /// Metric columns are filled every `metrics_stride` steps and on the last step.
  int metrics_stride = 100;
  ProblemOptions problem_options;
  bool parallel = true;
  std::size_t shard_size = 16;

  void validate() const;
};

/// Builds the configured architecture for `d_in` inputs and initializes it
/// from Rng(seed).
std::unique_ptr<Network> make_model(const TrainConfig& config, int d_in);

/// Defaults of the 1D fitting task: 751-parameter AC-PKAN, plain data loss,
/// 10000 steps at lr 3e-3.
TrainConfig fit_function_config();

struct StepRecord {
  int step = 0;
  double loss_total = 0.0;
  /// Weighted mean square of every term; [0] is the residual term.
  std::vector<double> term_losses;
  /// GRA weight of every data term (terms 1..K).
  std::vector<double> lambda_gra;
  /// Mean RBA weight of every term.
  std::vector<double> rba_mean;
  std::optional<Metrics> metrics;
};

std::string csv_header(const PdeProblem& problem);
std::string csv_row(const StepRecord& record);

/// One optimization run. Owns the RGA and optimizer state; the model is
/// updated in place.
class Trainer {
 public:
  Trainer(const TrainConfig& config, const PdeProblem& problem, Network& model);

  /// Evaluates all terms, updates RBA / GRA state, and applies one AdamW
  /// step. Metrics are evaluated after the update when `with_metrics`.
  StepRecord step(bool with_metrics = false);

  int steps_done() const { return step_; }
  const RgaState& rga_state() const { return rga_; }
  const AdamW& optimizer() const { return adam_; }
  /// Gradient assembled in the last step.
  std::span<const double> last_gradient() const { return grad_; }

 private:
  TrainConfig config_;
  const PdeProblem* problem_;
  Network* model_;
  RgaState rga_;
  AdamW adam_;
  std::vector<double> grad_;
  int step_ = 0;
};

struct TrainResult {
  std::vector<StepRecord> history;
  std::optional<Metrics> initial;
  std::optional<Metrics> final;
};

/// Runs config.epochs steps. Writes the CSV (header + one row per step) to
/// `csv` when given. Throws NumericalAbort on a non-finite loss.
TrainResult train(const TrainConfig& config, const PdeProblem& problem, Network& model, std::ostream* csv = nullptr);

}  // namespace acpkan
