#include "acpkan/train.hpp"

#include <cmath>
#include <cstdio>

#include "acpkan/kernels.hpp"

namespace acpkan {

void AdamWConfig::validate() const {
  if (!(lr >= 0.0)) throw std::invalid_argument("adamw: lr must be non-negative");
  if (!(weight_decay >= 0.0)) throw std::invalid_argument("adamw: weight_decay must be non-negative");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw std::invalid_argument("adamw: betas must lie in [0, 1)");
  }
  if (!(eps > 0.0)) throw std::invalid_argument("adamw: eps must be positive");
}

AdamW::AdamW(std::size_t n, const AdamWConfig& config) : config_(config), m_(n, 0.0), v_(n, 0.0) {
  config_.validate();
}

void AdamW::step(std::span<double> params, std::span<const double> grads) {
  if (params.size() != m_.size() || grads.size() != m_.size()) throw std::invalid_argument("adamw: length mismatch");
  ++t_;
  const auto& c = config_;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    m_[i] = c.beta1 * m_[i] + (1.0 - c.beta1) * g;
    v_[i] = c.beta2 * v_[i] + (1.0 - c.beta2) * g * g;
    const double m_hat = m_[i] / bc1;
    const double v_hat = v_[i] / bc2;
    params[i] -= c.lr * (m_hat / (std::sqrt(v_hat) + c.eps) + c.weight_decay * params[i]);
  }
}

Metrics compute_metrics(std::span<const double> predicted, std::span<const double> reference) {
  if (predicted.size() != reference.size()) throw std::invalid_argument("metrics: length mismatch");
  double abs_err = 0.0, abs_ref = 0.0, sq_err = 0.0, sq_ref = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    const double e = predicted[i] - reference[i];
    abs_err += std::fabs(e);
    sq_err += e * e;
    abs_ref += std::fabs(reference[i]);
    sq_ref += reference[i] * reference[i];
  }
  if (abs_ref == 0.0) throw std::domain_error("metrics: reference is identically zero");
  return {abs_err / abs_ref, std::sqrt(sq_err / sq_ref)};
}

Metrics metrics_eval(const Network& model, const Reference& reference) {
  return compute_metrics(predict_points(model, reference.points), reference.values);
}

void TrainConfig::validate() const {
  if (epochs < 1) throw std::invalid_argument("epochs must be at least 1");
  if (model != "acpkan" && model != "mlp") throw std::invalid_argument("model must be acpkan or mlp");
  if (metrics_stride < 1) throw std::invalid_argument("metrics_stride must be at least 1");
  if (shard_size == 0) throw std::invalid_argument("shard_size must be positive");
  if (rga.enabled) rga.validate();
  adam.validate();
}

TrainConfig fit_function_config() {
  TrainConfig c;
  c.problem = "fit";
  c.model = "acpkan";
  c.acpkan = AcPkanConfig::fit();
  c.rga.enabled = false;
  c.epochs = 10000;
  c.adam.lr = 3e-3;
  c.metrics_stride = 1000;
  return c;
}

std::unique_ptr<Network> make_model(const TrainConfig& config, int d_in) {
  std::unique_ptr<Network> m;
  if (config.model == "acpkan") {
    AcPkanConfig c = config.acpkan;
    c.d_in = d_in;
    m = std::make_unique<AcPkanModel>(c);
  } else if (config.model == "mlp") {
    auto sizes = config.mlp_sizes;
    if (sizes.size() < 2) throw std::invalid_argument("mlp needs at least two layer sizes");
    sizes.front() = d_in;
    m = std::make_unique<MlpPinn>(sizes);
  } else {
    throw std::invalid_argument("unknown model '" + config.model + "'");
  }
  Rng rng(config.seed);
  m->initialize(rng);
  return m;
}

std::string csv_header(const PdeProblem& problem) {
  std::string h = "step,loss_total,loss_r";
  for (std::size_t k = 1; k < problem.terms.size(); ++k) h += ",loss_" + problem.terms[k].name;
  for (std::size_t k = 1; k < problem.terms.size(); ++k) h += ",lambda_gra_" + problem.terms[k].name;
  for (const auto& t : problem.terms) h += ",rba_mean_" + t.name;
  h += ",rmae,rrmse";
  return h;
}

std::string csv_row(const StepRecord& r) {
  char buf[40];
  std::string row = std::to_string(r.step);
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, ",%.17g", v);
    row += buf;
  };
  put(r.loss_total);
  for (double v : r.term_losses) put(v);
  for (double v : r.lambda_gra) put(v);
  for (double v : r.rba_mean) put(v);
  if (r.metrics) {
    put(r.metrics->rmae);
    put(r.metrics->rrmse);
  } else {
    row += ",,";
  }
  return row;
}

namespace {

std::vector<std::size_t> term_sizes(const PdeProblem& p) {
  std::vector<std::size_t> sizes;
  for (const auto& t : p.terms) sizes.push_back(t.residual_count());
  return sizes;
}

}  // namespace

Trainer::Trainer(const TrainConfig& config, const PdeProblem& problem, Network& model)
    : config_(config), problem_(&problem), model_(&model) {
  config_.validate();
  problem.validate();
  if (model.input_dim() != problem.dim) throw std::invalid_argument("model input dimension does not match problem");
  const auto sizes = term_sizes(problem);
  rga_ = RgaState(sizes, config_.rga);
  adam_ = AdamW(model.parameter_count(), config_.adam);
}

StepRecord Trainer::step(bool with_metrics) {
  const auto& cfg = config_.rga;
  const double eta = cfg.enabled ? cfg.eta : 0.0;
  auto params = model_->parameters().values();
  const std::size_t n_terms = problem_->terms.size();

  std::vector<TermEvaluation> evals;
  evals.reserve(n_terms);
  for (std::size_t k = 0; k < n_terms; ++k) {
    const auto& term = problem_->terms[k];
    try {
      evals.push_back(config_.parallel
                          ? evaluate_term_parallel(*model_, params, term, rga_.rba(k), eta, config_.shard_size)
                          : evaluate_term_serial(*model_, params, term, rga_.rba(k), eta));
    } catch (const DomainError&) {
      // overflowed parameters surface as NaN reaching sqrt / ln
      throw NumericalAbort(term.name, step_);
    }
    if (!std::isfinite(evals.back().loss)) throw NumericalAbort(term.name, step_);
  }

  if (cfg.enabled && n_terms > 1 && step_ % cfg.gra_stride == 0) {
    std::vector<GradientVector> grads;
    grads.reserve(n_terms);
    for (auto& e : evals) grads.push_back(e.grad);
    rga_.update_gra(grads, cfg);
  }

  StepRecord rec;
  rec.step = step_;
  const double fr = rga_.residual_factor(cfg);
  grad_.assign(params.size(), 0.0);
  for (std::size_t p = 0; p < params.size(); ++p) grad_[p] = fr * evals[0].grad[p];
  rec.loss_total = fr * evals[0].loss;
  for (std::size_t k = 1; k < n_terms; ++k) {
    const double f = rga_.data_factor(k, cfg);
    for (std::size_t p = 0; p < params.size(); ++p) grad_[p] += f * evals[k].grad[p];
    rec.loss_total += f * evals[k].loss;
    rec.lambda_gra.push_back(rga_.lambda_gra(k));
  }
  for (std::size_t k = 0; k < n_terms; ++k) {
    rec.term_losses.push_back(evals[k].loss);
    rec.rba_mean.push_back(rga_.rba_mean(k));
  }
  if (!std::isfinite(rec.loss_total)) throw NumericalAbort("total", step_);

  adam_.step(params, grad_);
  ++step_;
  if (with_metrics && problem_->reference) rec.metrics = metrics_eval(*model_, *problem_->reference);
  return rec;
}

TrainResult train(const TrainConfig& config, const PdeProblem& problem, Network& model, std::ostream* csv) {
  Trainer trainer(config, problem, model);
  TrainResult result;
  if (problem.reference) result.initial = metrics_eval(model, *problem.reference);
  if (csv) *csv << csv_header(problem) << '\n';
  for (int s = 0; s < config.epochs; ++s) {
    const bool last = s + 1 == config.epochs;
    auto rec = trainer.step(last || (s + 1) % config.metrics_stride == 0);
    if (csv) *csv << csv_row(rec) << '\n';
    if (last) result.final = rec.metrics;
    result.history.push_back(std::move(rec));
  }
  return result;
}

}  // namespace acpkan
