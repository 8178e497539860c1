#include "acpkan/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <stdexcept>

#include "acpkan/rga.hpp"

namespace acpkan {

namespace {

void record_points(const Network& model, std::span<const double> params, const TermSpec& term, std::size_t begin,
                   std::size_t end, Tape& tape, std::vector<Var>& out) {
  const auto p = bind_parameters(tape, params);
  const EvalContext ctx(tape, model, p);
  for (std::size_t i = begin; i < end; ++i) {
    const std::size_t before = out.size();
    term.evaluate(ctx, i, term.points.point(i), out);
    if (out.size() - before != static_cast<std::size_t>(term.residuals_per_point)) {
      throw std::logic_error("term " + term.name + " produced the wrong number of residuals");
    }
  }
}

void check_sizes(const Network& model, std::span<const double> params, const TermSpec& term,
                 std::span<const double> weights) {
  if (params.size() != model.parameter_count()) throw std::invalid_argument("parameter vector has the wrong length");
  if (weights.size() != term.residual_count()) throw std::invalid_argument("weight vector has the wrong length");
}

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) {
    if (std::isnan(x)) return x;
    m = std::max(m, std::fabs(x));
  }
  return m;
}

}  // namespace

TermEvaluation evaluate_term_serial(const Network& model, std::span<const double> params, const TermSpec& term,
                                    std::span<double> weights, double eta) {
  check_sizes(model, params, term, weights);
  Tape tape;
  std::vector<Var> res;
  res.reserve(term.residual_count());
  record_points(model, params, term, 0, term.points.size(), tape, res);

  std::vector<double> abs_r(res.size());
  for (std::size_t j = 0; j < res.size(); ++j) abs_r[j] = std::fabs(tape.value(res[j]));
  if (eta > 0.0) rba_update(weights, abs_r, eta);

  const Var loss = weighted_mean_square(tape, res, weights);
  TermEvaluation out;
  out.loss = tape.value(loss);
  out.max_abs_residual = max_abs(abs_r);
  out.grad = tape.backward(loss);
  return out;
}

TermEvaluation evaluate_term_parallel(const Network& model, std::span<const double> params, const TermSpec& term,
                                      std::span<double> weights, double eta, std::size_t shard_size) {
  check_sizes(model, params, term, weights);
  if (shard_size == 0) throw std::invalid_argument("shard_size must be positive");
  const std::size_t n_points = term.points.size();
  const std::size_t n_shards = (n_points + shard_size - 1) / shard_size;
  const std::size_t rpp = static_cast<std::size_t>(term.residuals_per_point);

  // tapes keep their storage between calls
  static thread_local std::vector<Tape> tapes;
  if (tapes.size() < n_shards) tapes.resize(n_shards);
  std::vector<std::vector<Var>> res(n_shards);
  std::vector<std::exception_ptr> errors(n_shards);

#pragma omp parallel for schedule(dynamic, 1)
  for (std::size_t s = 0; s < n_shards; ++s) {
    try {
      const std::size_t b = s * shard_size;
      const std::size_t e = std::min(n_points, b + shard_size);
      res[s].reserve((e - b) * rpp);
      tapes[s].clear();
      record_points(model, params, term, b, e, tapes[s], res[s]);
    } catch (...) {
      errors[s] = std::current_exception();
    }
  }
  for (const auto& err : errors) {
    if (err) std::rethrow_exception(err);
  }

  std::vector<double> r(term.residual_count());
  for (std::size_t s = 0, k = 0; s < n_shards; ++s) {
    for (Var v : res[s]) r[k++] = tapes[s].value(v);
  }
  std::vector<double> abs_r(r.size());
  for (std::size_t j = 0; j < r.size(); ++j) abs_r[j] = std::fabs(r[j]);
  if (eta > 0.0) rba_update(weights, abs_r, eta);

  const double inv_n = 1.0 / static_cast<double>(r.size());
  TermEvaluation out;
  double acc = 0.0;
  for (std::size_t j = 0; j < r.size(); ++j) acc += weights[j] * r[j] * r[j];
  out.loss = acc * inv_n;
  out.max_abs_residual = max_abs(abs_r);

  std::vector<GradientVector> partial(n_shards);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::size_t s = 0; s < n_shards; ++s) {
    const std::size_t base = s * shard_size * rpp;
    std::vector<double> seeds(res[s].size());
    bool any = false;
    for (std::size_t j = 0; j < seeds.size(); ++j) {
      seeds[j] = 2.0 * weights[base + j] * r[base + j] * inv_n;
      any = any || seeds[j] != 0.0;
    }
    if (any) partial[s] = tapes[s].backward(res[s], seeds);
  }

  out.grad.assign(params.size(), 0.0);
  for (const auto& g : partial) {
    if (g.empty()) continue;
    for (std::size_t p = 0; p < g.size(); ++p) out.grad[p] += g[p];
  }
  return out;
}

std::vector<double> term_residuals(const Network& model, std::span<const double> params, const TermSpec& term) {
  static thread_local Tape tape;
  tape.clear();
  std::vector<Var> res;
  record_points(model, params, term, 0, term.points.size(), tape, res);
  std::vector<double> out(res.size());
  for (std::size_t j = 0; j < res.size(); ++j) out[j] = tape.value(res[j]);
  return out;
}

std::vector<double> predict_points_serial(const Network& model, const CollocationSet& points) {
  std::vector<double> out(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) out[i] = predict(model, points.point(i))[0];
  return out;
}

std::vector<double> predict_points(const Network& model, const CollocationSet& points) {
  std::vector<double> out(points.size());
  const auto values = model.parameters().values();
  const long n = static_cast<long>(points.size());
#pragma omp parallel
  {
    Tape tape;
#pragma omp for schedule(static)
    for (long i = 0; i < n; ++i) {
      tape.clear();
      const auto p = bind_constants(tape, values);
      out[static_cast<std::size_t>(i)] = model.forward(tape, p, points.point(static_cast<std::size_t>(i)), 0)[0].value();
    }
  }
  return out;
}

}  // namespace acpkan
