#include "acpkan/selfcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "acpkan/kernels.hpp"
#include "acpkan/rga.hpp"

namespace acpkan {

namespace {

struct WeightedLoss {
  const Network* model;
  const PdeProblem* problem;
  std::vector<std::vector<double>> weights;
  std::vector<double> factors;

  double value(std::span<const double> params) const {
    double total = 0.0;
    for (std::size_t k = 0; k < problem->terms.size(); ++k) {
      const auto r = term_residuals(*model, params, problem->terms[k]);
      double acc = 0.0;
      for (std::size_t j = 0; j < r.size(); ++j) acc += weights[k][j] * r[j] * r[j];
      total += factors[k] * acc / static_cast<double>(r.size());
    }
    return total;
  }

  GradientVector gradient(std::span<const double> params) const {
    GradientVector g(params.size(), 0.0);
    for (std::size_t k = 0; k < problem->terms.size(); ++k) {
      auto w = weights[k];
      const auto e = evaluate_term_parallel(*model, params, problem->terms[k], w, 0.0);
      for (std::size_t p = 0; p < g.size(); ++p) g[p] += factors[k] * e.grad[p];
    }
    return g;
  }
};

// Seeded subset with at least one entry from every tensor.
std::vector<std::size_t> pick_parameters(const Network& model, std::size_t max_params, Rng& rng) {
  const std::size_t n = model.parameter_count();
  if (max_params == 0 || max_params >= n) {
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), 0);
    return all;
  }
  std::vector<std::size_t> picked;
  for (const auto& t : model.parameters().tensors()) {
    picked.push_back(t.offset + static_cast<std::size_t>(rng.uniform() * static_cast<double>(t.size)));
  }
  while (picked.size() < max_params) picked.push_back(static_cast<std::size_t>(rng.uniform() * static_cast<double>(n)));
  std::sort(picked.begin(), picked.end());
  picked.erase(std::unique(picked.begin(), picked.end()), picked.end());
  return picked;
}

}  // namespace

GradcheckReport run_gradcheck(const Network& model, const PdeProblem& problem, const GradcheckOptions& o) {
  Rng rng(o.seed);
  WeightedLoss loss{&model, &problem, {}, {}};
  for (const auto& t : problem.terms) {
    std::vector<double> w(t.residual_count());
    for (auto& v : w) v = rng.uniform(0.5, 1.0);
    loss.weights.push_back(std::move(w));
    loss.factors.push_back(loss.factors.empty() ? 1.0 : std::log(rng.uniform(gra_floor(1e-8), 10.0)));
  }

  GradcheckReport rep;
  std::vector<double> params(model.parameters().values().begin(), model.parameters().values().end());
  const auto analytic = loss.gradient(params);
  for (std::size_t p : pick_parameters(model, o.max_params, rng)) {
    const double saved = params[p];
    params[p] = saved + o.h_param;
    const double fp = loss.value(params);
    params[p] = saved - o.h_param;
    const double fm = loss.value(params);
    params[p] = saved;
    const double fd = (fp - fm) / (2.0 * o.h_param);
    const double denom = std::max({std::fabs(analytic[p]), std::fabs(fd), 1e-4});
    rep.param_rel_error = std::max(rep.param_rel_error, std::fabs(analytic[p] - fd) / denom);
    ++rep.params_checked;
  }

  const int d = model.input_dim();
  for (int q = 0; q < o.jet_points; ++q) {
    std::vector<double> x(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) {
      const auto [a, b] = problem.domain[static_cast<std::size_t>(i)];
      x[static_cast<std::size_t>(i)] = rng.uniform(a, b);
    }
    Tape tape;
    const auto pv = bind_constants(tape, model.parameters().values());
    const Jet u = model.forward(tape, pv, x, 2)[0];
    auto f = [&](std::vector<double> y) { return predict(model, y)[0]; };
    for (int i = 0; i < d; ++i) {
      auto xp = x, xm = x;
      xp[static_cast<std::size_t>(i)] += o.h_first;
      xm[static_cast<std::size_t>(i)] -= o.h_first;
      const double fd1 = (f(xp) - f(xm)) / (2.0 * o.h_first);
      rep.jet_first_error = std::max(rep.jet_first_error, std::fabs(u.d(i) - fd1) / std::max(std::fabs(fd1), 1.0));
      for (int j = i; j < d; ++j) {
        const double h = o.h_second;
        double fd2;
        if (i == j) {
          auto a = x, b = x;
          a[static_cast<std::size_t>(i)] += h;
          b[static_cast<std::size_t>(i)] -= h;
          fd2 = (f(a) - 2.0 * f(x) + f(b)) / (h * h);
        } else {
          auto pp = x, pm = x, mp = x, mm = x;
          pp[static_cast<std::size_t>(i)] += h, pp[static_cast<std::size_t>(j)] += h;
          pm[static_cast<std::size_t>(i)] += h, pm[static_cast<std::size_t>(j)] -= h;
          mp[static_cast<std::size_t>(i)] -= h, mp[static_cast<std::size_t>(j)] += h;
          mm[static_cast<std::size_t>(i)] -= h, mm[static_cast<std::size_t>(j)] -= h;
          fd2 = (f(pp) - f(pm) - f(mp) + f(mm)) / (4.0 * h * h);
        }
        rep.jet_second_error =
            std::max(rep.jet_second_error, std::fabs(u.d2(i, j) - fd2) / std::max(std::fabs(fd2), 1.0));
      }
    }
  }
  return rep;
}

}  // namespace acpkan
