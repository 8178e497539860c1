#include "acpkan/rankdiag.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace acpkan {

namespace {

// T_n(z) and T_n'(z), n = 0..degree.
void cheby_values(double z, int degree, std::vector<double>& T, std::vector<double>& T1) {
  const std::size_t nb = static_cast<std::size_t>(degree + 1);
  T.assign(nb, 0.0);
  T1.assign(nb, 0.0);
  T[0] = 1.0;
  if (degree >= 1) {
    T[1] = z;
    T1[1] = 1.0;
  }
  for (std::size_t n = 2; n < nb; ++n) {
    T[n] = 2.0 * z * T[n - 1] - T[n - 2];
    T1[n] = 2.0 * T[n - 1] + 2.0 * z * T1[n - 1] - T1[n - 2];
  }
}

std::vector<double> layer_forward(const Cheby1KanLayer& layer, std::span<const double> values,
                                  std::span<const double> x) {
  if (static_cast<int>(x.size()) != layer.d_in()) throw std::invalid_argument("cheby stack: dimension mismatch");
  std::vector<double> y(static_cast<std::size_t>(layer.d_out()), 0.0), T, T1;
  for (int i = 0; i < layer.d_in(); ++i) {
    cheby_values(std::tanh(x[static_cast<std::size_t>(i)]), layer.degree(), T, T1);
    for (int k = 0; k < layer.d_out(); ++k) {
      double s = 0.0;
      for (int n = 0; n <= layer.degree(); ++n) s += values[layer.coeff_index(i, k, n)] * T[static_cast<std::size_t>(n)];
      y[static_cast<std::size_t>(k)] += s;
    }
  }
  return y;
}

std::vector<Jet> seed_first_order(Tape& tape, std::span<const double> x) {
  std::vector<Jet> in;
  const int d = static_cast<int>(x.size());
  for (int i = 0; i < d; ++i) in.push_back(jet_input(tape, x[static_cast<std::size_t>(i)], i, d, 1));
  return in;
}

DenseMatrix jacobian_of(const std::vector<Jet>& y, int d_in) {
  DenseMatrix j(static_cast<int>(y.size()), d_in);
  for (int k = 0; k < j.rows(); ++k) {
    for (int i = 0; i < d_in; ++i) j(k, i) = y[static_cast<std::size_t>(k)].d(i);
  }
  return j;
}

}  // namespace

ChebyStack::ChebyStack(std::span<const int> widths, int degree) {
  if (widths.size() < 2) throw std::invalid_argument("cheby stack needs at least one layer");
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    layers_.emplace_back(params_, "cheby." + std::to_string(l), widths[l], widths[l + 1], degree);
  }
}

ChebyStack ChebyStack::random(std::span<const int> widths, int degree, Rng& rng, double stddev) {
  ChebyStack s(widths, degree);
  for (auto& v : s.params_.values()) v = rng.normal(0.0, stddev);
  return s;
}

ChebyStack ChebyStack::random_square(int width, int degree, int depth, Rng& rng, double stddev) {
  if (depth < 1) throw std::invalid_argument("cheby stack depth must be positive");
  std::vector<int> widths(static_cast<std::size_t>(depth + 1), width);
  return random(widths, degree, rng, stddev);
}

std::vector<double> ChebyStack::forward(std::span<const double> x, int depth) const {
  if (depth < 0) depth = this->depth();
  std::vector<double> h(x.begin(), x.end());
  for (int l = 0; l < depth; ++l) h = layer_forward(layers_[static_cast<std::size_t>(l)], params_.values(), h);
  return h;
}

DenseMatrix layer_jacobian(const Cheby1KanLayer& layer, std::span<const double> values, std::span<const double> x,
                           bool scaled) {
  if (static_cast<int>(x.size()) != layer.d_in()) throw std::invalid_argument("layer_jacobian: dimension mismatch");
  DenseMatrix j(layer.d_out(), layer.d_in());
  std::vector<double> T, T1;
  for (int i = 0; i < layer.d_in(); ++i) {
    const double z = std::tanh(x[static_cast<std::size_t>(i)]);
    cheby_values(z, layer.degree(), T, T1);
    const double d = scaled ? 1.0 - z * z : 1.0;
    for (int k = 0; k < layer.d_out(); ++k) {
      double s = 0.0;
      for (int n = 1; n <= layer.degree(); ++n) s += values[layer.coeff_index(i, k, n)] * T1[static_cast<std::size_t>(n)];
      j(k, i) = s * d;
    }
  }
  return j;
}

DenseMatrix layer_jacobian_jet(const Cheby1KanLayer& layer, std::span<const double> values,
                               std::span<const double> x) {
  if (static_cast<int>(x.size()) != layer.d_in()) throw std::invalid_argument("layer_jacobian: dimension mismatch");
  Tape tape;
  const auto p = bind_constants(tape, values);
  const auto in = seed_first_order(tape, x);
  return jacobian_of(layer.forward(p, in), layer.d_in());
}

std::vector<DenseMatrix> stack_layer_jacobians(const ChebyStack& stack, std::span<const double> x) {
  std::vector<DenseMatrix> js;
  std::vector<double> h(x.begin(), x.end());
  for (const auto& layer : stack.layers()) {
    js.push_back(layer_jacobian(layer, stack.parameters().values(), h));
    h = layer_forward(layer, stack.parameters().values(), h);
  }
  return js;
}

DenseMatrix stack_jacobian(const ChebyStack& stack, std::span<const double> x) {
  const auto js = stack_layer_jacobians(stack, x);
  DenseMatrix total = js.front();
  for (std::size_t l = 1; l < js.size(); ++l) total = js[l] * total;
  return total;
}

DenseMatrix end_to_end_jacobian(const ChebyStack& stack, std::span<const double> x) {
  Tape tape;
  const auto p = bind_constants(tape, stack.parameters().values());
  auto h = seed_first_order(tape, x);
  for (const auto& layer : stack.layers()) h = layer.forward(p, h);
  return jacobian_of(h, static_cast<int>(x.size()));
}

int single_layer_rank_bound(int d_in, int d_out, int degree) { return std::min(d_out, d_in * (degree + 1)); }

std::pair<int, int> tanh_scaling_compare(const Cheby1KanLayer& layer, std::span<const double> values,
                                         std::span<const double> x, double eps) {
  return {numerical_rank(layer_jacobian(layer, values, x, true), eps),
          numerical_rank(layer_jacobian(layer, values, x, false), eps)};
}

double RankReport::median_rank(int depth) const {
  std::vector<int> r;
  for (int t = 0; t < trials; ++t) r.push_back(rank(t, depth));
  std::sort(r.begin(), r.end());
  return r[(r.size() - 1) / 2];
}

std::string RankReport::to_csv() const {
  std::string out = "trial,depth,rank,sigma_max,sigma_min\n";
  char buf[96];
  for (const auto& e : entries) {
    std::snprintf(buf, sizeof buf, "%d,%d,%d,%.17g,%.17g\n", e.trial, e.depth, e.rank, e.sigma_max, e.sigma_min);
    out += buf;
  }
  return out;
}

RankReport rank_scan(int width, int degree, int max_depth, int trials, double eps, std::uint64_t seed) {
  if (width < 1 || degree < 1 || max_depth < 1 || trials < 1) {
    throw std::invalid_argument("rank_scan: width, degree, depth and trials must be positive");
  }
  if (!(eps > 0.0)) throw std::invalid_argument("rank_scan: eps must be positive");
  RankReport rep{width, degree, max_depth, trials, eps, {}};
  rep.entries.resize(static_cast<std::size_t>(trials) * static_cast<std::size_t>(max_depth));

#pragma omp parallel for schedule(dynamic, 1)
  for (int t = 0; t < trials; ++t) {
    Rng rng(seed + static_cast<std::uint64_t>(t));
    const ChebyStack stack = ChebyStack::random_square(width, degree, max_depth, rng);
    std::vector<double> x(static_cast<std::size_t>(width));
    for (auto& v : x) v = rng.normal();

    const auto js = stack_layer_jacobians(stack, x);
    DenseMatrix total = DenseMatrix::identity(width);
    double log_scale = 0.0;
    for (int l = 0; l < max_depth; ++l) {
      total = js[static_cast<std::size_t>(l)] * total;
      const double m = total.max_abs();
      if (m > 0.0 && std::isfinite(m)) {
        for (auto& v : total.data()) v /= m;
        log_scale += std::log(m);
      }
      const auto sigma = singular_values(total);
      RankEntry& e = rep.entries[static_cast<std::size_t>(t * max_depth + l)];
      e.trial = t;
      e.depth = l + 1;
      e.rank = numerical_rank(sigma, eps);
      e.sigma_max = sigma.front() * std::exp(log_scale);
      e.sigma_min = sigma.back() * std::exp(log_scale);
    }
  }
  return rep;
}

DenseMatrix model_input_jacobian(const Network& model, std::span<const double> x) {
  Tape tape;
  const auto p = bind_constants(tape, model.parameters().values());
  return jacobian_of(model.forward(tape, p, x, 1), static_cast<int>(x.size()));
}

std::vector<int> model_input_rank(const Network& model, std::span<const std::vector<double>> points, double eps) {
  std::vector<int> ranks(points.size());
  const long n = static_cast<long>(points.size());
#pragma omp parallel for schedule(static)
  for (long i = 0; i < n; ++i) {
    ranks[static_cast<std::size_t>(i)] =
        numerical_rank(model_input_jacobian(model, points[static_cast<std::size_t>(i)]), eps);
  }
  return ranks;
}

}  // namespace acpkan
