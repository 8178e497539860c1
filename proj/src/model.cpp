#include "acpkan/model.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace acpkan {

std::size_t ParameterSet::add(std::string name, std::vector<std::size_t> shape) {
  const std::size_t count = std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
  TensorInfo info{std::move(name), std::move(shape), values_.size(), count};
  values_.resize(values_.size() + count, 0.0);
  tensors_.push_back(std::move(info));
  return tensors_.back().offset;
}

const TensorInfo& ParameterSet::tensor(std::string_view name) const {
  for (const auto& t : tensors_) {
    if (t.name == name) return t;
  }
  throw std::out_of_range("no tensor named '" + std::string(name) + "'");
}

std::span<double> ParameterSet::tensor_values(std::string_view name) {
  const auto& t = tensor(name);
  return std::span<double>(values_).subspan(t.offset, t.size);
}

std::span<const double> ParameterSet::tensor_values(std::string_view name) const {
  const auto& t = tensor(name);
  return std::span<const double>(values_).subspan(t.offset, t.size);
}

std::vector<Var> bind_parameters(Tape& tape, std::span<const double> values) {
  std::vector<Var> vars;
  vars.reserve(values.size());
  for (double v : values) vars.push_back(tape.leaf(v, true));
  return vars;
}

std::vector<Var> bind_constants(Tape& tape, std::span<const double> values) {
  std::vector<Var> vars;
  vars.reserve(values.size());
  for (double v : values) vars.push_back(tape.leaf(v, false));
  return vars;
}

namespace {

int common_order(std::span<const Jet> x) {
  if (x.empty()) throw std::invalid_argument("layer input is empty");
  int order = x.front().order();
  for (const auto& j : x) order = std::min(order, j.order());
  return order;
}

}  // namespace

// ---------------------------------------------------------------- LinearLayer

LinearLayer::LinearLayer(ParameterSet& params, const std::string& name, int d_in, int d_out)
    : d_in_(d_in), d_out_(d_out) {
  if (d_in < 1 || d_out < 1) throw std::invalid_argument("linear layer dimensions must be positive");
  weight_ = params.add(name + ".W", {static_cast<std::size_t>(d_out), static_cast<std::size_t>(d_in)});
  bias_ = params.add(name + ".b", {static_cast<std::size_t>(d_out)});
}

std::vector<Jet> LinearLayer::forward(std::span<const Var> p, std::span<const Jet> x) const {
  if (static_cast<int>(x.size()) != d_in_) throw std::invalid_argument("linear: input has wrong length");
  Tape& t = x.front().tape();
  const int order = common_order(x);
  const int dim = x.front().dim();
  std::vector<Jet> y;
  y.reserve(static_cast<std::size_t>(d_out_));
  // one n-ary node per output component: sum_i W_ki x_i.c (+ b_k for the value)
  auto component = [&](int k, auto&& comp, bool with_bias) {
    double v = 0.0;
    t.nary_begin();
    if (with_bias) {
      const Var b = p[bias_index(k)];
      v = t.value(b);
      t.nary_term(b, 1.0);
    }
    for (int i = 0; i < d_in_; ++i) {
      const Var w = p[weight_index(k, i)];
      const Var xi = comp(x[static_cast<std::size_t>(i)]);
      const double wv = t.value(w), xv = t.value(xi);
      v += wv * xv;
      t.nary_term(w, xv);
      t.nary_term(xi, wv);
    }
    return t.nary_end(v);
  };
  for (int k = 0; k < d_out_; ++k) {
    Jet acc(t, dim, order);
    acc.val = component(k, [](const Jet& j) { return j.val; }, true);
    for (std::size_t c = 0; c < acc.grad.size(); ++c) {
      acc.grad[c] = component(k, [c](const Jet& j) { return j.grad[c]; }, false);
    }
    for (std::size_t c = 0; c < acc.hess.size(); ++c) {
      acc.hess[c] = component(k, [c](const Jet& j) { return j.hess[c]; }, false);
    }
    y.push_back(std::move(acc));
  }
  return y;
}

void LinearLayer::initialize(std::span<double> values, Rng& rng) const {
  const double a = std::sqrt(6.0 / static_cast<double>(d_in_ + d_out_));
  for (int k = 0; k < d_out_; ++k) {
    for (int i = 0; i < d_in_; ++i) values[weight_index(k, i)] = rng.uniform(-a, a);
  }
  for (int k = 0; k < d_out_; ++k) values[bias_index(k)] = 0.0;
}

// ------------------------------------------------------------- LayerNormLayer

LayerNormLayer::LayerNormLayer(ParameterSet& params, const std::string& name, int dim, double eps)
    : dim_(dim), eps_(eps) {
  if (dim < 2) throw std::invalid_argument("layer norm needs at least two features");
  if (!(eps > 0.0)) throw std::invalid_argument("layer norm eps must be positive");
  gamma_ = params.add(name + ".gamma", {static_cast<std::size_t>(dim)});
  beta_ = params.add(name + ".beta", {static_cast<std::size_t>(dim)});
}

std::vector<Jet> LayerNormLayer::forward(std::span<const Var> p, std::span<const Jet> x) const {
  if (static_cast<int>(x.size()) != dim_) throw std::invalid_argument("layer norm: input has wrong length");
  Tape& t = x.front().tape();
  const double inv_d = 1.0 / dim_;

  Jet mean = x[0];
  for (int i = 1; i < dim_; ++i) mean = mean + x[static_cast<std::size_t>(i)];
  mean = mean * inv_d;

  std::vector<Jet> centered;
  centered.reserve(x.size());
  for (const auto& xi : x) centered.push_back(xi - mean);

  Jet var = square(centered[0]);
  for (int i = 1; i < dim_; ++i) var = var + square(centered[static_cast<std::size_t>(i)]);
  var = var * inv_d;

  Jet std_dev = sqrt(var + eps_);
  Jet inv_std = jet_constant(t, 1.0, std_dev.dim(), std_dev.order()) / std_dev;

  std::vector<Jet> y;
  y.reserve(x.size());
  for (int i = 0; i < dim_; ++i) {
    Jet yi = scale(centered[static_cast<std::size_t>(i)] * inv_std, p[gamma_index(i)]);
    yi.val = fold_add(t, yi.val, p[beta_index(i)]);
    y.push_back(std::move(yi));
  }
  return y;
}

void LayerNormLayer::initialize(std::span<double> values) const {
  for (int i = 0; i < dim_; ++i) {
    values[gamma_index(i)] = 1.0;
    values[beta_index(i)] = 0.0;
  }
}

// ----------------------------------------------------------------- WaveletAct

WaveletAct::WaveletAct(ParameterSet& params, const std::string& name) { offset_ = params.add(name + ".w", {2}); }

std::vector<Jet> WaveletAct::forward(std::span<const Var> p, std::span<const Jet> x) const {
  std::vector<Jet> y;
  y.reserve(x.size());
  for (const auto& xi : x) y.push_back(scale(sin(xi), p[w1_index()]) + scale(cos(xi), p[w2_index()]));
  return y;
}

void WaveletAct::initialize(std::span<double> values) const {
  values[w1_index()] = 1.0;
  values[w2_index()] = 1.0;
}

// ------------------------------------------------------------- Cheby1KanLayer

std::vector<Jet> cheby_basis(const Jet& z, int degree) {
  if (degree < 0) throw std::invalid_argument("cheby_basis: negative degree");
  std::vector<Jet> T;
  T.reserve(static_cast<std::size_t>(degree + 1));
  T.push_back(jet_constant(z.tape(), 1.0, z.dim(), z.order()));
  if (degree >= 1) T.push_back(z);
  for (int n = 2; n <= degree; ++n) {
    T.push_back((z * T[static_cast<std::size_t>(n - 1)]) * 2.0 - T[static_cast<std::size_t>(n - 2)]);
  }
  return T;
}

Cheby1KanLayer::Cheby1KanLayer(ParameterSet& params, const std::string& name, int d_in, int d_out, int degree)
    : d_in_(d_in), d_out_(d_out), degree_(degree) {
  if (d_in < 1 || d_out < 1) throw std::invalid_argument("cheby layer dimensions must be positive");
  if (degree < 1) throw std::invalid_argument("cheby layer degree must be at least 1");
  offset_ = params.add(name + ".C", {static_cast<std::size_t>(d_in), static_cast<std::size_t>(d_out),
                                     static_cast<std::size_t>(degree + 1)});
}

std::vector<Jet> Cheby1KanLayer::forward(std::span<const Var> p, std::span<const Jet> x) const {
  if (static_cast<int>(x.size()) != d_in_) throw std::invalid_argument("cheby: input has wrong length");
  Tape& t = x.front().tape();
  const int order = common_order(x);
  const int dim = x.front().dim();
  const std::size_t nb = static_cast<std::size_t>(degree_ + 1);
  const std::size_t din = static_cast<std::size_t>(d_in_);

  // z_i = tanh(x_i) and the numeric tables T_n^(m)(z_i), m = 0..3, by the
  // differentiated recurrence.
  std::vector<Jet> z;
  z.reserve(din);
  std::vector<double> T(din * nb * 4, 0.0);
  auto tab = [&](std::size_t i, std::size_t m) { return T.data() + (i * 4 + m) * nb; };
  for (std::size_t i = 0; i < din; ++i) {
    z.push_back(tanh(x[i]));
    const double zv = z.back().value();
    double *t0 = tab(i, 0), *t1 = tab(i, 1), *t2 = tab(i, 2), *t3 = tab(i, 3);
    t0[0] = 1.0;
    if (nb > 1) {
      t0[1] = zv;
      t1[1] = 1.0;
    }
    for (std::size_t n = 2; n < nb; ++n) {
      t0[n] = 2.0 * zv * t0[n - 1] - t0[n - 2];
      t1[n] = 2.0 * t0[n - 1] + 2.0 * zv * t1[n - 1] - t1[n - 2];
      t2[n] = 4.0 * t1[n - 1] + 2.0 * zv * t2[n - 1] - t2[n - 2];
      t3[n] = 6.0 * t2[n - 1] + 2.0 * zv * t3[n - 1] - t3[n - 2];
    }
  }

  // phi_ik^(m) = sum_n C[i][k][n] T_n^(m)(z_i)
  // value, first and second derivative nodes need tables up to order + 1
  const std::size_t n_tables = static_cast<std::size_t>(order) + 2;
  std::vector<double> phi(din * 4, 0.0), c(nb);
  std::vector<Var> phi1(din), phi2(din);
  std::vector<Jet> y;
  y.reserve(static_cast<std::size_t>(d_out_));
  for (int k = 0; k < d_out_; ++k) {
    for (std::size_t i = 0; i < din; ++i) {
      const std::size_t base = coeff_index(static_cast<int>(i), k, 0);
      for (std::size_t n = 0; n < nb; ++n) c[n] = t.value(p[base + n]);
      for (std::size_t m = 0; m < n_tables; ++m) {
        const double* tm = tab(i, m);
        double s = 0.0;
        for (std::size_t n = 0; n < nb; ++n) s += c[n] * tm[n];
        phi[i * 4 + m] = s;
      }
      // d/dC_n = T_n^(m), d/dz = phi^(m+1)
      for (std::size_t m = 1; m <= static_cast<std::size_t>(order); ++m) {
        const double* tm = tab(i, m);
        t.nary_begin();
        for (std::size_t n = 0; n < nb; ++n) t.nary_term(p[base + n], tm[n]);
        t.nary_term(z[i].val, phi[i * 4 + m + 1]);
        (m == 1 ? phi1 : phi2)[i] = t.nary_end(phi[i * 4 + m]);
      }
    }

    Jet yk(t, dim, order);
    double v = 0.0;
    t.nary_begin();
    for (std::size_t i = 0; i < din; ++i) {
      const std::size_t base = coeff_index(static_cast<int>(i), k, 0);
      const double* t0 = tab(i, 0);
      for (std::size_t n = 0; n < nb; ++n) t.nary_term(p[base + n], t0[n]);
      t.nary_term(z[i].val, phi[i * 4 + 1]);
      v += phi[i * 4];
    }
    yk.val = t.nary_end(v);

    for (int a = 0; a < (order >= 1 ? dim : 0); ++a) {
      v = 0.0;
      t.nary_begin();
      for (std::size_t i = 0; i < din; ++i) {
        const Var g = z[i].grad[a];
        const double gv = t.value(g), f1 = phi[i * 4 + 1];
        v += f1 * gv;
        t.nary_term(phi1[i], gv);
        t.nary_term(g, f1);
      }
      yk.grad[a] = t.nary_end(v);
    }

    for (int a = 0; a < (order >= 2 ? dim : 0); ++a) {
      for (int b = a; b < dim; ++b) {
        const std::size_t h = yk.hess_index(a, b);
        v = 0.0;
        t.nary_begin();
        for (std::size_t i = 0; i < din; ++i) {
          const Var ga = z[i].grad[a], gb = z[i].grad[b], zh = z[i].hess[h];
          const double gav = t.value(ga), gbv = t.value(gb), hv = t.value(zh);
          const double f1 = phi[i * 4 + 1], f2 = phi[i * 4 + 2];
          v += f2 * gav * gbv + f1 * hv;
          t.nary_term(phi2[i], gav * gbv);
          t.nary_term(ga, f2 * gbv);
          t.nary_term(gb, f2 * gav);
          t.nary_term(phi1[i], hv);
          t.nary_term(zh, f1);
        }
        yk.hess[h] = t.nary_end(v);
      }
    }
    y.push_back(std::move(yk));
  }
  return y;
}

std::vector<Jet> Cheby1KanLayer::forward_reference(std::span<const Var> p, std::span<const Jet> x) const {
  if (static_cast<int>(x.size()) != d_in_) throw std::invalid_argument("cheby: input has wrong length");
  Tape& t = x.front().tape();
  const int order = common_order(x);
  const int dim = x.front().dim();
  std::vector<Jet> y;
  for (int k = 0; k < d_out_; ++k) y.push_back(jet_constant(t, 0.0, dim, order));
  for (int i = 0; i < d_in_; ++i) {
    const auto basis = cheby_basis(tanh(x[static_cast<std::size_t>(i)]), degree_);
    for (int k = 0; k < d_out_; ++k) {
      for (int n = 0; n <= degree_; ++n) {
        y[static_cast<std::size_t>(k)] =
            y[static_cast<std::size_t>(k)] + scale(basis[static_cast<std::size_t>(n)], p[coeff_index(i, k, n)]);
      }
    }
  }
  return y;
}

void Cheby1KanLayer::initialize(std::span<double> values, Rng& rng) const {
  initialize_normal(values, rng, 1.0 / (d_in_ * std::sqrt(static_cast<double>(degree_ + 1))));
}

void Cheby1KanLayer::initialize_normal(std::span<double> values, Rng& rng, double stddev) const {
  for (std::size_t c = 0; c < coeff_count(); ++c) values[offset_ + c] = rng.normal(0.0, stddev);
}

// ------------------------------------------------------------------- AC-PKAN

void AcPkanConfig::validate() const {
  if (d_in < 1 || d_model < 1 || d_out < 1) throw std::invalid_argument("acpkan: dimensions must be positive");
  if (d_hidden < 2) throw std::invalid_argument("acpkan: d_hidden must be at least 2 for layer norm");
  if (layers < 1) throw std::invalid_argument("acpkan: at least one Chebyshev block is required");
  if (degree < 1) throw std::invalid_argument("acpkan: degree must be at least 1");
}

std::size_t AcPkanConfig::parameter_count() const {
  const auto in = static_cast<std::size_t>(d_in), m = static_cast<std::size_t>(d_model),
             h = static_cast<std::size_t>(d_hidden), out = static_cast<std::size_t>(d_out),
             L = static_cast<std::size_t>(layers), nb = static_cast<std::size_t>(degree + 1);
  const std::size_t embed = m * in + m;
  const std::size_t encoders = 2 * (h * m + h);
  const std::size_t wavelets = 4;
  const std::size_t blocks = L * (h * h * nb + 2 * h);
  const std::size_t head = out * h + out;
  return embed + encoders + wavelets + blocks + head;
}

AcPkanModel::AcPkanModel(const AcPkanConfig& config) : config_(config) {
  config_.validate();
  embed_ = LinearLayer(params_, "embed", config_.d_in, config_.d_model);
  enc_u_ = LinearLayer(params_, "encoder_u", config_.d_model, config_.d_hidden);
  enc_v_ = LinearLayer(params_, "encoder_v", config_.d_model, config_.d_hidden);
  wav_u_ = WaveletAct(params_, "wavelet_u");
  wav_v_ = WaveletAct(params_, "wavelet_v");
  for (int l = 0; l < config_.layers; ++l) {
    const std::string prefix = std::to_string(l);
    cheby_.emplace_back(params_, "cheby." + prefix, config_.d_hidden, config_.d_hidden, config_.degree);
    norms_.emplace_back(params_, "norm." + prefix, config_.d_hidden);
  }
  out_ = LinearLayer(params_, "out", config_.d_hidden, config_.d_out);
}

std::pair<std::vector<Jet>, std::vector<Jet>> AcPkanModel::encode(std::span<const Var> p,
                                                                  std::span<const Jet> h0) const {
  auto u = wav_u_.forward(p, enc_u_.forward(p, h0));
  auto v = wav_v_.forward(p, enc_v_.forward(p, h0));
  return {std::move(u), std::move(v)};
}

std::vector<Jet> AcPkanModel::forward(Tape& tape, std::span<const Var> p, std::span<const double> x,
                                      int order) const {
  if (static_cast<int>(x.size()) != config_.d_in) throw std::invalid_argument("acpkan: input has wrong length");
  const auto inputs = seed_inputs(tape, x, order);
  const auto h0 = embed_.forward(p, inputs);
  const auto [u, v] = encode(p, h0);

  // (1 - a0) U + a0 (V + 1) = U + a0 (V + 1 - U)
  std::vector<Jet> gate;
  gate.reserve(u.size());
  for (std::size_t j = 0; j < u.size(); ++j) gate.push_back((v[j] + 1.0) - u[j]);

  std::vector<Jet> alpha = u;
  for (int l = 0; l < config_.layers; ++l) {
    const auto& cheby = cheby_[static_cast<std::size_t>(l)];
    const auto h = norms_[static_cast<std::size_t>(l)].forward(p, cheby.forward(p, alpha));
    for (std::size_t j = 0; j < alpha.size(); ++j) {
      const Jet a0 = h[j] + alpha[j];
      alpha[j] = u[j] + a0 * gate[j];
    }
  }
  return out_.forward(p, alpha);
}

void AcPkanModel::initialize(Rng& rng) {
  auto values = params_.values();
  embed_.initialize(values, rng);
  enc_u_.initialize(values, rng);
  enc_v_.initialize(values, rng);
  wav_u_.initialize(values);
  wav_v_.initialize(values);
  for (std::size_t l = 0; l < cheby_.size(); ++l) {
    cheby_[l].initialize(values, rng);
    norms_[l].initialize(values);
  }
  out_.initialize(values, rng);
}

// ----------------------------------------------------------------------- MLP

MlpPinn::MlpPinn(std::vector<int> sizes) : sizes_(std::move(sizes)) {
  if (sizes_.size() < 2) throw std::invalid_argument("mlp: at least input and output sizes are required");
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    layers_.emplace_back(params_, "layer." + std::to_string(l), sizes_[l], sizes_[l + 1]);
  }
}

std::vector<Jet> MlpPinn::forward(Tape& tape, std::span<const Var> p, std::span<const double> x, int order) const {
  if (static_cast<int>(x.size()) != input_dim()) throw std::invalid_argument("mlp: input has wrong length");
  std::vector<Jet> h = seed_inputs(tape, x, order);
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    h = layers_[l].forward(p, h);
    if (l + 1 < layers_.size()) {
      for (auto& j : h) j = tanh(j);
    }
  }
  return h;
}

void MlpPinn::initialize(Rng& rng) {
  for (const auto& layer : layers_) layer.initialize(params_.values(), rng);
}

// ------------------------------------------------------------------- helpers

std::vector<Jet> seed_inputs(Tape& tape, std::span<const double> x, int order) {
  const int dim = static_cast<int>(x.size());
  std::vector<Jet> inputs;
  inputs.reserve(x.size());
  for (int i = 0; i < dim; ++i) inputs.push_back(jet_input(tape, x[static_cast<std::size_t>(i)], i, dim, order));
  return inputs;
}

std::vector<double> predict(const Network& model, std::span<const double> x) {
  Tape tape;
  const auto p = bind_constants(tape, model.parameters().values());
  const auto y = model.forward(tape, p, x, 0);
  std::vector<double> out;
  out.reserve(y.size());
  for (const auto& j : y) out.push_back(j.value());
  return out;
}

}  // namespace acpkan
