#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "acpkan/model.hpp"

using namespace acpkan;

namespace {

// Plain double evaluation of the architecture, written straight from the
// layer definitions. Used as an oracle for the jet forward pass.
std::vector<double> linear_ref(const LinearLayer& l, std::span<const double> p, std::span<const double> x) {
  std::vector<double> y(static_cast<std::size_t>(l.d_out()));
  for (int k = 0; k < l.d_out(); ++k) {
    double s = p[l.bias_index(k)];
    for (int i = 0; i < l.d_in(); ++i) s += p[l.weight_index(k, i)] * x[static_cast<std::size_t>(i)];
    y[static_cast<std::size_t>(k)] = s;
  }
  return y;
}

std::vector<double> cheby_ref(const Cheby1KanLayer& l, std::span<const double> p, std::span<const double> x) {
  std::vector<double> y(static_cast<std::size_t>(l.d_out()), 0.0);
  for (int i = 0; i < l.d_in(); ++i) {
    const double z = std::tanh(x[static_cast<std::size_t>(i)]);
    for (int k = 0; k < l.d_out(); ++k) {
      for (int n = 0; n <= l.degree(); ++n) y[static_cast<std::size_t>(k)] += p[l.coeff_index(i, k, n)] * std::cos(n * std::acos(z));
    }
  }
  return y;
}

std::vector<double> norm_ref(const LayerNormLayer& l, std::span<const double> p, std::vector<double> x) {
  double mu = 0.0, var = 0.0;
  for (double v : x) mu += v;
  mu /= static_cast<double>(x.size());
  for (double v : x) var += (v - mu) * (v - mu);
  var /= static_cast<double>(x.size());
  for (int i = 0; i < l.dim(); ++i) {
    auto& v = x[static_cast<std::size_t>(i)];
    v = p[l.gamma_index(i)] * (v - mu) / std::sqrt(var + l.eps()) + p[l.beta_index(i)];
  }
  return x;
}

std::vector<double> wavelet_ref(const WaveletAct& w, std::span<const double> p, std::vector<double> x) {
  for (auto& v : x) v = p[w.w1_index()] * std::sin(v) + p[w.w2_index()] * std::cos(v);
  return x;
}

std::vector<double> acpkan_ref(const AcPkanModel& m, std::span<const double> x) {
  const auto p = m.parameters().values();
  const auto h0 = linear_ref(m.embedding(), p, x);
  const auto u = wavelet_ref(m.wavelet_u(), p, linear_ref(m.encoder_u(), p, h0));
  const auto v = wavelet_ref(m.wavelet_v(), p, linear_ref(m.encoder_v(), p, h0));
  auto alpha = u;
  for (std::size_t l = 0; l < m.cheby_layers().size(); ++l) {
    const auto h = norm_ref(m.norms()[l], p, cheby_ref(m.cheby_layers()[l], p, alpha));
    for (std::size_t j = 0; j < alpha.size(); ++j) {
      const double a0 = h[j] + alpha[j];
      alpha[j] = (1.0 - a0) * u[j] + a0 * (v[j] + 1.0);
    }
  }
  return linear_ref(m.output_layer(), p, alpha);
}

struct Bound {
  Tape tape;
  std::vector<Var> p;
  explicit Bound(const ParameterSet& ps) : p(bind_parameters(tape, ps.values())) {}
};

}  // namespace

TEST_CASE("cheby_basis examples") {
  Tape t;
  auto vals = [&](double z, int n) {
    std::vector<double> out;
    for (const Jet& j : cheby_basis(jet_constant(t, z, 1), n)) out.push_back(j.value());
    return out;
  };
  for (double v : vals(1.0, 8)) CHECK(v == 1.0);
  CHECK(vals(0.5, 2) == std::vector<double>{1.0, 0.5, -0.5});
  CHECK(vals(0.0, 3) == std::vector<double>{1.0, 0.0, -1.0, 0.0});
}

TEST_CASE("property: recurrence agrees with cos(n arccos z)") {
  Tape t;
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const double z = -0.999 + 1.998 * k / 999.0;
    const auto T = cheby_basis(jet_constant(t, z, 1, 0), 8);
    for (int n = 0; n <= 8; ++n) worst = std::max(worst, std::fabs(T[static_cast<std::size_t>(n)].value() - std::cos(n * std::acos(z))));
    t.clear();
  }
  CHECK(worst < 1e-10);
}

TEST_CASE("property: discrete orthogonality at Chebyshev nodes") {
  const int M = 512, N = 8;
  std::vector<std::vector<double>> T(static_cast<std::size_t>(M));
  Tape t;
  for (int k = 0; k < M; ++k) {
    const double z = std::cos(std::numbers::pi * (k + 0.5) / M);
    for (const Jet& j : cheby_basis(jet_constant(t, z, 1, 0), N)) T[static_cast<std::size_t>(k)].push_back(j.value());
  }
  for (int m = 0; m <= N; ++m) {
    for (int n = 0; n <= N; ++n) {
      double s = 0.0;
      for (int k = 0; k < M; ++k) s += T[static_cast<std::size_t>(k)][static_cast<std::size_t>(m)] * T[static_cast<std::size_t>(k)][static_cast<std::size_t>(n)];
      s *= 2.0 / M;
      const double expected = m != n ? 0.0 : (m == 0 ? 2.0 : 1.0);
      CHECK(std::fabs(s - expected) < 1e-8);
    }
  }
}

TEST_CASE("cheby1kan forward examples") {
  ParameterSet ps;
  const Cheby1KanLayer layer(ps, "c", 1, 1, 1);
  REQUIRE(layer.coeff_count() == 2);
  auto run = [&](double c0, double c1, double x) {
    ps.values()[layer.coeff_index(0, 0, 0)] = c0;
    ps.values()[layer.coeff_index(0, 0, 1)] = c1;
    Bound b(ps);
    const std::vector<Jet> in{jet_input(b.tape, x, 0, 1)};
    const Jet y = layer.forward(b.p, in)[0];
    return std::vector<double>{y.value(), y.d(0), y.d2(0, 0)};
  };
  CHECK(run(0, 0, 0.3) == std::vector<double>{0, 0, 0});
  CHECK(run(1, 0, 0.3) == std::vector<double>{1, 0, 0});
  const auto y = run(0, 1, 0.0);
  CHECK(y[0] == 0.0);
  CHECK(y[1] == 1.0);

  // zero coefficients across a wider layer give zero jets
  ParameterSet qs;
  const Cheby1KanLayer wide(qs, "c", 3, 2, 4);
  Bound b(qs);
  std::vector<Jet> in;
  for (int i = 0; i < 3; ++i) in.push_back(jet_input(b.tape, 0.1 * i, i, 3));
  for (const Jet& j : wide.forward(b.p, in)) {
    CHECK(j.value() == 0.0);
    for (int i = 0; i < 3; ++i) CHECK(j.d(i) == 0.0);
  }
}

TEST_CASE("property: fused cheby forward matches the reference jet arithmetic") {
  ParameterSet ps;
  const Cheby1KanLayer layer(ps, "c", 3, 4, 6);
  Rng rng(9);
  layer.initialize_normal(ps.values(), rng, 1.0);
  for (int order = 0; order <= 2; ++order) {
    Bound b(ps);
    std::vector<Jet> base;
    for (int i = 0; i < 2; ++i) base.push_back(jet_input(b.tape, rng.uniform(-1, 1), i, 2, order));
    // non-trivial input jets: mixed functions of both coordinates
    const std::vector<Jet> in{tanh(base[0] * base[1]) * 2.0, sin(base[0]) + base[1], square(base[1]) - base[0]};
    const auto fused = layer.forward(b.p, in);
    const auto ref = layer.forward_reference(b.p, in);
    for (std::size_t k = 0; k < fused.size(); ++k) {
      CHECK(fused[k].value() == doctest::Approx(ref[k].value()).epsilon(1e-12));
      for (std::size_t a = 0; a < fused[k].grad.size(); ++a)
        CHECK(b.tape.value(fused[k].grad[a]) == doctest::Approx(b.tape.value(ref[k].grad[a])).epsilon(1e-12));
      for (std::size_t a = 0; a < fused[k].hess.size(); ++a)
        CHECK(b.tape.value(fused[k].hess[a]) == doctest::Approx(b.tape.value(ref[k].hess[a])).epsilon(1e-12));
    }
    // parameter gradients of a derivative component agree too
    if (order == 2) {
      const auto gf = b.tape.backward(fused[1].h(0, 1));
      const auto gr = b.tape.backward(ref[1].h(0, 1));
      for (std::size_t q = 0; q < gf.size(); ++q) CHECK(gf[q] == doctest::Approx(gr[q]).epsilon(1e-10));
    }
  }
}

TEST_CASE("linear forward examples") {
  ParameterSet ps;
  const LinearLayer id(ps, "id", 2, 2);
  const LinearLayer sum(ps, "sum", 2, 1);
  auto v = ps.values();
  v[id.weight_index(0, 0)] = 1;
  v[id.weight_index(1, 1)] = 1;
  v[sum.weight_index(0, 0)] = 1;
  v[sum.weight_index(0, 1)] = 1;
  Bound b(ps);
  const std::vector<Jet> in{jet_input(b.tape, 0.2, 0, 2), jet_input(b.tape, -0.7, 1, 2)};
  const auto y = id.forward(b.p, in);
  CHECK(y[0].value() == 0.2);
  CHECK(y[1].value() == -0.7);
  CHECK(y[1].d(1) == 1.0);
  CHECK(y[1].d(0) == 0.0);
  const Jet s = sum.forward(b.p, in)[0];
  CHECK(s.d(0) == 1.0);
  CHECK(s.d(1) == 1.0);

  ParameterSet qs;
  const LinearLayer c(qs, "c", 2, 2);
  qs.values()[c.bias_index(0)] = 3.0;
  qs.values()[c.bias_index(1)] = -1.0;
  Bound bc(qs);
  const std::vector<Jet> in2{jet_input(bc.tape, 0.2, 0, 2), jet_input(bc.tape, -0.7, 1, 2)};
  const auto yc = c.forward(bc.p, in2);
  CHECK(yc[0].value() == 3.0);
  CHECK(yc[1].value() == -1.0);
  CHECK(yc[0].d(0) == 0.0);
  CHECK_THROWS(c.forward(bc.p, std::vector<Jet>{in2[0]}));
}

TEST_CASE("layernorm examples") {
  ParameterSet ps;
  const LayerNormLayer ln(ps, "ln", 2);
  ln.initialize(ps.values());
  {
    Bound b(ps);
    const std::vector<Jet> c{jet_constant(b.tape, 4.0, 1), jet_constant(b.tape, 4.0, 1)};
    for (const Jet& y : ln.forward(b.p, c)) CHECK(std::fabs(y.value()) <= 1e-3);
    const std::vector<Jet> pm{jet_constant(b.tape, 1.0, 1), jet_constant(b.tape, -1.0, 1)};
    const auto y = ln.forward(b.p, pm);
    const double expected = 1.0 / std::sqrt(1.0 + 1e-5);
    CHECK(y[0].value() == doctest::Approx(expected).epsilon(1e-14));
    CHECK(y[1].value() == doctest::Approx(-expected).epsilon(1e-14));
    CHECK(y[0].value() == doctest::Approx(0.99999).epsilon(1e-5));
  }
  ps.values()[ln.beta_index(0)] = 2.5;
  ps.values()[ln.beta_index(1)] = 2.5;
  Bound b(ps);
  const std::vector<Jet> pm{jet_constant(b.tape, 1.0, 1), jet_constant(b.tape, -1.0, 1)};
  const auto y = ln.forward(b.p, pm);
  CHECK(y[0].value() == doctest::Approx(2.5 + 1.0 / std::sqrt(1.0 + 1e-5)).epsilon(1e-14));
  CHECK(y[1].value() == doctest::Approx(2.5 - 1.0 / std::sqrt(1.0 + 1e-5)).epsilon(1e-14));
}

TEST_CASE("wavelet examples") {
  ParameterSet ps;
  const WaveletAct w(ps, "w");
  w.initialize(ps.values());
  CHECK(ps.values()[w.w1_index()] == 1.0);
  CHECK(ps.values()[w.w2_index()] == 1.0);
  {
    Bound b(ps);
    const std::vector<Jet> in{jet_input(b.tape, 0.0, 0, 1), jet_input(b.tape, std::numbers::pi / 4, 0, 1)};
    const auto y = w.forward(b.p, in);
    CHECK(y[0].value() == 1.0);
    CHECK(y[1].value() == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  }
  ps.values()[w.w2_index()] = 0.0;
  Bound b(ps);
  const auto y = w.forward(b.p, std::vector<Jet>{jet_input(b.tape, 0.0, 0, 1)});
  CHECK(y[0].value() == 0.0);
  CHECK(y[0].d(0) == 1.0);
  CHECK(y[0].d2(0, 0) == 0.0);
}

TEST_CASE("parameter counts match the closed form and hand counts") {
  // embed 2*16+16, encoders 2*(16*32+32), wavelets 4, cheby 2*32*32*9, norms 2*2*32, out 32+1
  CHECK(AcPkanConfig::desk().parameter_count() == 19733);
  CHECK(AcPkanModel(AcPkanConfig::desk()).parameter_count() == 19733);
  CHECK(AcPkanModel(AcPkanConfig::fit()).parameter_count() == 751);
  CHECK(AcPkanModel(AcPkanConfig::small()).parameter_count() == 5285);
  const AcPkanConfig large{2, 64, 128, 1, 3, 8};
  CHECK(large.parameter_count() == 460101);
  CHECK(MlpPinn(MlpPinn::small_sizes()).parameter_count() == 2 * 48 + 48 + 2 * (48 * 48 + 48) + 49);
  CHECK_THROWS(AcPkanModel(AcPkanConfig{2, 16, 32, 1, 0, 8}));
  CHECK_THROWS(AcPkanModel(AcPkanConfig{2, 16, 32, 1, 2, 0}));
  CHECK_THROWS(MlpPinn(std::vector<int>{2}));
}

TEST_CASE("acpkan forward shape and plain-double oracle") {
  const AcPkanConfig cfg{2, 5, 6, 3, 2, 4};
  AcPkanModel m(cfg);
  Rng rng(0);
  m.initialize(rng);
  Rng pr(1);
  for (auto& v : m.parameters().values()) v += 0.1 * pr.normal();
  Tape t;
  const auto p = bind_parameters(t, m.parameters().values());
  const std::vector<double> x{0.3, -0.8};
  const auto y = m.forward(t, p, x, 2);
  REQUIRE(y.size() == 3);
  const auto ref = acpkan_ref(m, x);
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(y[k].grad.size() == 2);
    CHECK(y[k].hess.size() == 3);
    CHECK(y[k].value() == doctest::Approx(ref[k]).epsilon(1e-12));
  }
  // input derivatives against differences of the oracle
  const double h = 1e-4;
  for (int i = 0; i < 2; ++i) {
    auto xp = x, xm = x;
    xp[static_cast<std::size_t>(i)] += h;
    xm[static_cast<std::size_t>(i)] -= h;
    auto xp1 = x, xm1 = x;
    xp1[static_cast<std::size_t>(i)] += h / 10;
    xm1[static_cast<std::size_t>(i)] -= h / 10;
    const auto fp = acpkan_ref(m, xp), fm = acpkan_ref(m, xm);
    const auto fp1 = acpkan_ref(m, xp1), fm1 = acpkan_ref(m, xm1);
    for (std::size_t k = 0; k < 3; ++k) {
      CHECK(y[k].d(i) == doctest::Approx((fp1[k] - fm1[k]) / (h / 5)).epsilon(1e-6));
      CHECK(y[k].d2(i, i) == doctest::Approx((fp[k] - 2 * ref[k] + fm[k]) / (h * h)).epsilon(1e-4));
    }
  }
}

TEST_CASE("acpkan with zero chebyshev coefficients reduces to 2U - U^2 + UV") {
  const AcPkanConfig cfg{2, 4, 3, 3, 1, 2};
  AcPkanModel m(cfg);
  Rng rng(4);
  m.initialize(rng);
  auto v = m.parameters().values();
  const auto& ch = m.cheby_layers()[0];
  for (std::size_t q = 0; q < ch.coeff_count(); ++q) v[ch.coeff_index(0, 0, 0) + q] = 0.0;
  const auto& out = m.output_layer();
  for (int k = 0; k < 3; ++k) {
    for (int i = 0; i < 3; ++i) v[out.weight_index(k, i)] = k == i ? 1.0 : 0.0;
    v[out.bias_index(k)] = 0.0;
  }
  Tape t;
  const auto p = bind_parameters(t, m.parameters().values());
  const std::vector<double> x{0.4, 0.9};
  const auto y = m.forward(t, p, x, 2);
  const auto h0 = m.embedding().forward(p, seed_inputs(t, x, 2));
  const auto [U, V] = m.encode(p, h0);
  for (std::size_t j = 0; j < 3; ++j) {
    const Jet e = 2.0 * U[j] - U[j] * U[j] + U[j] * V[j];
    CHECK(y[j].value() == doctest::Approx(e.value()).epsilon(1e-12));
    for (int a = 0; a < 2; ++a) CHECK(y[j].d(a) == doctest::Approx(e.d(a)).epsilon(1e-12));
    CHECK(y[j].d2(0, 1) == doctest::Approx(e.d2(0, 1)).epsilon(1e-12));
  }
}

TEST_CASE("acpkan derivatives are nonzero at init over 100 points") {
  AcPkanModel m(AcPkanConfig::desk());
  Rng rng(0);
  m.initialize(rng);
  Rng pts(100);
  int failures = 0;
  for (int k = 0; k < 100; ++k) {
    Tape t;
    const auto p = bind_constants(t, m.parameters().values());
    const std::vector<double> x{pts.uniform(-1, 1), pts.uniform(-1, 1)};
    const Jet u = m.forward(t, p, x, 2)[0];
    for (int i = 0; i < 2; ++i) failures += std::fabs(u.d(i)) > 1e-12 ? 0 : 1;
    for (std::size_t a = 0; a < u.hess.size(); ++a) failures += std::fabs(t.value(u.hess[a])) > 1e-12 ? 0 : 1;
  }
  CHECK(failures == 0);
}

TEST_CASE("initialization") {
  AcPkanModel m(AcPkanConfig::desk());
  Rng rng(0);
  m.initialize(rng);
  const auto v = m.parameters().values();
  CHECK(v[m.wavelet_u().w1_index()] == 1.0);
  CHECK(v[m.wavelet_u().w2_index()] == 1.0);
  CHECK(v[m.wavelet_v().w1_index()] == 1.0);
  CHECK(v[m.wavelet_v().w2_index()] == 1.0);
  for (int k = 0; k < 16; ++k) CHECK(v[m.embedding().bias_index(k)] == 0.0);
  for (int k = 0; k < 32; ++k) {
    CHECK(v[m.encoder_u().bias_index(k)] == 0.0);
    CHECK(v[m.norms()[0].gamma_index(k)] == 1.0);
    CHECK(v[m.norms()[1].beta_index(k)] == 0.0);
  }
  // Xavier bound on the embedding: sqrt(6 / (2 + 16))
  const double a = std::sqrt(6.0 / 18.0);
  for (int k = 0; k < 16; ++k)
    for (int i = 0; i < 2; ++i) CHECK(std::fabs(v[m.embedding().weight_index(k, i)]) <= a);

  ParameterSet ps;
  const Cheby1KanLayer big(ps, "c", 4, 625, 3);  // 10^4 coefficients
  Rng r2(2);
  big.initialize(ps.values(), r2);
  double s2 = 0.0;
  for (double c : ps.values()) s2 += c * c;
  const double sd = std::sqrt(s2 / static_cast<double>(ps.size()));
  const double expected = 1.0 / (4.0 * std::sqrt(4.0));
  CHECK(std::fabs(sd - expected) < 0.1 * expected);
}

TEST_CASE("mlp forward") {
  MlpPinn zero({2, 5, 1});
  Tape t;
  const auto pz = bind_parameters(t, zero.parameters().values());
  const Jet y0 = zero.forward(t, pz, std::vector<double>{0.3, 0.1}, 2)[0];
  CHECK(y0.value() == 0.0);
  CHECK(y0.d(0) == 0.0);

  // a single layer is an affine map
  MlpPinn lin({2, 1});
  Rng rng(3);
  lin.initialize(rng);
  auto v = lin.parameters().values();
  v[lin.layers()[0].bias_index(0)] = 0.25;
  Tape t2;
  const auto p2 = bind_parameters(t2, lin.parameters().values());
  const Jet y = lin.forward(t2, p2, std::vector<double>{0.3, -0.1}, 2)[0];
  const double w0 = v[lin.layers()[0].weight_index(0, 0)], w1 = v[lin.layers()[0].weight_index(0, 1)];
  CHECK(y.value() == doctest::Approx(w0 * 0.3 - w1 * 0.1 + 0.25).epsilon(1e-15));
  CHECK(y.d(0) == w0);
  CHECK(y.d2(0, 0) == 0.0);

  // parameter gradient of a 2-layer net against central differences
  MlpPinn net({2, 4, 1});
  Rng r3(8);
  net.initialize(r3);
  const std::vector<double> x{0.5, -0.2};
  Tape t3;
  const auto p3 = bind_parameters(t3, net.parameters().values());
  const auto g = t3.backward(net.forward(t3, p3, x, 0)[0].val);
  const double h = 1e-6;
  auto vals = net.parameters().values();
  for (std::size_t q = 0; q < vals.size(); ++q) {
    const double q0 = vals[q];
    vals[q] = q0 + h;
    const double fp = predict(net, x)[0];
    vals[q] = q0 - h;
    const double fm = predict(net, x)[0];
    vals[q] = q0;
    const double fd = (fp - fm) / (2 * h);
    CHECK(std::fabs(g[q] - fd) / std::max({std::fabs(g[q]), std::fabs(fd), 1e-3}) < 1e-5);
  }
}

TEST_CASE("clone is a deep copy") {
  AcPkanModel m(AcPkanConfig::fit());
  Rng rng(1);
  m.initialize(rng);
  auto c = m.clone();
  c->parameters().values()[0] += 1.0;
  CHECK(c->parameters().values()[0] != m.parameters().values()[0]);
  CHECK(c->kind() == "acpkan");
}
