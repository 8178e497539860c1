#include <doctest.h>

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>

#include "acpkan/rankdiag.hpp"

using namespace acpkan;

namespace {

DenseMatrix random_matrix(int r, int c, Rng& rng) {
  DenseMatrix m(r, c);
  for (auto& v : m.data()) v = rng.normal();
  return m;
}

std::vector<double> eigen_singular_values(const DenseMatrix& m) {
  Eigen::MatrixXd e(m.rows(), m.cols());
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) e(i, j) = m(i, j);
  const Eigen::VectorXd s = Eigen::JacobiSVD<Eigen::MatrixXd>(e).singularValues();
  return {s.data(), s.data() + s.size()};
}

// Largest singular value by power iteration on M^T M.
double power_norm(const DenseMatrix& m) {
  const DenseMatrix mtm = m.transpose() * m;
  std::vector<double> v(static_cast<std::size_t>(m.cols()), 1.0);
  double lambda = 0.0;
  for (int it = 0; it < 5000; ++it) {
    std::vector<double> w(v.size(), 0.0);
    for (int i = 0; i < mtm.rows(); ++i)
      for (int j = 0; j < mtm.cols(); ++j) w[static_cast<std::size_t>(i)] += mtm(i, j) * v[static_cast<std::size_t>(j)];
    double n = 0.0;
    for (double x : w) n += x * x;
    n = std::sqrt(n);
    for (std::size_t i = 0; i < w.size(); ++i) v[i] = w[i] / n;
    if (std::fabs(n - lambda) <= 1e-15 * n) break;
    lambda = n;
  }
  return std::sqrt(lambda);
}

Cheby1KanLayer single(ParameterSet& ps, int d_in, int d_out, int degree) { return {ps, "c", d_in, d_out, degree}; }

}  // namespace

TEST_CASE("svd examples") {
  CHECK(singular_values(DenseMatrix(2, 2, {3, 0, 0, 2})) == std::vector<double>{3, 2});
  CHECK(singular_values(DenseMatrix(2, 2, {0, 1, 1, 0})) == std::vector<double>{1, 1});
  const std::vector<double> u{1, 2, 3}, v{4, -1};
  DenseMatrix outer(3, 2);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 2; ++j) outer(i, j) = u[static_cast<std::size_t>(i)] * v[static_cast<std::size_t>(j)];
  const auto s = singular_values(outer);
  CHECK(s[0] == doctest::Approx(std::sqrt(14.0) * std::sqrt(17.0)).epsilon(1e-14));
  CHECK(s[1] < 1e-12);
  const auto st = singular_values(outer.transpose());
  CHECK(st[0] == doctest::Approx(s[0]).epsilon(1e-14));
  CHECK(st.size() == 2);
  CHECK_THROWS(singular_values(DenseMatrix(1, 1, {std::nan("")})));
  Rng rng(1);
  CHECK_THROWS_AS(singular_values(random_matrix(8, 8, rng), 1e-12, 0), std::runtime_error);
}

TEST_CASE("property: svd agrees with an independent solver and power iteration") {
  Rng rng(21);
  for (int k = 0; k < 40; ++k) {
    const int r = 1 + static_cast<int>(rng.uniform() * 20), c = 1 + static_cast<int>(rng.uniform() * 20);
    const DenseMatrix m = random_matrix(r, c, rng);
    const auto s = singular_values(m);
    const auto e = eigen_singular_values(m);
    REQUIRE(s.size() == e.size());
    CHECK(std::is_sorted(s.rbegin(), s.rend()));
    for (std::size_t i = 0; i < s.size(); ++i) CHECK(std::fabs(s[i] - e[i]) <= 1e-10 * s[0]);
    CHECK(s[0] == doctest::Approx(power_norm(m)).epsilon(1e-8));
    // sum of squares equals the Frobenius norm
    double f = 0.0, ss = 0.0;
    for (double v : m.data()) f += v * v;
    for (double v : s) ss += v * v;
    CHECK(ss == doctest::Approx(f).epsilon(1e-12));
  }
}

TEST_CASE("numerical rank examples") {
  const std::vector<double> s{1, 1e-3, 1e-9};
  CHECK(numerical_rank(s, 1e-6) == 2);
  CHECK(numerical_rank(DenseMatrix::identity(3), 1e-6) == 3);
  CHECK(numerical_rank(DenseMatrix(3, 3), 1e-6) == 0);
  // ties at the threshold count
  CHECK(numerical_rank(std::vector<double>{2.0, 2e-6}, 1e-6) == 2);
}

TEST_CASE("layer jacobian examples") {
  ParameterSet ps;
  const auto l = single(ps, 1, 1, 1);
  const std::vector<double> x0{0.0};
  CHECK(layer_jacobian(l, ps.values(), x0).max_abs() == 0.0);
  ps.values()[l.coeff_index(0, 0, 1)] = 1.0;
  CHECK(layer_jacobian(l, ps.values(), x0)(0, 0) == 1.0);
  const std::vector<double> x1{0.7};
  const double t = std::tanh(0.7);
  CHECK(layer_jacobian(l, ps.values(), x1)(0, 0) == doctest::Approx(1 - t * t).epsilon(1e-15));
  CHECK(layer_jacobian(l, ps.values(), x1, false)(0, 0) == 1.0);
  CHECK_THROWS(layer_jacobian(l, ps.values(), std::vector<double>{0.0, 1.0}));
}

TEST_CASE("property: closed-form, jet and finite-difference layer jacobians agree") {
  Rng rng(8);
  ParameterSet ps;
  const auto l = single(ps, 3, 5, 6);
  for (auto& v : ps.values()) v = rng.normal();
  std::vector<double> x{0.3, -1.2, 0.8};
  const DenseMatrix a = layer_jacobian(l, ps.values(), x);
  const DenseMatrix b = layer_jacobian_jet(l, ps.values(), x);
  Rng srng(8);
  ChebyStack one = ChebyStack::random(std::vector<int>{3, 5}, 6, srng);
  for (int i = 0; i < 3; ++i) {
    for (int k = 0; k < 5; ++k) CHECK(a(k, i) == doctest::Approx(b(k, i)).epsilon(1e-12));
  }
  // finite differences through the plain stack forward
  const DenseMatrix j = stack_jacobian(one, x);
  const double h = 1e-6;
  for (int i = 0; i < 3; ++i) {
    auto xp = x, xm = x;
    xp[static_cast<std::size_t>(i)] += h;
    xm[static_cast<std::size_t>(i)] -= h;
    const auto fp = one.forward(xp), fm = one.forward(xm);
    for (int k = 0; k < 5; ++k)
      CHECK(j(k, i) == doctest::Approx((fp[static_cast<std::size_t>(k)] - fm[static_cast<std::size_t>(k)]) / (2 * h)).epsilon(1e-6));
  }
}

TEST_CASE("chain-rule product equals the end-to-end jet jacobian") {
  Rng rng(2);
  for (int depth : {2, 3, 5}) {
    const ChebyStack s = ChebyStack::random_square(4, 5, depth, rng, 0.5);
    std::vector<double> x{0.1, -0.4, 1.3, 0.0};
    const DenseMatrix a = stack_jacobian(s, x), b = end_to_end_jacobian(s, x);
    for (std::size_t i = 0; i < a.data().size(); ++i) CHECK(std::fabs(a.data()[i] - b.data()[i]) < 1e-10);
  }
  const std::vector<int> widths{2, 6, 3};
  Rng r2(3);
  const ChebyStack rect = ChebyStack::random(widths, 4, r2);
  const std::vector<double> x{0.5, -0.5};
  const DenseMatrix a = stack_jacobian(rect, x);
  CHECK(a.rows() == 3);
  CHECK(a.cols() == 2);
  const DenseMatrix b = end_to_end_jacobian(rect, x);
  for (std::size_t i = 0; i < a.data().size(); ++i) CHECK(std::fabs(a.data()[i] - b.data()[i]) < 1e-10);
}

TEST_CASE("single-layer rank bound") {
  CHECK(single_layer_rank_bound(2, 32, 8) == 18);
  CHECK(single_layer_rank_bound(4, 16, 8) == 16);
  Rng rng(0);
  const std::vector<int> w{2, 32};
  for (int t = 0; t < 20; ++t) {
    const ChebyStack s = ChebyStack::random(w, 8, rng);
    const std::vector<double> x{rng.normal(), rng.normal()};
    CHECK(numerical_rank(stack_jacobian(s, x), 1e-6) <= 18);
  }
}

TEST_CASE("tanh scaling comparison") {
  ParameterSet ps;
  const auto l = single(ps, 4, 4, 5);
  CHECK(tanh_scaling_compare(l, ps.values(), std::vector<double>(4, 0.0), 1e-6) == std::pair<int, int>{0, 0});
  Rng rng(6);
  for (auto& v : ps.values()) v = rng.normal();
  const auto z = tanh_scaling_compare(l, ps.values(), std::vector<double>(4, 0.0), 1e-6);
  CHECK(z.first == z.second);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> x(4);
    for (auto& v : x) v = 5.0 * (rng.uniform() < 0.5 ? -1 : 1) * rng.uniform(0.5, 1.5);
    const auto [scaled, unscaled] = tanh_scaling_compare(l, ps.values(), x, 1e-6);
    CHECK(scaled <= unscaled);
  }
}

TEST_CASE("rank scan") {
  const RankReport r = rank_scan(6, 4, 8, 5, 1e-6, 10);
  CHECK(r.entries.size() == 40);
  for (const auto& e : r.entries) {
    CHECK(e.rank >= 1);
    CHECK(e.rank <= 6);
    CHECK(e.sigma_max >= e.sigma_min);
  }
  CHECK(r.entries[9].trial == 1);
  CHECK(r.entries[9].depth == 2);
  // rerun is identical; the per-trial seed is seed + trial
  const RankReport again = rank_scan(6, 4, 8, 5, 1e-6, 10);
  CHECK(again.to_csv() == r.to_csv());
  const RankReport shifted = rank_scan(6, 4, 8, 4, 1e-6, 11);
  for (int d = 1; d <= 8; ++d) CHECK(shifted.rank(0, d) == r.rank(1, d));
  const auto csv = r.to_csv();
  CHECK(csv.starts_with("trial,depth,rank,sigma_max,sigma_min\n"));
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 41);

  // sigma_max of a single-layer prefix matches a direct computation
  Rng rng(10);
  const ChebyStack s = ChebyStack::random_square(6, 4, 8, rng);
  std::vector<double> x(6);
  for (auto& v : x) v = rng.normal();
  const auto js = stack_layer_jacobians(s, x);
  CHECK(r.entries[0].sigma_max == doctest::Approx(singular_values(js[0])[0]).epsilon(1e-12));
  DenseMatrix p = js[0];
  for (int l = 1; l < 3; ++l) p = js[static_cast<std::size_t>(l)] * p;
  CHECK(r.entries[2].sigma_max == doctest::Approx(singular_values(p)[0]).epsilon(1e-10));

  CHECK_THROWS(rank_scan(0, 4, 8, 5, 1e-6, 0));
  CHECK_THROWS(rank_scan(4, 4, 8, 5, 0.0, 0));
}

TEST_CASE("median rank is the lower median") {
  RankReport r{2, 1, 1, 4, 1e-6, {}};
  for (int t = 0; t < 4; ++t) r.entries.push_back({t, 1, t == 0 ? 1 : 2 + t % 2, 1.0, 0.1});
  // ranks 1, 3, 2, 3 -> sorted 1 2 3 3 -> lower median 2
  CHECK(r.median_rank(1) == 2);
}

TEST_CASE("model input rank") {
  AcPkanModel m(AcPkanConfig{2, 16, 32, 2, 2, 8});
  Rng rng(0);
  m.initialize(rng);
  std::vector<std::vector<double>> pts;
  Rng pr(1);
  for (int k = 0; k < 100; ++k) pts.push_back({pr.uniform(-1, 1), pr.uniform(-1, 1)});
  const auto ranks = model_input_rank(m, pts, 1e-6);
  CHECK(std::count(ranks.begin(), ranks.end(), 2) >= 99);

  AcPkanModel one(AcPkanConfig::desk());
  Rng r1(0);
  one.initialize(r1);
  const auto r1s = model_input_rank(one, pts, 1e-6);
  CHECK(std::count(r1s.begin(), r1s.end(), 1) >= 99);

  // zero output layer: degenerate
  const auto& out = one.output_layer();
  for (int i = 0; i < out.d_in(); ++i) one.parameters().values()[out.weight_index(0, i)] = 0.0;
  const auto r0 = model_input_rank(one, pts, 1e-6);
  CHECK(std::count(r0.begin(), r0.end(), 0) == 100);

  // jacobian from jets agrees with differences of predict()
  const std::vector<double> x{0.2, 0.6};
  const DenseMatrix j = model_input_jacobian(m, x);
  const double h = 1e-6;
  for (int i = 0; i < 2; ++i) {
    auto xp = x, xm = x;
    xp[static_cast<std::size_t>(i)] += h;
    xm[static_cast<std::size_t>(i)] -= h;
    const auto fp = predict(m, xp), fm = predict(m, xm);
    for (int k = 0; k < 2; ++k)
      CHECK(j(k, i) == doctest::Approx((fp[static_cast<std::size_t>(k)] - fm[static_cast<std::size_t>(k)]) / (2 * h)).epsilon(1e-6));
  }
}

TEST_CASE("matrix helpers") {
  const DenseMatrix a(2, 3, {1, 2, 3, 4, 5, 6});
  const DenseMatrix at = a.transpose();
  CHECK(at(2, 1) == 6);
  const DenseMatrix p = a * at;
  CHECK(p(0, 0) == 14);
  CHECK(p(0, 1) == 32);
  CHECK(p(1, 1) == 77);
  CHECK(a.max_abs() == 6);
  CHECK_THROWS(a * a);
  CHECK_THROWS(DenseMatrix(2, 2, std::vector<double>{1, 2, 3}));
}
