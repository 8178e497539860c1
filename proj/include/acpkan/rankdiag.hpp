#pragma once

#include <cstdint>
#include <string>
#include <span>
#include <utility>
#include <vector>

#include "acpkan/model.hpp"
#include "acpkan/rng.hpp"

namespace acpkan {

class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(int rows, int cols, double fill = 0.0);
  DenseMatrix(int rows, int cols, std::vector<double> values);

  static DenseMatrix identity(int n);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  double& operator()(int i, int j) { return data_[static_cast<std::size_t>(i * cols_ + j)]; }
  double operator()(int i, int j) const { return data_[static_cast<std::size_t>(i * cols_ + j)]; }
  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  DenseMatrix transpose() const;
  double max_abs() const;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

DenseMatrix operator*(const DenseMatrix& a, const DenseMatrix& b);

/// Singular values in descending order by one-sided Jacobi rotations. Sweeps
/// until every column pair is orthogonal to `tolerance` (relative); throws
/// std::runtime_error after `max_sweeps`.
std::vector<double> singular_values(const DenseMatrix& m, double tolerance = 1e-12, int max_sweeps = 100);

/// #{ i : sigma_i >= eps * sigma_1 }; 0 for an all-zero spectrum.
int numerical_rank(std::span<const double> sigma, double eps);
int numerical_rank(const DenseMatrix& m, double eps);

/// A bare sequence of Chebyshev KAN layers (no attention), with its own
/// parameter storage.
class ChebyStack {
 public:
  ChebyStack() = default;
  /// Layer l maps widths[l] -> widths[l + 1]; coefficients start at zero.
  ChebyStack(std::span<const int> widths, int degree);

  /// `depth` square layers of the given width with N(0, stddev^2) coefficients.
  static ChebyStack random_square(int width, int degree, int depth, Rng& rng, double stddev = 1.0);
  static ChebyStack random(std::span<const int> widths, int degree, Rng& rng, double stddev = 1.0);

  int depth() const { return static_cast<int>(layers_.size()); }
  int input_dim() const { return layers_.front().d_in(); }
  int output_dim() const { return layers_.back().d_out(); }
  const std::vector<Cheby1KanLayer>& layers() const { return layers_; }
  ParameterSet& parameters() { return params_; }
  const ParameterSet& parameters() const { return params_; }

  /// Plain forward pass of the first `depth` layers.
  std::vector<double> forward(std::span<const double> x, int depth = -1) const;

 private:
  ParameterSet params_;
  std::vector<Cheby1KanLayer> layers_;
};

/// Closed-form layer Jacobian
///   J[k][i] = sum_n C[i][k][n] T_n'(tanh x_i) (1 - tanh^2 x_i).
/// With `scaled` false the (1 - tanh^2) factor is omitted.
DenseMatrix layer_jacobian(const Cheby1KanLayer& layer, std::span<const double> values, std::span<const double> x,
                           bool scaled = true);

/// The same Jacobian from first-order jets seeded per input coordinate.
DenseMatrix layer_jacobian_jet(const Cheby1KanLayer& layer, std::span<const double> values,
                               std::span<const double> x);

/// Per-layer Jacobians along the forward trajectory of x.
std::vector<DenseMatrix> stack_layer_jacobians(const ChebyStack& stack, std::span<const double> x);

/// J_{L-1} ... J_0 by explicit products.
DenseMatrix stack_jacobian(const ChebyStack& stack, std::span<const double> x);

/// Jacobian of the whole stack from one jet forward pass.
DenseMatrix end_to_end_jacobian(const ChebyStack& stack, std::span<const double> x);

/// min{d_out, d_in (N + 1)}
int single_layer_rank_bound(int d_in, int d_out, int degree);

/// (rank of J~ D, rank of J~) for one layer at x.
std::pair<int, int> tanh_scaling_compare(const Cheby1KanLayer& layer, std::span<const double> values,
                                         std::span<const double> x, double eps);

struct RankEntry {
  int trial = 0;
  int depth = 0;
  int rank = 0;
  double sigma_max = 0.0;
  double sigma_min = 0.0;
};

struct RankReport {
  int width = 0;
  int degree = 0;
  int max_depth = 0;
  int trials = 0;
  double eps = 0.0;
  /// Ordered by trial, then depth.
  std::vector<RankEntry> entries;

  int rank(int trial, int depth) const { return entries[static_cast<std::size_t>(trial * max_depth + depth - 1)].rank; }
  /// Lower median over trials at the given depth.
  double median_rank(int depth) const;
  std::string to_csv() const;
};

/// Random square Chebyshev stacks, one per trial (Rng(seed + trial)):
/// standard-normal coefficients and input, epsilon-rank of J_total for every
/// prefix depth 1..max_depth. Products are renormalized as they grow, and
/// the scale is restored in sigma_max / sigma_min.
RankReport rank_scan(int width, int degree, int max_depth, int trials, double eps, std::uint64_t seed);

/// epsilon-rank of d(output)/d(input) at each point.
std::vector<int> model_input_rank(const Network& model, std::span<const std::vector<double>> points, double eps);
DenseMatrix model_input_jacobian(const Network& model, std::span<const double> x);

}  // namespace acpkan
