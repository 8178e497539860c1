#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "acpkan/jet.hpp"
#include "acpkan/model.hpp"
#include "acpkan/rng.hpp"

namespace acpkan {

/// Points of a fixed dimension stored contiguously.
class CollocationSet {
 public:
  CollocationSet() = default;
  explicit CollocationSet(int dim) : dim_(dim) {}

  int dim() const { return dim_; }
  std::size_t size() const { return dim_ == 0 ? 0 : coords_.size() / static_cast<std::size_t>(dim_); }
  bool empty() const { return coords_.empty(); }
  std::span<const double> point(std::size_t i) const {
    return std::span<const double>(coords_).subspan(i * static_cast<std::size_t>(dim_), static_cast<std::size_t>(dim_));
  }
  void push(std::span<const double> p);
  void push(std::initializer_list<double> p) { push(std::span<const double>(p.begin(), p.size())); }
  const std::vector<double>& coords() const { return coords_; }

 private:
  int dim_ = 0;
  std::vector<double> coords_;
};

using Interval = std::pair<double, double>;

/// Tensor-product grid of equispaced points including both endpoints, ordered
/// lexicographically with the first coordinate varying fastest.
CollocationSet make_grid(std::span<const Interval> ranges, std::span<const int> counts);

// ------------------------------------------------------------ residual operators
// Inputs are ordered (x, t) for the 1D time-dependent problems and (x, y) for
// the Poisson problems. Each returns the pointwise residual as a tape node.

Var residual_reaction(const Jet& u, double rho);
/// u_tt - c u_xx
Var residual_wave(const Jet& u, double c);
Var residual_cdr(const Jet& u, double beta, double nu, double rho);

struct HeterogeneousParams {
  double a1 = 1.0 / 15.0;
  double a2 = 1.0;
  double r0 = 0.5;
};

/// a(r) (u_xx + u_yy) - 16 r^2 with a(r) = a1 for r < r0, a2 otherwise.
Var residual_poisson_het(const Jet& u, double x, double y, const HeterogeneousParams& p = {});
/// -(u_xx + u_yy)
Var residual_poisson_geom(const Jet& u);

// ------------------------------------------------------------ exact solutions

/// exp(-(x - pi)^2 / (2 (pi/4)^2)), the reaction / CDR initial condition.
double reaction_initial(double x);
double exact_reaction(double x, double t, double rho);
/// sin(pi x) cos(2 pi t) + 1/2 sin(beta pi x) cos(2 beta pi t)
double exact_wave(double x, double t, double beta = 3.0);
double wave_initial(double x, double beta = 3.0);
double exact_poisson_het(double x, double y, const HeterogeneousParams& p = {});

// ------------------------------------------------------------ geometry

struct Circle {
  double cx = 0.0;
  double cy = 0.0;
  double r = 0.0;
};

struct GeometryMask {
  double x_min = -0.5;
  double x_max = 0.5;
  double y_min = -0.5;
  double y_max = 0.5;
  std::vector<Circle> circles;

  /// Rectangle [-0.5, 0.5]^2 with four holes of radius 0.1 at (+-0.3, +-0.3).
  static GeometryMask four_holes();

  /// Inside (or on the boundary of) one of the circles.
  bool excluded(double x, double y) const;
  bool contains(double x, double y) const;
  void validate() const;
};

struct GeometryPoints {
  CollocationSet interior;
  CollocationSet outer;
  CollocationSet holes;
};

/// interior: grid nodes outside every circle; outer: `outer_per_edge`
/// equispaced samples on each rectangle edge; holes: `circle_samples` points
/// per circle, evenly spaced in angle starting at angle 0.
GeometryPoints geometry_points(const GeometryMask& mask, int interior_per_axis, int outer_per_edge,
                               int circle_samples);

/// Dirichlet Laplace solution on an n x n node lattice of the mask rectangle.
struct FdmField {
  int n = 0;
  GeometryMask mask;
  std::vector<double> values;      // row major, index j * n + i (x fastest)
  std::vector<std::uint8_t> fixed;  // 1 for Dirichlet nodes
  std::size_t sweeps = 0;

  double x(int i) const;
  double y(int j) const;
  double at(int i, int j) const { return values[static_cast<std::size_t>(j * n + i)]; }
};

/// Gauss-Seidel on the 5-point Laplacian with u = outer_value on the rectangle
/// edge and u = hole_value on nodes inside the circles. Iterates until both
/// the largest update and the estimated remaining error fall below
/// `tolerance`; throws std::runtime_error after `max_sweeps`.
FdmField fdm_oracle_laplace(const GeometryMask& mask, int n, double tolerance, std::size_t max_sweeps = 1'000'000,
                            double outer_value = 1.0, double hole_value = 0.0);

/// One lexicographic Gauss-Seidel sweep; returns the largest absolute update.
double gauss_seidel_sweep(FdmField& field);

// ------------------------------------------------------------ function fitting

/// Three-branch piecewise target on [0, 2]; throws std::domain_error outside.
double target_function(double x);

struct FitDataset {
  std::vector<double> x_train;
  std::vector<double> y_train;
  std::vector<double> x_test;
  std::vector<double> y_test;
};

/// Uniform samples on [0, 2]; training targets get N(0, noise_std^2) noise,
/// test targets are exact.
FitDataset make_fit_dataset(Rng& rng, std::size_t n_train = 500, std::size_t n_test = 1000, double noise_std = 0.1);

// ------------------------------------------------------------ problems

enum class TermKind { residual, bc, ic, data };
std::string to_string(TermKind kind);

/// Evaluates the network on the tape the caller is recording.
class EvalContext {
 public:
  EvalContext(Tape& tape, const Network& model, std::span<const Var> params)
      : tape_(&tape), model_(&model), params_(params) {}

  Tape& tape() const { return *tape_; }
  /// First output of the network as a jet of the requested order.
  Jet u(std::span<const double> x, int order) const;
  Jet u(std::initializer_list<double> x, int order) const {
    return u(std::span<const double>(x.begin(), x.size()), order);
  }

 private:
  Tape* tape_;
  const Network* model_;
  std::span<const Var> params_;
};

/// Appends the residual entries of point `index` to `out`.
using TermEvaluator =
    std::function<void(const EvalContext& ctx, std::size_t index, std::span<const double> point, std::vector<Var>& out)>;

struct TermSpec {
  std::string name;
  TermKind kind = TermKind::residual;
  CollocationSet points;
  int residuals_per_point = 1;
  TermEvaluator evaluate;

  std::size_t residual_count() const { return points.size() * static_cast<std::size_t>(residuals_per_point); }
};

/// Reference values used for rMAE / rRMSE.
struct Reference {
  CollocationSet points;
  std::vector<double> values;
};

struct PdeProblem {
  std::string name;
  int dim = 0;
  std::vector<Interval> domain;
  /// terms[0] is the PDE residual; the rest are constraint / data terms.
  std::vector<TermSpec> terms;
  std::optional<Reference> reference;
  /// Analytical solution when one exists.
  std::function<double(std::span<const double>)> exact;

  void validate() const;
};

struct ProblemOptions {
  /// Residual collocation grid per axis.
  int grid = 21;
  /// Samples per boundary / initial segment.
  int boundary = 21;
  /// Reference grid per axis.
  int eval_grid = 101;
  int circle_samples = 64;
  /// Coefficient c of u_tt - c u_xx in the wave benchmark.
  double wave_coefficient = 4.0;
  double fdm_tolerance = 1e-10;
  std::uint64_t seed = 0;
};

/// reaction | wave | cdr | poisson-het | poisson-geom | fit
PdeProblem make_problem(std::string_view name, const ProblemOptions& options = {});
const std::vector<std::string>& problem_names();

}  // namespace acpkan
