#pragma once

#include <boost/container/small_vector.hpp>

#include "acpkan/autodiff.hpp"

namespace acpkan {

/// Truncated second-order Taylor expansion of a scalar with respect to the
/// d inputs of a PDE. Every component is a tape node, so derivatives with
/// respect to the inputs stay differentiable with respect to parameters.
///
/// The Hessian is stored as its upper triangle, row major:
/// (0,0), (0,1), ..., (0,d-1), (1,1), ...
///
/// `order` truncates the expansion: 0 keeps only the value, 1 adds the
/// gradient, 2 (the default) adds the Hessian.
class Jet {
 public:
  using GradStorage = boost::container::small_vector<Var, 3>;
  using HessStorage = boost::container::small_vector<Var, 6>;

  Jet() = default;
  Jet(Tape& tape, int dim, int order);

  Tape& tape() const { return *tape_; }
  int dim() const { return dim_; }
  int order() const { return order_; }

  Var val;
  GradStorage grad;
  HessStorage hess;

  double value() const { return tape_->value(val); }
  double d(int i) const { return tape_->value(grad[i]); }
  double d2(int i, int j) const { return tape_->value(hess[hess_index(i, j)]); }

  Var& h(int i, int j) { return hess[hess_index(i, j)]; }
  Var h(int i, int j) const { return hess[hess_index(i, j)]; }

  std::size_t hess_index(int i, int j) const {
    if (i > j) std::swap(i, j);
    return static_cast<std::size_t>(i * dim_ - i * (i - 1) / 2 + (j - i));
  }

  static std::size_t hess_size(int dim) { return static_cast<std::size_t>(dim * (dim + 1) / 2); }

 private:
  Tape* tape_ = nullptr;
  int dim_ = 0;
  int order_ = 0;
};

/// Input coordinate `index` of a `dim`-dimensional point: grad[index] = 1,
/// every other derivative component 0.
Jet jet_input(Tape& tape, double value, int index, int dim, int order = 2);

/// Lifts a node that does not depend on the PDE inputs (e.g. a parameter).
Jet jet_broadcast(Tape& tape, Var v, int dim, int order = 2);

Jet jet_constant(Tape& tape, double value, int dim, int order = 2);

Jet jet_binary(BinaryOp op, const Jet& a, const Jet& b);
Jet jet_unary(UnaryOp op, const Jet& a);

Jet operator+(const Jet& a, const Jet& b);
Jet operator-(const Jet& a, const Jet& b);
Jet operator*(const Jet& a, const Jet& b);
Jet operator/(const Jet& a, const Jet& b);
Jet operator-(const Jet& a);

Jet operator*(const Jet& a, double c);
Jet operator*(double c, const Jet& a);
Jet operator+(const Jet& a, double c);
Jet operator+(double c, const Jet& a);
Jet operator-(const Jet& a, double c);
Jet operator-(double c, const Jet& a);

/// a * v for a node v that does not depend on the inputs; avoids broadcasting.
Jet scale(const Jet& a, Var v);

Jet tanh(const Jet& a);
Jet sin(const Jet& a);
Jet cos(const Jet& a);
Jet exp(const Jet& a);
Jet square(const Jet& a);
Jet sqrt(const Jet& a);
Jet ln(const Jet& a);
Jet abs(const Jet& a);

/// Node arithmetic that folds exact constant zeros and ones instead of
/// recording them. Used wherever derivative components are structurally
/// sparse.
Var fold_add(Tape& t, Var a, Var b);
Var fold_sub(Tape& t, Var a, Var b);
Var fold_mul(Tape& t, Var a, Var b);
/// acc + a * b
Var fold_fma(Tape& t, Var acc, Var a, Var b);

}  // namespace acpkan
