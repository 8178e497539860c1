#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace acpkan {

/// Raised when a primitive is evaluated outside its domain (division by zero,
/// sqrt or log of a non-positive value, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Handle to a node of a Tape. Only meaningful together with the tape that
/// produced it.
struct Var {
  std::uint32_t id = 0;
  friend bool operator==(Var, Var) = default;
};

enum class BinaryOp : std::uint8_t { add, sub, mul, div };
enum class UnaryOp : std::uint8_t { tanh, sin, cos, exp, neg, square, sqrt, ln, abs };

/// Adjoints of the parameter leaves of a tape, in registration order.
using GradientVector = std::vector<double>;

/// Append-only scalar computation graph with a single reverse sweep.
///
/// Every node stores at most two parents together with the local partial
/// derivatives evaluated at record time. Parents always have smaller ids than
/// their children, so the node list is already in topological order.
///
/// Leaves are either parameters (their adjoints are reported by backward) or
/// constants. Nodes that depend only on constants are flagged constant and are
/// skipped during the reverse sweep.
class Tape {
 public:
  Tape() = default;

  /// Drops all nodes but keeps the allocated storage for reuse.
  void clear();
  void reserve(std::size_t nodes);

  Var leaf(double value, bool is_parameter = false);
  Var constant(double value) { return leaf(value, false); }

  /// Shared constant leaves, created on first use.
  Var zero();
  Var one();

  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var div(Var a, Var b);

  Var tanh(Var a);
  Var sin(Var a);
  Var cos(Var a);
  Var exp(Var a);
  Var neg(Var a);
  Var square(Var a);
  Var sqrt(Var a);
  Var ln(Var a);
  Var abs(Var a);

  /// c * a and a + c for a plain number c.
  Var scale(Var a, double c);
  Var shift(Var a, double c);

  Var apply(BinaryOp op, Var a, Var b);
  Var apply(UnaryOp op, Var a);

  /// n-ary node built term by term: nary_begin(), one nary_term() per
  /// (parent, partial) pair, nary_end(value). No other node may be recorded
  /// in between. Constant parents and zero partials are dropped; a node left
  /// without terms is a constant.
  void nary_begin() { nary_start_ = extra_parent_.size(); }
  void nary_term(Var parent, double partial) {
    if (partial == 0.0 || (flags_[parent.id] & kConstant)) return;
    extra_parent_.push_back(parent.id);
    extra_partial_.push_back(partial);
  }
  Var nary_end(double value);

  /// bias + sum_j c_j v_j
  Var linear_combination(std::span<const Var> v, std::span<const double> c, double bias = 0.0);
  /// sum_j a_j b_j
  Var dot(std::span<const Var> a, std::span<const Var> b);

  double value(Var v) const { return value_[v.id]; }
  /// Parents and partials of a node with at most two parents.
  std::array<double, 2> partials(Var v) const { return partial_[v.id]; }
  std::array<std::uint32_t, 2> parents(Var v) const { return parent_[v.id]; }
  /// Number of parents; for n-ary nodes the number of kept terms.
  std::size_t arity(Var v) const;
  bool is_nary(Var v) const { return arity_[v.id] == kNary; }
  std::span<const std::uint32_t> nary_parents(Var v) const;
  std::span<const double> nary_partials(Var v) const;

  bool is_parameter(Var v) const { return (flags_[v.id] & kParameter) != 0; }
  bool is_constant(Var v) const { return (flags_[v.id] & kConstant) != 0; }
  /// True for constant nodes holding exactly +-0.
  bool is_zero(Var v) const { return is_constant(v) && value_[v.id] == 0.0; }
  bool is_one(Var v) const { return is_constant(v) && value_[v.id] == 1.0; }

  std::size_t size() const { return value_.size(); }
  std::size_t parameter_count() const { return parameters_.size(); }
  std::span<const std::uint32_t> parameter_ids() const { return parameters_; }

  /// Reverse sweep seeded with d(loss)/d(loss) = 1.
  GradientVector backward(Var loss) const;

  /// Reverse sweep seeded with adjoint seeds[k] on node outputs[k]. Equivalent
  /// to backward() of sum_k seeds[k] * outputs[k], without recording that sum.
  GradientVector backward(std::span<const Var> outputs, std::span<const double> seeds) const;

 private:
  enum : std::uint8_t { kParameter = 1, kConstant = 2 };
  // arity marker of n-ary nodes; parent_ then holds {offset, count} into the
  // extra_* arrays
  static constexpr std::uint8_t kNary = 3;

  Var record(double value, std::uint32_t p0, double d0, std::uint32_t p1, double d1, std::uint8_t arity,
             std::uint8_t flags);
  Var unary(Var a, double value, double d);
  Var binary(Var a, Var b, double value, double da, double db);
  GradientVector sweep(std::vector<double>& adjoint) const;

  std::vector<double> value_;
  std::vector<std::array<std::uint32_t, 2>> parent_;
  std::vector<std::array<double, 2>> partial_;
  std::vector<std::uint8_t> arity_;
  std::vector<std::uint8_t> flags_;
  std::vector<std::uint32_t> parameters_;
  std::vector<std::uint32_t> extra_parent_;
  std::vector<double> extra_partial_;
  std::size_t nary_start_ = 0;
  std::int64_t zero_ = -1;
  std::int64_t one_ = -1;
};

/// Free-function spellings of the tape primitives.
inline Var leaf(Tape& tape, double value, bool is_parameter = false) { return tape.leaf(value, is_parameter); }
inline Var var_binary(Tape& tape, BinaryOp op, Var a, Var b) { return tape.apply(op, a, b); }
inline Var var_unary(Tape& tape, UnaryOp op, Var a) { return tape.apply(op, a); }
inline GradientVector backward(const Tape& tape, Var loss) { return tape.backward(loss); }

std::string to_string(BinaryOp op);
std::string to_string(UnaryOp op);

/// A scalar function recorded on a tape: receives the tape and the leaves
/// bound to the evaluation point, returns the output node.
using TapeFunction = std::function<Var(Tape&, std::span<const Var>)>;

/// Largest component-wise relative error between reverse-mode adjoints and
/// central differences (f(x+h) - f(x-h)) / 2h. The denominator of the
/// relative error is max(|analytic|, 1).
double grad_check(const TapeFunction& f, std::span<const double> point, double h);

}  // namespace acpkan
