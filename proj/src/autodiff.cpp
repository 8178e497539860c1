#include "acpkan/autodiff.hpp"

#include <algorithm>
#include <cmath>

namespace acpkan {

void Tape::clear() {
  value_.clear();
  parent_.clear();
  partial_.clear();
  arity_.clear();
  flags_.clear();
  parameters_.clear();
  extra_parent_.clear();
  extra_partial_.clear();
  nary_start_ = 0;
  zero_ = -1;
  one_ = -1;
}

void Tape::reserve(std::size_t nodes) {
  value_.reserve(nodes);
  parent_.reserve(nodes);
  partial_.reserve(nodes);
  arity_.reserve(nodes);
  flags_.reserve(nodes);
}

Var Tape::record(double value, std::uint32_t p0, double d0, std::uint32_t p1, double d1, std::uint8_t arity,
                 std::uint8_t flags) {
  const auto id = static_cast<std::uint32_t>(value_.size());
  value_.push_back(value);
  parent_.push_back({p0, p1});
  partial_.push_back({d0, d1});
  arity_.push_back(arity);
  flags_.push_back(flags);
  return Var{id};
}

Var Tape::leaf(double value, bool is_parameter) {
  Var v = record(value, 0, 0.0, 0, 0.0, 0, is_parameter ? kParameter : kConstant);
  if (is_parameter) parameters_.push_back(v.id);
  return v;
}

Var Tape::zero() {
  if (zero_ < 0) zero_ = leaf(0.0).id;
  return Var{static_cast<std::uint32_t>(zero_)};
}

Var Tape::one() {
  if (one_ < 0) one_ = leaf(1.0).id;
  return Var{static_cast<std::uint32_t>(one_)};
}

std::size_t Tape::arity(Var v) const { return arity_[v.id] == kNary ? parent_[v.id][1] : arity_[v.id]; }

std::span<const std::uint32_t> Tape::nary_parents(Var v) const {
  if (arity_[v.id] != kNary) return {};
  return std::span<const std::uint32_t>(extra_parent_).subspan(parent_[v.id][0], parent_[v.id][1]);
}

std::span<const double> Tape::nary_partials(Var v) const {
  if (arity_[v.id] != kNary) return {};
  return std::span<const double>(extra_partial_).subspan(parent_[v.id][0], parent_[v.id][1]);
}

Var Tape::nary_end(double value) {
  const std::size_t count = extra_parent_.size() - nary_start_;
  if (count == 0) return record(value, 0, 0.0, 0, 0.0, 0, kConstant);
  return record(value, static_cast<std::uint32_t>(nary_start_), 0.0, static_cast<std::uint32_t>(count), 0.0, kNary, 0);
}

Var Tape::linear_combination(std::span<const Var> v, std::span<const double> c, double bias) {
  if (v.size() != c.size()) throw std::invalid_argument("linear_combination: length mismatch");
  double value = bias;
  nary_begin();
  for (std::size_t j = 0; j < v.size(); ++j) {
    value += c[j] * value_[v[j].id];
    nary_term(v[j], c[j]);
  }
  return nary_end(value);
}

Var Tape::dot(std::span<const Var> a, std::span<const Var> b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: length mismatch");
  double value = 0.0;
  nary_begin();
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double x = value_[a[j].id], y = value_[b[j].id];
    value += x * y;
    nary_term(a[j], y);
    nary_term(b[j], x);
  }
  return nary_end(value);
}

Var Tape::unary(Var a, double value, double d) {
  return record(value, a.id, d, a.id, 0.0, 1, flags_[a.id] & kConstant);
}

Var Tape::binary(Var a, Var b, double value, double da, double db) {
  return record(value, a.id, da, b.id, db, 2, flags_[a.id] & flags_[b.id] & kConstant);
}

Var Tape::add(Var a, Var b) { return binary(a, b, value_[a.id] + value_[b.id], 1.0, 1.0); }

Var Tape::sub(Var a, Var b) { return binary(a, b, value_[a.id] - value_[b.id], 1.0, -1.0); }

Var Tape::mul(Var a, Var b) {
  const double x = value_[a.id];
  const double y = value_[b.id];
  return binary(a, b, x * y, y, x);
}

Var Tape::div(Var a, Var b) {
  const double x = value_[a.id];
  const double y = value_[b.id];
  if (y == 0.0) throw DomainError("div: division by zero");
  const double inv = 1.0 / y;
  return binary(a, b, x / y, inv, -x * inv * inv);
}

Var Tape::tanh(Var a) {
  const double y = std::tanh(value_[a.id]);
  return unary(a, y, 1.0 - y * y);
}

Var Tape::sin(Var a) { return unary(a, std::sin(value_[a.id]), std::cos(value_[a.id])); }

Var Tape::cos(Var a) { return unary(a, std::cos(value_[a.id]), -std::sin(value_[a.id])); }

Var Tape::exp(Var a) {
  const double y = std::exp(value_[a.id]);
  return unary(a, y, y);
}

Var Tape::neg(Var a) { return unary(a, -value_[a.id], -1.0); }

Var Tape::square(Var a) {
  const double x = value_[a.id];
  return unary(a, x * x, 2.0 * x);
}

Var Tape::sqrt(Var a) {
  const double x = value_[a.id];
  if (!(x > 0.0)) throw DomainError("sqrt: argument must be positive");
  const double y = std::sqrt(x);
  return unary(a, y, 0.5 / y);
}

Var Tape::ln(Var a) {
  const double x = value_[a.id];
  if (!(x > 0.0)) throw DomainError("ln: argument must be positive");
  return unary(a, std::log(x), 1.0 / x);
}

// abs'(0) is taken as 0.
Var Tape::abs(Var a) {
  const double x = value_[a.id];
  const double d = x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
  return unary(a, std::fabs(x), d);
}

Var Tape::scale(Var a, double c) { return unary(a, c * value_[a.id], c); }

Var Tape::shift(Var a, double c) { return unary(a, value_[a.id] + c, 1.0); }

Var Tape::apply(BinaryOp op, Var a, Var b) {
  switch (op) {
    case BinaryOp::add: return add(a, b);
    case BinaryOp::sub: return sub(a, b);
    case BinaryOp::mul: return mul(a, b);
    case BinaryOp::div: return div(a, b);
  }
  throw std::invalid_argument("unknown binary op");
}

Var Tape::apply(UnaryOp op, Var a) {
  switch (op) {
    case UnaryOp::tanh: return tanh(a);
    case UnaryOp::sin: return sin(a);
    case UnaryOp::cos: return cos(a);
    case UnaryOp::exp: return exp(a);
    case UnaryOp::neg: return neg(a);
    case UnaryOp::square: return square(a);
    case UnaryOp::sqrt: return sqrt(a);
    case UnaryOp::ln: return ln(a);
    case UnaryOp::abs: return abs(a);
  }
  throw std::invalid_argument("unknown unary op");
}

GradientVector Tape::sweep(std::vector<double>& adjoint) const {
  for (std::size_t i = value_.size(); i-- > 0;) {
    const double a = adjoint[i];
    if (a == 0.0 || arity_[i] == 0 || (flags_[i] & kConstant)) continue;
    const auto& p = parent_[i];
    if (arity_[i] == kNary) {
      const std::uint32_t* ep = extra_parent_.data() + p[0];
      const double* ed = extra_partial_.data() + p[0];
      for (std::uint32_t j = 0; j < p[1]; ++j) adjoint[ep[j]] += ed[j] * a;
      continue;
    }
    const auto& d = partial_[i];
    adjoint[p[0]] += d[0] * a;
    adjoint[p[1]] += d[1] * a;
  }
  GradientVector grad(parameters_.size());
  for (std::size_t k = 0; k < parameters_.size(); ++k) grad[k] = adjoint[parameters_[k]];
  return grad;
}

GradientVector Tape::backward(Var loss) const {
  std::vector<double> adjoint(value_.size(), 0.0);
  adjoint[loss.id] = 1.0;
  return sweep(adjoint);
}

GradientVector Tape::backward(std::span<const Var> outputs, std::span<const double> seeds) const {
  if (outputs.size() != seeds.size()) throw std::invalid_argument("backward: outputs and seeds differ in length");
  std::vector<double> adjoint(value_.size(), 0.0);
  for (std::size_t k = 0; k < outputs.size(); ++k) adjoint[outputs[k].id] += seeds[k];
  return sweep(adjoint);
}

std::string to_string(BinaryOp op) {
  switch (op) {
    case BinaryOp::add: return "add";
    case BinaryOp::sub: return "sub";
    case BinaryOp::mul: return "mul";
    case BinaryOp::div: return "div";
  }
  return "?";
}

std::string to_string(UnaryOp op) {
  switch (op) {
    case UnaryOp::tanh: return "tanh";
    case UnaryOp::sin: return "sin";
    case UnaryOp::cos: return "cos";
    case UnaryOp::exp: return "exp";
    case UnaryOp::neg: return "neg";
    case UnaryOp::square: return "square";
    case UnaryOp::sqrt: return "sqrt";
    case UnaryOp::ln: return "ln";
    case UnaryOp::abs: return "abs";
  }
  return "?";
}

double grad_check(const TapeFunction& f, std::span<const double> point, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("grad_check: step must be positive");

  auto evaluate = [&](std::span<const double> x, GradientVector* grad) {
    Tape tape;
    std::vector<Var> leaves;
    leaves.reserve(x.size());
    for (double xi : x) leaves.push_back(tape.leaf(xi, true));
    Var out = f(tape, leaves);
    if (grad) *grad = tape.backward(out);
    return tape.value(out);
  };

  GradientVector analytic;
  evaluate(point, &analytic);

  std::vector<double> x(point.begin(), point.end());
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double x0 = x[i];
    x[i] = x0 + h;
    const double fp = evaluate(x, nullptr);
    x[i] = x0 - h;
    const double fm = evaluate(x, nullptr);
    x[i] = x0;
    const double numeric = (fp - fm) / (2.0 * h);
    const double err = std::fabs(analytic[i] - numeric) / std::max(std::fabs(analytic[i]), 1.0);
    worst = std::max(worst, err);
  }
  return worst;
}

}  // namespace acpkan
