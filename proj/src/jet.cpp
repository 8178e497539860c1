#include "acpkan/jet.hpp"

#include <algorithm>
#include <stdexcept>

namespace acpkan {

Var fold_add(Tape& t, Var a, Var b) {
  if (t.is_zero(a)) return b;
  if (t.is_zero(b)) return a;
  return t.add(a, b);
}

Var fold_sub(Tape& t, Var a, Var b) {
  if (t.is_zero(b)) return a;
  if (t.is_zero(a)) return t.neg(b);
  return t.sub(a, b);
}

Var fold_mul(Tape& t, Var a, Var b) {
  if (t.is_zero(a) || t.is_zero(b)) return t.zero();
  if (t.is_one(a)) return b;
  if (t.is_one(b)) return a;
  return t.mul(a, b);
}

Var fold_fma(Tape& t, Var acc, Var a, Var b) { return fold_add(t, acc, fold_mul(t, a, b)); }

namespace {

Var fold_scale(Tape& t, Var a, double c) {
  if (t.is_zero(a)) return a;
  return t.scale(a, c);
}

Var fold_neg(Tape& t, Var a) {
  if (t.is_zero(a)) return a;
  return t.neg(a);
}

void check_compatible(const Jet& a, const Jet& b) {
  if (&a.tape() != &b.tape()) throw std::invalid_argument("jet: operands live on different tapes");
  if (a.dim() != b.dim()) throw std::invalid_argument("jet: dimension mismatch");
}

int result_order(const Jet& a, const Jet& b) { return std::min(a.order(), b.order()); }

// Second-order chain rule for y = f(a) given f'(a) and f''(a) as nodes.
Jet chain(const Jet& a, Var y, Var f1, Var f2) {
  Tape& t = a.tape();
  Jet r(t, a.dim(), a.order());
  r.val = y;
  if (a.order() >= 1) {
    for (int i = 0; i < a.dim(); ++i) r.grad[i] = fold_mul(t, f1, a.grad[i]);
  }
  if (a.order() >= 2) {
    for (int i = 0; i < a.dim(); ++i) {
      for (int j = i; j < a.dim(); ++j) {
        Var outer = fold_mul(t, a.grad[i], a.grad[j]);
        r.h(i, j) = fold_add(t, fold_mul(t, f2, outer), fold_mul(t, f1, a.h(i, j)));
      }
    }
  }
  return r;
}

template <typename Fn>
Jet componentwise(const Jet& a, Fn&& fn) {
  Jet r(a.tape(), a.dim(), a.order());
  r.val = fn(a.val, true);
  for (std::size_t i = 0; i < r.grad.size(); ++i) r.grad[i] = fn(a.grad[i], false);
  for (std::size_t i = 0; i < r.hess.size(); ++i) r.hess[i] = fn(a.hess[i], false);
  return r;
}

template <typename Fn>
Jet componentwise(const Jet& a, const Jet& b, Fn&& fn) {
  check_compatible(a, b);
  Jet r(a.tape(), a.dim(), result_order(a, b));
  r.val = fn(a.val, b.val);
  for (std::size_t i = 0; i < r.grad.size(); ++i) r.grad[i] = fn(a.grad[i], b.grad[i]);
  for (std::size_t i = 0; i < r.hess.size(); ++i) r.hess[i] = fn(a.hess[i], b.hess[i]);
  return r;
}

}  // namespace

Jet::Jet(Tape& tape, int dim, int order) : tape_(&tape), dim_(dim), order_(order) {
  if (dim < 1) throw std::invalid_argument("jet: dimension must be positive");
  if (order < 0 || order > 2) throw std::invalid_argument("jet: order must be 0, 1 or 2");
  val = tape.zero();
  if (order >= 1) grad.assign(static_cast<std::size_t>(dim), tape.zero());
  if (order >= 2) hess.assign(hess_size(dim), tape.zero());
}

Jet jet_input(Tape& tape, double value, int index, int dim, int order) {
  if (index < 0 || index >= dim) throw std::out_of_range("jet_input: index out of range");
  Jet j(tape, dim, order);
  j.val = tape.leaf(value);
  if (order >= 1) j.grad[index] = tape.one();
  return j;
}

Jet jet_broadcast(Tape& tape, Var v, int dim, int order) {
  Jet j(tape, dim, order);
  j.val = v;
  return j;
}

Jet jet_constant(Tape& tape, double value, int dim, int order) {
  return jet_broadcast(tape, value == 0.0 ? tape.zero() : tape.constant(value), dim, order);
}

Jet operator+(const Jet& a, const Jet& b) {
  Tape& t = a.tape();
  return componentwise(a, b, [&t](Var x, Var y) { return fold_add(t, x, y); });
}

Jet operator-(const Jet& a, const Jet& b) {
  Tape& t = a.tape();
  return componentwise(a, b, [&t](Var x, Var y) { return fold_sub(t, x, y); });
}

Jet operator-(const Jet& a) {
  Tape& t = a.tape();
  return componentwise(a, [&t](Var x, bool) { return fold_neg(t, x); });
}

Jet operator*(const Jet& a, const Jet& b) {
  check_compatible(a, b);
  Tape& t = a.tape();
  const int d = a.dim();
  Jet r(t, d, result_order(a, b));
  r.val = fold_mul(t, a.val, b.val);
  if (r.order() >= 1) {
    for (int i = 0; i < d; ++i) {
      r.grad[i] = fold_add(t, fold_mul(t, a.grad[i], b.val), fold_mul(t, a.val, b.grad[i]));
    }
  }
  if (r.order() >= 2) {
    for (int i = 0; i < d; ++i) {
      for (int j = i; j < d; ++j) {
        Var acc = fold_mul(t, a.h(i, j), b.val);
        acc = fold_fma(t, acc, a.grad[i], b.grad[j]);
        acc = fold_fma(t, acc, a.grad[j], b.grad[i]);
        acc = fold_fma(t, acc, a.val, b.h(i, j));
        r.h(i, j) = acc;
      }
    }
  }
  return r;
}

Jet operator/(const Jet& a, const Jet& b) {
  check_compatible(a, b);
  Tape& t = a.tape();
  const int d = a.dim();
  Jet r(t, d, result_order(a, b));
  r.val = t.div(a.val, b.val);
  auto over_b = [&](Var num) { return t.is_zero(num) ? num : t.div(num, b.val); };
  if (r.order() >= 1) {
    for (int i = 0; i < d; ++i) {
      r.grad[i] = over_b(fold_sub(t, a.grad[i], fold_mul(t, r.val, b.grad[i])));
    }
  }
  if (r.order() >= 2) {
    for (int i = 0; i < d; ++i) {
      for (int j = i; j < d; ++j) {
        Var num = a.h(i, j);
        num = fold_sub(t, num, fold_mul(t, r.grad[i], b.grad[j]));
        num = fold_sub(t, num, fold_mul(t, r.grad[j], b.grad[i]));
        num = fold_sub(t, num, fold_mul(t, r.val, b.h(i, j)));
        r.h(i, j) = over_b(num);
      }
    }
  }
  return r;
}

Jet operator*(const Jet& a, double c) {
  Tape& t = a.tape();
  return componentwise(a, [&t, c](Var x, bool) { return fold_scale(t, x, c); });
}

Jet operator*(double c, const Jet& a) { return a * c; }

Jet operator+(const Jet& a, double c) {
  Tape& t = a.tape();
  return componentwise(a, [&t, c](Var x, bool is_val) { return is_val ? t.shift(x, c) : x; });
}

Jet operator+(double c, const Jet& a) { return a + c; }

Jet operator-(const Jet& a, double c) { return a + (-c); }

Jet operator-(double c, const Jet& a) {
  Tape& t = a.tape();
  return componentwise(a, [&t, c](Var x, bool is_val) { return is_val ? t.shift(t.neg(x), c) : fold_neg(t, x); });
}

Jet scale(const Jet& a, Var v) {
  Tape& t = a.tape();
  return componentwise(a, [&t, v](Var x, bool) { return fold_mul(t, x, v); });
}

Jet tanh(const Jet& a) {
  Tape& t = a.tape();
  Var y = t.tanh(a.val);
  Var f1 = a.order() >= 1 ? t.shift(t.neg(t.square(y)), 1.0) : t.zero();
  Var f2 = a.order() >= 2 ? t.scale(t.mul(y, f1), -2.0) : t.zero();
  return chain(a, y, f1, f2);
}

Jet sin(const Jet& a) {
  Tape& t = a.tape();
  Var y = t.sin(a.val);
  Var f1 = a.order() >= 1 ? t.cos(a.val) : t.zero();
  Var f2 = a.order() >= 2 ? t.neg(y) : t.zero();
  return chain(a, y, f1, f2);
}

Jet cos(const Jet& a) {
  Tape& t = a.tape();
  Var y = t.cos(a.val);
  Var f1 = a.order() >= 1 ? t.neg(t.sin(a.val)) : t.zero();
  Var f2 = a.order() >= 2 ? t.neg(y) : t.zero();
  return chain(a, y, f1, f2);
}

Jet exp(const Jet& a) {
  Tape& t = a.tape();
  Var y = t.exp(a.val);
  return chain(a, y, y, y);
}

Jet square(const Jet& a) {
  Tape& t = a.tape();
  Var y = t.square(a.val);
  Var f1 = a.order() >= 1 ? t.scale(a.val, 2.0) : t.zero();
  Var f2 = a.order() >= 2 ? t.constant(2.0) : t.zero();
  return chain(a, y, f1, f2);
}

Jet sqrt(const Jet& a) {
  Tape& t = a.tape();
  Var y = t.sqrt(a.val);
  Var f1 = a.order() >= 1 ? t.div(t.constant(0.5), y) : t.zero();
  Var f2 = a.order() >= 2 ? t.scale(t.div(f1, a.val), -0.5) : t.zero();
  return chain(a, y, f1, f2);
}

Jet ln(const Jet& a) {
  Tape& t = a.tape();
  Var y = t.ln(a.val);
  Var f1 = a.order() >= 1 ? t.div(t.one(), a.val) : t.zero();
  Var f2 = a.order() >= 2 ? t.neg(t.square(f1)) : t.zero();
  return chain(a, y, f1, f2);
}

Jet abs(const Jet& a) {
  Tape& t = a.tape();
  Var y = t.abs(a.val);
  const double x = a.value();
  const double sign = x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
  Var f1 = a.order() >= 1 ? t.constant(sign) : t.zero();
  return chain(a, y, f1, t.zero());
}

Jet jet_binary(BinaryOp op, const Jet& a, const Jet& b) {
  switch (op) {
    case BinaryOp::add: return a + b;
    case BinaryOp::sub: return a - b;
    case BinaryOp::mul: return a * b;
    case BinaryOp::div: return a / b;
  }
  throw std::invalid_argument("unknown binary op");
}

Jet jet_unary(UnaryOp op, const Jet& a) {
  switch (op) {
    case UnaryOp::tanh: return tanh(a);
    case UnaryOp::sin: return sin(a);
    case UnaryOp::cos: return cos(a);
    case UnaryOp::exp: return exp(a);
    case UnaryOp::neg: return -a;
    case UnaryOp::square: return square(a);
    case UnaryOp::sqrt: return sqrt(a);
    case UnaryOp::ln: return ln(a);
    case UnaryOp::abs: return abs(a);
  }
  throw std::invalid_argument("unknown unary op");
}

}  // namespace acpkan
