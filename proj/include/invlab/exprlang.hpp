#pragma once

// Arithmetic expressions over state variables x1..xn and control variables
// u1..uk, with forward-mode dual-number differentiation.
//
// Grammar (EBNF, whitespace between tokens is ignored):
//
//   expr    = term { ("+" | "-") term } ;
//   term    = unary { ("*" | "/") unary } ;
//   unary   = "-" unary | power ;
//   power   = primary [ "^" unary ] ;            (right associative)
//   primary = number | variable | call | "(" expr ")" ;
//   call    = func "(" expr ")" | "pow" "(" expr "," expr ")" ;
//   func    = "sin" | "cos" | "exp" | "log" | "sqrt" | "tanh" | "abs" ;
//   variable= ("x" | "u") digit { digit } ;      (1-based)
//   number  = digit { digit } [ "." { digit } ] [ ("e" | "E") [ "+" | "-" ] digit { digit } ]
//           | "." digit { digit } [ exponent ] ;
//
// "^" binds tighter than unary minus, so "-x1^2" is -(x1^2) while "x1^-2"
// is x1^(-2).

#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "invlab/errors.hpp"
#include "invlab/types.hpp"

namespace invlab::expr {

inline constexpr int kMaxDepth = 256;

enum class Op {
  kConst,
  kVarX,
  kVarU,
  kAdd,
  kSub,
  kMul,
  kDiv,
  kNeg,
  kPow,
  kSin,
  kCos,
  kExp,
  kLog,
  kSqrt,
  kTanh,
  kAbs,
};

struct Dims {
  int n = 0;  // state variables x1..xn
  int k = 0;  // control variables u1..uk
};

// Zero-based source position with its "line:col" rendering.
struct SourcePos {
  std::size_t offset = 0;
  int line = 1;
  int col = 1;
};

class ParseError : public Error {
 public:
  ParseError(SourcePos pos, const std::string& message);
  const SourcePos& pos() const { return pos_; }
  std::size_t offset() const { return pos_.offset; }

 private:
  SourcePos pos_;
};

// Out-of-domain evaluation (log of nonpositive value, division by zero, ...).
class DomainError : public EvaluationError {
 public:
  DomainError(SourcePos pos, const std::string& message);
  const SourcePos& pos() const { return pos_; }

 private:
  SourcePos pos_;
};

struct Node {
  Op op = Op::kConst;
  double value = 0.0;   // kConst
  int index = 0;        // kVarX / kVarU, zero-based
  int lhs = -1;
  int rhs = -1;
  std::size_t offset = 0;
};

template <class T>
struct Dual {
  T value{};
  std::vector<T> partials;
};

struct Variable {
  enum class Kind { kX, kU };
  Kind kind = Kind::kX;
  int index = 0;  // zero-based

  static Variable x(int i) { return {Kind::kX, i}; }
  static Variable u(int i) { return {Kind::kU, i}; }
};

class Expr {
 public:
  Expr() = default;

  const std::string& source() const { return source_; }
  const Dims& dims() const { return dims_; }
  const std::vector<Node>& nodes() const { return nodes_; }
  int root() const { return root_; }

  int depth() const;
  bool uses(Op op) const;
  bool structurally_equal(const Expr& other) const;

  /// Reparseable rendering, fully parenthesized.
  std::string print() const;
  /// Tree rendering such as "Add(x1, Mul(2, x2))".
  std::string tree() const;

  SourcePos position(std::size_t offset) const;

  template <class T>
  T evaluate(const std::vector<T>& x, const std::vector<T>& u) const {
    return eval_node<T>(root_, x, u);
  }

 private:
  friend Expr parse(std::string_view source, Dims dims);

  template <class T>
  T eval_node(int id, const std::vector<T>& x, const std::vector<T>& u) const;

  [[noreturn]] void domain_error(int id, const std::string& message) const;

  std::string source_;
  Dims dims_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

/// Throws ParseError with the byte offset of the failure.
Expr parse(std::string_view source, Dims dims);

double eval(const Expr& e, const Vec& x, const Vec& u);

Dual<double> eval_dual(const Expr& e, const Vec& x, const Vec& u,
                       const std::vector<Variable>& wrt);

struct SecondOrder {
  double value = 0.0;
  Vec gradient;  // wrt x
  Mat hessian;   // wrt x
};

/// Value, gradient and Hessian with respect to x via nested dual numbers.
SecondOrder eval_second_order(const Expr& e, const Vec& x, const Vec& u);

// ---------------------------------------------------------------------------
// Scalar primitives shared by double and Dual<T>.

namespace detail {

inline double primal(double v) { return v; }
template <class T>
double primal(const Dual<T>& v) {
  return primal(v.value);
}

inline bool is_zero(double v) { return v == 0.0; }
template <class T>
bool is_zero(const Dual<T>& v) {
  if (!is_zero(v.value)) return false;
  for (const auto& p : v.partials) {
    if (!is_zero(p)) return false;
  }
  return true;
}

// True when no partial derivative carries any information.
inline bool is_constant(double) { return true; }
template <class T>
bool is_constant(const Dual<T>& v) {
  for (const auto& p : v.partials) {
    if (!is_zero(p)) return false;
  }
  return true;
}

inline bool all_finite(double v) { return std::isfinite(v); }
template <class T>
bool all_finite(const Dual<T>& v) {
  if (!all_finite(v.value)) return false;
  for (const auto& p : v.partials) {
    if (!all_finite(p)) return false;
  }
  return true;
}

inline double constant_like(double, double c) { return c; }
template <class T>
Dual<T> constant_like(const Dual<T>& like, double c) {
  Dual<T> out;
  out.value = constant_like(like.value, c);
  out.partials.assign(like.partials.size(), constant_like(like.value, 0.0));
  return out;
}

inline double add(double a, double b) { return a + b; }
inline double sub(double a, double b) { return a - b; }
inline double mul(double a, double b) { return a * b; }
inline double div(double a, double b) { return a / b; }
inline double neg(double a) { return -a; }
inline double pow_(double a, double b) { return std::pow(a, b); }
inline double sin_(double a) { return std::sin(a); }
inline double cos_(double a) { return std::cos(a); }
inline double exp_(double a) { return std::exp(a); }
inline double log_(double a) { return std::log(a); }
inline double sqrt_(double a) { return std::sqrt(a); }
inline double tanh_(double a) { return std::tanh(a); }
inline double abs_(double a) { return std::abs(a); }

template <class T>
Dual<T> add(const Dual<T>& a, const Dual<T>& b);
template <class T>
Dual<T> sub(const Dual<T>& a, const Dual<T>& b);
template <class T>
Dual<T> mul(const Dual<T>& a, const Dual<T>& b);
template <class T>
Dual<T> div(const Dual<T>& a, const Dual<T>& b);
template <class T>
Dual<T> neg(const Dual<T>& a);
template <class T>
Dual<T> pow_(const Dual<T>& a, const Dual<T>& b);
template <class T>
Dual<T> sin_(const Dual<T>& a);
template <class T>
Dual<T> cos_(const Dual<T>& a);
template <class T>
Dual<T> exp_(const Dual<T>& a);
template <class T>
Dual<T> log_(const Dual<T>& a);
template <class T>
Dual<T> sqrt_(const Dual<T>& a);
template <class T>
Dual<T> tanh_(const Dual<T>& a);
template <class T>
Dual<T> abs_(const Dual<T>& a);

// Multiplies every partial of a by the scalar-like factor f.
template <class T>
Dual<T> chain(T value, const Dual<T>& a, const T& f) {
  Dual<T> out{std::move(value), {}};
  out.partials.reserve(a.partials.size());
  for (const auto& p : a.partials) out.partials.push_back(mul(p, f));
  return out;
}

template <class T>
Dual<T> add(const Dual<T>& a, const Dual<T>& b) {
  Dual<T> out{add(a.value, b.value), {}};
  out.partials.reserve(a.partials.size());
  for (std::size_t i = 0; i < a.partials.size(); ++i) {
    out.partials.push_back(add(a.partials[i], b.partials[i]));
  }
  return out;
}

template <class T>
Dual<T> sub(const Dual<T>& a, const Dual<T>& b) {
  Dual<T> out{sub(a.value, b.value), {}};
  out.partials.reserve(a.partials.size());
  for (std::size_t i = 0; i < a.partials.size(); ++i) {
    out.partials.push_back(sub(a.partials[i], b.partials[i]));
  }
  return out;
}

template <class T>
Dual<T> mul(const Dual<T>& a, const Dual<T>& b) {
  Dual<T> out{mul(a.value, b.value), {}};
  out.partials.reserve(a.partials.size());
  for (std::size_t i = 0; i < a.partials.size(); ++i) {
    out.partials.push_back(
        add(mul(a.partials[i], b.value), mul(a.value, b.partials[i])));
  }
  return out;
}

template <class T>
Dual<T> div(const Dual<T>& a, const Dual<T>& b) {
  Dual<T> out{div(a.value, b.value), {}};
  const T b2 = mul(b.value, b.value);
  out.partials.reserve(a.partials.size());
  for (std::size_t i = 0; i < a.partials.size(); ++i) {
    out.partials.push_back(div(
        sub(mul(a.partials[i], b.value), mul(a.value, b.partials[i])), b2));
  }
  return out;
}

template <class T>
Dual<T> neg(const Dual<T>& a) {
  Dual<T> out{neg(a.value), {}};
  out.partials.reserve(a.partials.size());
  for (const auto& p : a.partials) out.partials.push_back(neg(p));
  return out;
}

template <class T>
Dual<T> pow_(const Dual<T>& a, const Dual<T>& b) {
  const T value = pow_(a.value, b.value);
  // d(a^b) = b a^(b-1) da + a^b log(a) db; the log term only for varying b.
  const T one = constant_like(a.value, 1.0);
  Dual<T> out = chain(value, a, mul(b.value, pow_(a.value, sub(b.value, one))));
  if (!is_constant(b)) {
    const T f = mul(value, log_(a.value));
    for (std::size_t i = 0; i < out.partials.size(); ++i) {
      out.partials[i] = add(out.partials[i], mul(b.partials[i], f));
    }
  }
  return out;
}

template <class T>
Dual<T> sin_(const Dual<T>& a) {
  return chain(sin_(a.value), a, cos_(a.value));
}
template <class T>
Dual<T> cos_(const Dual<T>& a) {
  return chain(cos_(a.value), a, neg(sin_(a.value)));
}
template <class T>
Dual<T> exp_(const Dual<T>& a) {
  T e = exp_(a.value);
  return chain(e, a, e);
}
template <class T>
Dual<T> log_(const Dual<T>& a) {
  return chain(log_(a.value), a, div(constant_like(a.value, 1.0), a.value));
}
template <class T>
Dual<T> sqrt_(const Dual<T>& a) {
  T r = sqrt_(a.value);
  return chain(r, a, div(constant_like(a.value, 0.5), r));
}
template <class T>
Dual<T> tanh_(const Dual<T>& a) {
  T t = tanh_(a.value);
  return chain(t, a, sub(constant_like(a.value, 1.0), mul(t, t)));
}
template <class T>
Dual<T> abs_(const Dual<T>& a) {
  const double s = primal(a.value) > 0.0 ? 1.0 : (primal(a.value) < 0.0 ? -1.0 : 0.0);
  return chain(abs_(a.value), a, constant_like(a.value, s));
}

}  // namespace detail

template <class T>
T Expr::eval_node(int id, const std::vector<T>& x, const std::vector<T>& u) const {
  using namespace detail;
  const Node& nd = nodes_[static_cast<std::size_t>(id)];
  switch (nd.op) {
    case Op::kConst:
      return constant_like(x.empty() ? (u.empty() ? T{} : u[0]) : x[0], nd.value);
    case Op::kVarX:
      return x[static_cast<std::size_t>(nd.index)];
    case Op::kVarU:
      return u[static_cast<std::size_t>(nd.index)];
    case Op::kNeg:
      return neg(eval_node<T>(nd.lhs, x, u));
    case Op::kAdd:
      return add(eval_node<T>(nd.lhs, x, u), eval_node<T>(nd.rhs, x, u));
    case Op::kSub:
      return sub(eval_node<T>(nd.lhs, x, u), eval_node<T>(nd.rhs, x, u));
    case Op::kMul:
      return mul(eval_node<T>(nd.lhs, x, u), eval_node<T>(nd.rhs, x, u));
    case Op::kDiv: {
      T a = eval_node<T>(nd.lhs, x, u);
      T b = eval_node<T>(nd.rhs, x, u);
      if (primal(b) == 0.0) domain_error(id, "division by zero");
      return div(a, b);
    }
    case Op::kPow: {
      T a = eval_node<T>(nd.lhs, x, u);
      T b = eval_node<T>(nd.rhs, x, u);
      const double av = primal(a);
      const double bv = primal(b);
      if (av < 0.0 && bv != std::floor(bv)) {
        domain_error(id, "pow of negative base with non-integer exponent");
      }
      if (av == 0.0 && bv < 0.0) domain_error(id, "pow of zero with negative exponent");
      if (av <= 0.0 && !is_constant(b)) {
        domain_error(id, "pow with varying exponent needs a positive base");
      }
      return pow_(a, b);
    }
    case Op::kSin:
      return sin_(eval_node<T>(nd.lhs, x, u));
    case Op::kCos:
      return cos_(eval_node<T>(nd.lhs, x, u));
    case Op::kExp:
      return exp_(eval_node<T>(nd.lhs, x, u));
    case Op::kLog: {
      T a = eval_node<T>(nd.lhs, x, u);
      if (primal(a) <= 0.0) domain_error(id, "log of nonpositive value");
      return log_(a);
    }
    case Op::kSqrt: {
      T a = eval_node<T>(nd.lhs, x, u);
      if (primal(a) < 0.0) domain_error(id, "sqrt of negative value");
      if (primal(a) == 0.0 && !std::is_same_v<T, double>) {
        domain_error(id, "sqrt is not differentiable at 0");
      }
      return sqrt_(a);
    }
    case Op::kTanh:
      return tanh_(eval_node<T>(nd.lhs, x, u));
    case Op::kAbs:
      return abs_(eval_node<T>(nd.lhs, x, u));
  }
  domain_error(id, "unknown operation");
}

}  // namespace invlab::expr
