#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <map>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>

#include "jacopt/dual.hpp"
#include "jacopt/error.hpp"

namespace jacopt {

enum class Op {
  Const,
  Var,
  Neg,
  Add,
  Sub,
  Mul,
  Div,
  Pow,      // integer exponent
  PowReal,  // real exponent, exp/log form
  Sqrt,
  Exp,
  Log,
  Sin,
  Cos,
  Tan,
  Abs,
};

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
  Op op = Op::Const;
  double value = 0.0;     // Const value or PowReal exponent
  std::size_t index = 0;  // Var index
  long exponent = 0;      // Pow exponent
  std::array<NodePtr, 2> child;
};

/// Immutable expression handle. Subtrees may be shared between rows.
class Expr {
 public:
  Expr() : node_(constant_node(0.0)) {}
  explicit Expr(NodePtr node) : node_(std::move(node)) {}

  static Expr constant(double v) { return Expr(constant_node(v)); }
  static Expr var(std::size_t j);
  static Expr unary(Op op, Expr a);
  static Expr binary(Op op, Expr a, Expr b);
  static Expr pow(Expr base, long exponent);
  static Expr pow_real(Expr base, double exponent);

  const Node& node() const { return *node_; }
  const NodePtr& ptr() const { return node_; }

  friend Expr operator+(Expr a, Expr b) { return binary(Op::Add, std::move(a), std::move(b)); }
  friend Expr operator-(Expr a, Expr b) { return binary(Op::Sub, std::move(a), std::move(b)); }
  friend Expr operator*(Expr a, Expr b) { return binary(Op::Mul, std::move(a), std::move(b)); }
  friend Expr operator/(Expr a, Expr b) { return binary(Op::Div, std::move(a), std::move(b)); }
  friend Expr operator-(Expr a) { return unary(Op::Neg, std::move(a)); }

 private:
  static NodePtr constant_node(double v);
  NodePtr node_;
};

using SymbolTable = std::map<std::string, std::size_t, std::less<>>;

/// Parses an arithmetic expression. Precedence from tightest: function
/// call, unary minus, `^` (right-associative), `*` `/`, `+` `-`; the other
/// binary operators associate left. `-x^2` therefore means (-x)^2. An
/// integer literal exponent (optionally signed) yields an exact Pow node, a
/// real literal a PowReal node, anything else exp(b*log(a)).
/// Functions: sqrt exp log sin cos tan abs. Errors carry 1-based columns
/// and the supplied line number.
Expr parse_function(std::string_view text, const SymbolTable& symbols, int line = 0);

/// Inverse of parse_function up to redundant parentheses.
std::string to_string(const Expr& e, std::span<const std::string> names = {});

std::set<std::size_t> free_variables(const Expr& e);

/// Largest Var index + 1 (0 for a variable-free expression).
std::size_t arity(const Expr& e);

bool uses_abs(const Expr& e);

bool structurally_equal(const Expr& a, const Expr& b);

/// Reports arguments of Abs nodes that lie within `tol` of the kink.
struct KinkObserver {
  double tol = 0.0;
  bool hit = false;
};

namespace expr_detail {

template <typename T>
T check_finite(T v, const char* what) {
  if (!std::isfinite(value_of(v))) throw EvalFault(what);
  return v;
}

template <typename T>
T eval_node(const Node& nd, std::span<const T> x, KinkObserver* kinks) {
  using std::cos;
  using std::exp;
  using std::log;
  using std::sin;
  using std::sqrt;
  using std::tan;
  switch (nd.op) {
    case Op::Const: return T(nd.value);
    case Op::Var: return x[nd.index];
    case Op::Neg: return -eval_node<T>(*nd.child[0], x, kinks);
    case Op::Add: return eval_node<T>(*nd.child[0], x, kinks) + eval_node<T>(*nd.child[1], x, kinks);
    case Op::Sub: return eval_node<T>(*nd.child[0], x, kinks) - eval_node<T>(*nd.child[1], x, kinks);
    case Op::Mul: return eval_node<T>(*nd.child[0], x, kinks) * eval_node<T>(*nd.child[1], x, kinks);
    case Op::Div: {
      T num = eval_node<T>(*nd.child[0], x, kinks);
      T den = eval_node<T>(*nd.child[1], x, kinks);
      if (value_of(den) == 0.0) throw EvalFault("division by zero");
      return num / den;
    }
    case Op::Pow: return check_finite(ipow(eval_node<T>(*nd.child[0], x, kinks), nd.exponent), "overflow in power");
    case Op::PowReal: return check_finite(rpow(eval_node<T>(*nd.child[0], x, kinks), nd.value), "overflow in power");
    case Op::Sqrt: {
      T u = eval_node<T>(*nd.child[0], x, kinks);
      if (value_of(u) < 0.0) throw EvalFault("sqrt of a negative number");
      return sqrt(u);
    }
    case Op::Exp: return check_finite(exp(eval_node<T>(*nd.child[0], x, kinks)), "overflow in exp");
    case Op::Log: {
      T u = eval_node<T>(*nd.child[0], x, kinks);
      if (value_of(u) <= 0.0) throw EvalFault("log of a nonpositive number");
      return log(u);
    }
    case Op::Sin: return sin(eval_node<T>(*nd.child[0], x, kinks));
    case Op::Cos: return cos(eval_node<T>(*nd.child[0], x, kinks));
    case Op::Tan: return check_finite(tan(eval_node<T>(*nd.child[0], x, kinks)), "tan overflow");
    case Op::Abs: {
      T u = eval_node<T>(*nd.child[0], x, kinks);
      if (kinks && std::fabs(value_of(u)) <= kinks->tol) kinks->hit = true;
      if constexpr (std::is_same_v<T, double>) {
        return std::fabs(u);
      } else {
        return abs(u);
      }
    }
  }
  throw EvalFault("corrupt expression node");
}

}  // namespace expr_detail

/// Evaluates `e` over any scalar type implementing the node algebra
/// (double and Dual are provided).
template <typename T>
T evaluate(const Expr& e, std::span<const T> x, KinkObserver* kinks = nullptr) {
  return expr_detail::check_finite(expr_detail::eval_node<T>(e.node(), x, kinks), "non-finite result");
}

}  // namespace jacopt
