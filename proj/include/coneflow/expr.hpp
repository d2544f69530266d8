#pragma once

#include "coneflow/types.hpp"

#include <cmath>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

namespace coneflow {

enum class NodeKind { Literal, Var, Param, Add, Sub, Mul, Div, Pow, Neg, Sin, Cos, Exp };

struct Node {
  NodeKind kind = NodeKind::Literal;
  double value = 0.0;  // Literal
  int slot = -1;       // Var / Param index in the owning scope
  int lhs = -1;        // operand (unary) or left operand (binary)
  int rhs = -1;
};

/// Names visible to an expression: state variables first, then parameters.
struct NameScope {
  std::vector<std::string> states;
  std::vector<std::string> params;
};

/// Expression tree stored as a node pool; `root` indexes the top node.
class Expr {
 public:
  int add_literal(double v);
  int add_var(int slot);
  int add_param(int slot);
  int add_unary(NodeKind kind, int operand);
  int add_binary(NodeKind kind, int lhs, int rhs);

  const std::vector<Node>& nodes() const { return nodes_; }
  const Node& node(int i) const { return nodes_[static_cast<std::size_t>(i)]; }
  int root() const { return root_; }
  void set_root(int r) { root_ = r; }
  bool empty() const { return root_ < 0; }

  template <class T>
  T evaluate(std::span<const T> vars, std::span<const T> params) const {
    return eval_node<T>(root_, vars, params);
  }

 private:
  template <class T>
  T eval_node(int i, std::span<const T> vars, std::span<const T> params) const;

  std::vector<Node> nodes_;
  int root_ = -1;
};

/// Forward-mode dual number: value plus one directional derivative.
struct Dual {
  double v = 0.0;
  double d = 0.0;
};

inline Dual operator+(Dual a, Dual b) { return {a.v + b.v, a.d + b.d}; }
inline Dual operator-(Dual a, Dual b) { return {a.v - b.v, a.d - b.d}; }
inline Dual operator-(Dual a) { return {-a.v, -a.d}; }
inline Dual operator*(Dual a, Dual b) { return {a.v * b.v, a.d * b.v + a.v * b.d}; }
inline Dual operator/(Dual a, Dual b) {
  return {a.v / b.v, (a.d * b.v - a.v * b.d) / (b.v * b.v)};
}

namespace detail {

inline double value_of(double x) { return x; }
inline double value_of(Dual x) { return x.v; }
inline double deriv_of(double) { return 0.0; }
inline double deriv_of(Dual x) { return x.d; }
template <class T>
T constant(double c) {
  if constexpr (std::is_same_v<T, Dual>) return Dual{c, 0.0};
  else return c;
}

inline double fsin(double x) { return std::sin(x); }
inline double fcos(double x) { return std::cos(x); }
inline double fexp(double x) { return std::exp(x); }
inline double flog(double x) { return std::log(x); }
inline Dual fsin(Dual x) { return {std::sin(x.v), std::cos(x.v) * x.d}; }
inline Dual fcos(Dual x) { return {std::cos(x.v), -std::sin(x.v) * x.d}; }
inline Dual fexp(Dual x) {
  const double e = std::exp(x.v);
  return {e, e * x.d};
}
inline Dual flog(Dual x) { return {std::log(x.v), x.d / x.v}; }

constexpr double kMaxIntegerExponent = 1 << 20;

template <class T>
T integer_power(T base, long long k) {
  const bool invert = k < 0;
  unsigned long long e = static_cast<unsigned long long>(invert ? -k : k);
  T result = constant<T>(1.0);
  T b = base;
  while (e != 0) {
    if (e & 1ULL) result = result * b;
    e >>= 1;
    if (e != 0) b = b * b;
  }
  if (invert) {
    if (value_of(result) == 0.0) throw EvalError("negative integer power of zero");
    return constant<T>(1.0) / result;
  }
  return result;
}

template <class T>
T power(T base, T expo) {
  const double ev = value_of(expo);
  if (deriv_of(expo) == 0.0 && std::floor(ev) == ev && std::abs(ev) <= kMaxIntegerExponent) {
    return integer_power(base, static_cast<long long>(ev));
  }
  if (!(value_of(base) > 0.0)) {
    throw EvalError("non-integer power of non-positive base");
  }
  return fexp(expo * flog(base));
}

}  // namespace detail

template <class T>
T Expr::eval_node(int i, std::span<const T> vars, std::span<const T> params) const {
  const Node& n = nodes_[static_cast<std::size_t>(i)];
  switch (n.kind) {
    case NodeKind::Literal: return detail::constant<T>(n.value);
    case NodeKind::Var: return vars[static_cast<std::size_t>(n.slot)];
    case NodeKind::Param: return params[static_cast<std::size_t>(n.slot)];
    case NodeKind::Neg: return -eval_node<T>(n.lhs, vars, params);
    case NodeKind::Sin: return detail::fsin(eval_node<T>(n.lhs, vars, params));
    case NodeKind::Cos: return detail::fcos(eval_node<T>(n.lhs, vars, params));
    case NodeKind::Exp: return detail::fexp(eval_node<T>(n.lhs, vars, params));
    default: break;
  }
  const T a = eval_node<T>(n.lhs, vars, params);
  const T b = eval_node<T>(n.rhs, vars, params);
  switch (n.kind) {
    case NodeKind::Add: return a + b;
    case NodeKind::Sub: return a - b;
    case NodeKind::Mul: return a * b;
    case NodeKind::Div:
      if (detail::value_of(b) == 0.0) throw EvalError("division by zero");
      return a / b;
    case NodeKind::Pow: return detail::power(a, b);
    default: break;
  }
  throw EvalError("malformed expression node");
}

/// Parses an infix expression. Precedence, loosest first: + -, * /, unary -,
/// ^ (right-associative). Calls: sin(), cos(), exp(). Identifiers resolve
/// against `scope` (states shadow params). `line`/`column` locate the text
/// for error messages.
Expr parse_expression(std::string_view text, const NameScope& scope, int line = 1,
                      int column = 1);

/// Minimal-parenthesis rendering that parses back to the same tree.
std::string to_string(const Expr& e, const NameScope& scope);

bool structurally_equal(const Expr& a, const Expr& b);

/// Polynomial degree of `e` in the variable slots flagged in `in_set`;
/// returns a negative value when the dependence is not polynomial.
int polynomial_degree(const Expr& e, const std::vector<bool>& in_set);

/// True if the expression references any variable slot (ignores params).
bool depends_on_vars(const Expr& e);

}  // namespace coneflow
