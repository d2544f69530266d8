#pragma once

#include "coneflow/expr.hpp"

#include <random>

namespace coneflow::testing {

/// Random expression trees over `n_vars` variables and `n_params` params.
/// Literals are nonnegative, matching what the parser can produce.
class RandomAst {
 public:
  RandomAst(std::uint64_t seed, int n_vars, int n_params, bool polynomial_only = false)
      : rng_(seed), n_vars_(n_vars), n_params_(n_params), poly_(polynomial_only) {}

  Expr make(int max_depth) {
    Expr e;
    e.set_root(build(e, max_depth));
    return e;
  }

 private:
  int pick(int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng_); }

  double literal() {
    if (poly_) return std::uniform_real_distribution<double>(0.0, 3.0)(rng_);
    switch (pick(5)) {
      case 0: return static_cast<double>(pick(10));
      case 1: return std::uniform_real_distribution<double>(0.0, 10.0)(rng_);
      case 2: return 0.5;
      case 3: return std::ldexp(std::uniform_real_distribution<double>(0.5, 1.0)(rng_), pick(80) - 40);
      default: return 1.5;
    }
  }

  int leaf(Expr& e) {
    const int k = pick(n_params_ > 0 ? 3 : 2);
    if (k == 0) return e.add_literal(literal());
    if (k == 1 || n_params_ == 0) return e.add_var(pick(n_vars_));
    return e.add_param(pick(n_params_));
  }

  int build(Expr& e, int depth) {
    if (depth <= 0 || pick(4) == 0) return leaf(e);
    if (poly_) {
      switch (pick(5)) {
        case 0: return e.add_binary(NodeKind::Add, build(e, depth - 1), build(e, depth - 1));
        case 1: return e.add_binary(NodeKind::Sub, build(e, depth - 1), build(e, depth - 1));
        case 2: return e.add_binary(NodeKind::Mul, build(e, depth - 1), build(e, depth - 1));
        case 3: return e.add_unary(NodeKind::Neg, build(e, depth - 1));
        default: {
          const int base = leaf(e);
          return e.add_binary(NodeKind::Pow, base, e.add_literal(static_cast<double>(1 + pick(3))));
        }
      }
    }
    static constexpr NodeKind kinds[] = {NodeKind::Add, NodeKind::Sub, NodeKind::Mul, NodeKind::Div,
                                         NodeKind::Pow, NodeKind::Neg, NodeKind::Sin, NodeKind::Cos,
                                         NodeKind::Exp};
    const NodeKind k = kinds[pick(9)];
    switch (k) {
      case NodeKind::Neg:
      case NodeKind::Sin:
      case NodeKind::Cos:
      case NodeKind::Exp: return e.add_unary(k, build(e, depth - 1));
      default: {
        const int a = build(e, depth - 1);
        const int b = build(e, depth - 1);
        return e.add_binary(k, a, b);
      }
    }
  }

  std::mt19937_64 rng_;
  int n_vars_;
  int n_params_;
  bool poly_;
};

}  // namespace coneflow::testing
