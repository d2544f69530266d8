#pragma once

#include "coneflow/types.hpp"

#include <functional>

namespace coneflow {

/// Autonomous vector field x' = F(x) on R^n. Implementations are immutable
/// after construction and reentrant, so one instance may be shared between
/// threads.
class VectorField {
 public:
  virtual ~VectorField() = default;

  virtual std::size_t dim() const = 0;
  virtual void eval(const Vec& x, Vec& dx) const = 0;

  /// DF(x). The default uses central differences; subclasses with exact
  /// derivatives override it.
  virtual Mat jacobian(const Vec& x) const;

  Vec operator()(const Vec& x) const {
    Vec dx(static_cast<Eigen::Index>(dim()));
    eval(x, dx);
    return dx;
  }
};

/// Central-difference Jacobian of `f` at x with per-coordinate step
/// h_i = rel_step * max(1, |x_i|).
Mat finite_difference_jacobian(const VectorField& f, const Vec& x, double rel_step = 1e-6);

/// Field assembled from callables; `jac` may be empty.
class FunctionField final : public VectorField {
 public:
  using EvalFn = std::function<void(const Vec&, Vec&)>;
  using JacFn = std::function<Mat(const Vec&)>;

  FunctionField(std::size_t n, EvalFn f, JacFn jac = {})
      : n_(n), f_(std::move(f)), jac_(std::move(jac)) {}

  std::size_t dim() const override { return n_; }
  void eval(const Vec& x, Vec& dx) const override { f_(x, dx); }
  Mat jacobian(const Vec& x) const override {
    return jac_ ? jac_(x) : VectorField::jacobian(x);
  }

 private:
  std::size_t n_;
  EvalFn f_;
  JacFn jac_;
};

}  // namespace coneflow
