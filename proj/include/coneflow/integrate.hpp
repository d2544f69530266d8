#pragma once

#include "coneflow/field.hpp"

#include <array>
#include <limits>
#include <vector>

namespace coneflow {

struct IntegratorOptions {
  double rel_tol = 1e-9;
  double abs_tol = 1e-12;
  /// Optional per-component absolute tolerances; overrides abs_tol when set.
  Vec abs_tol_vec;
  double h_init = 0.0;  // 0 selects the automatic initial step
  double h_max = std::numeric_limits<double>::infinity();
  std::size_t max_steps = 2'000'000;
  bool dense = true;  // keep interpolation data for every step

  void validate(std::size_t n) const;
};

struct SolverStats {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t evaluations = 0;
};

/// Accepted steps (t_i, x_i) of one integration plus the Dormand-Prince
/// continuous extension of each step, so x(t) can be evaluated anywhere in
/// [t_front, t_back]. Without dense data interpolation is linear.
class Trajectory {
 public:
  using DenseCoeffs = std::array<Vec, 5>;

  Trajectory() = default;
  Trajectory(std::vector<double> t, std::vector<Vec> x);

  std::size_t size() const { return t_.size(); }
  bool empty() const { return t_.empty(); }
  std::size_t dim() const { return x_.empty() ? 0 : static_cast<std::size_t>(x_.front().size()); }
  const std::vector<double>& times() const { return t_; }
  const std::vector<Vec>& states() const { return x_; }
  double t_front() const { return t_.front(); }
  double t_back() const { return t_.back(); }
  const Vec& front() const { return x_.front(); }
  const Vec& back() const { return x_.back(); }
  bool has_dense() const { return !dense_.empty(); }
  const SolverStats& stats() const { return stats_; }

  /// x(t) for t in [t_front, t_back]; throws PreconditionError outside.
  Vec at(double t) const;

  /// `count` states at uniformly spaced times covering [t_front, t_back].
  Trajectory resample(std::size_t count) const;

  void push(double t, Vec x);
  void push_dense(DenseCoeffs c) { dense_.push_back(std::move(c)); }
  SolverStats& mutable_stats() { return stats_; }

 private:
  std::vector<double> t_;
  std::vector<Vec> x_;
  std::vector<DenseCoeffs> dense_;  // dense_[i] covers [t_i, t_{i+1}]
  SolverStats stats_;
};

/// Dormand-Prince 5(4) stepper with PI step-size control and dense output.
/// Each call to step() advances by one accepted step.
class Dopri5 {
 public:
  Dopri5(const VectorField& f, double t0, const Vec& x0, IntegratorOptions opts);

  /// Advances one accepted step, never past t_limit (> t()).
  /// Throws IntegrationError on step-size underflow, non-finite states,
  /// or when the step budget is exhausted.
  void step(double t_limit);

  double t() const { return t_; }
  const Vec& x() const { return x_; }
  double t_prev() const { return t_prev_; }
  const Vec& x_prev() const { return x_prev_; }
  double last_step() const { return t_ - t_prev_; }

  /// Interpolant on the last accepted step, t in [t_prev, t].
  Vec dense(double t) const;
  const Trajectory::DenseCoeffs& dense_coeffs() const { return rcont_; }
  const SolverStats& stats() const { return stats_; }

 private:
  double initial_step(double t_limit);
  double error_norm(const Vec& x_new, const Vec& err) const;

  const VectorField& f_;
  IntegratorOptions opts_;
  std::size_t n_;
  double t_;
  double t_prev_;
  Vec x_;
  Vec x_prev_;
  Vec k1_;  // F(x_) (FSAL)
  std::array<Vec, 7> k_;
  Vec tmp_;
  Trajectory::DenseCoeffs rcont_;
  double h_ = 0.0;
  double fac_old_ = 1e-4;
  bool last_rejected_ = false;
  SolverStats stats_;
};

/// Integrates x' = F(x) from x0 over [t0, t1] (t1 > t0).
Trajectory flow(const VectorField& f, const Vec& x0, double t0, double t1,
                const IntegratorOptions& opts = {});

/// Gauss-Legendre nodes and weights on [0, 1] with `order` points.
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
const QuadratureRule& gauss_legendre_01(int order = 8);

/// Averaged Jacobian A = integral_0^1 DF(s p + (1 - s) q) ds (8-point
/// Gauss-Legendre). Returns DF(p) when p == q.
Mat chord_matrix(const VectorField& f, const Vec& p, const Vec& q);

/// Both trajectories phi_t(p), phi_t(q) and the matrix U(t) solving
/// U' = A(t) U, U(0) = I, integrated jointly as one (2n + n^2)-dimensional
/// system. U(t) (p - q) = phi_t(p) - phi_t(q) for every t.
class ChordFlow {
 public:
  ChordFlow(std::size_t n, Vec p, Vec q, Trajectory joint);

  std::size_t dim() const { return n_; }
  const Vec& p() const { return p_; }
  const Vec& q() const { return q_; }
  double t0() const { return joint_.t_front(); }
  double t1() const { return joint_.t_back(); }
  const Trajectory& joint() const { return joint_; }

  Vec p_at(double t) const;
  Vec q_at(double t) const;
  Mat U(double t) const;
  Mat U_final() const { return U(t1()); }

 private:
  Mat unpack(const Vec& z) const;
  std::size_t n_;
  Vec p_;
  Vec q_;
  Trajectory joint_;
};

ChordFlow fundamental_matrix(const VectorField& f, const Vec& p, const Vec& q, double t0,
                             double t1, const IntegratorOptions& opts = {});

/// U2(t) * U1(s) where cf2 starts from (phi_s(p), phi_s(q)) of cf1.
/// Throws PreconditionError if cf2's base points differ from cf1's state at
/// time s by more than `tol * (1 + |.|)`.
Mat cocycle_compose(const ChordFlow& cf1, double s, const ChordFlow& cf2, double t,
                    double tol = 1e-8);

}  // namespace coneflow
