#pragma once

#include "coneflow/execution.hpp"
#include "coneflow/integrate.hpp"
#include "coneflow/system.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <vector>

namespace coneflow {

/// Slow-fast system x' = f(x, y, eps), eps y' = g(x, y, eps) built from a
/// SystemDef whose `fast_states` name y. Slow and fast parts are addressed
/// by the order in which they appear in `states`.
class SlowFastSystem {
 public:
  /// `params` must bind every parameter except possibly the eps parameter,
  /// which defaults to `eps0`. Throws PreconditionError unless the system
  /// declares fast states and 0 < eps <= eps0.
  SlowFastSystem(SystemDef sys, ParamMap params, double eps0 = 0.1);

  std::size_t n() const { return slow_.size(); }
  std::size_t m() const { return fast_.size(); }
  double eps() const { return eps_; }
  double eps0() const { return eps0_; }
  const SystemDef& system() const { return *sys_; }
  const ParamMap& params() const { return params_; }
  const std::vector<int>& slow_indices() const { return slow_; }
  const std::vector<int>& fast_indices() const { return fast_; }

  /// Same system at another eps (same eps0 bound).
  SlowFastSystem with_eps(double eps) const;

  Vec join(const Vec& x, const Vec& y) const;
  Vec slow_part(const Vec& z) const;
  Vec fast_part(const Vec& z) const;

  Vec f(const Vec& x, const Vec& y, double eps) const;
  Vec g(const Vec& x, const Vec& y, double eps) const;

  struct Partials {
    Mat fx, fy, gx, gy;
    Vec f_eps, g_eps;
  };
  Partials partials(const Vec& x, const Vec& y, double eps) const;

  /// True when every fast component is (at most) affine in y.
  bool g_affine_in_fast() const { return affine_; }

  /// Full system in slow time: (f, g / eps), in the original state order.
  std::shared_ptr<const VectorField> slow_time_field() const;
  /// Full system in fast time tau = t / eps: (eps f, g).
  std::shared_ptr<const VectorField> fast_time_field() const;

  /// Integrator options with absolute tolerances on the fast components
  /// scaled by eps.
  IntegratorOptions scaled_options(const IntegratorOptions& base) const;

 private:
  std::shared_ptr<const BoundSystem> bound_at(double eps) const;

  std::shared_ptr<const SystemDef> sys_;
  ParamMap params_;
  double eps_;
  double eps0_;
  int eps_slot_ = -1;
  std::vector<int> slow_;
  std::vector<int> fast_;
  bool affine_ = false;
  std::shared_ptr<const BoundSystem> bound_eps_;
  std::shared_ptr<const BoundSystem> bound_zero_;
};

struct NewtonOptions {
  double tol = 1e-12;
  int max_iter = 60;
  /// D_y g is reported singular when its smallest singular value falls
  /// below singular_tol * max(1, |D g|).
  double singular_tol = 1e-4;
};

struct CriticalManifoldPoint {
  Vec x;
  Vec h0;
  CVec fast_eigenvalues;
  double spectral_abscissa = 0.0;
  double mu = 0.0;  // -spectral_abscissa
  double residual = 0.0;
  int iterations = 0;
  bool stable = false;
};

/// Damped Newton on y -> g(x, y, 0). Throws ConvergenceError on divergence
/// and ConvergenceError("singular ...") when D_y g is singular at the root.
CriticalManifoldPoint solve_critical_manifold(const SlowFastSystem& sf, const Vec& x,
                                              const Vec& y_guess,
                                              const NewtonOptions& opts = {});

/// h0(x). Affine g is solved directly; otherwise Newton from y = 0.
Vec critical_manifold(const SlowFastSystem& sf, const Vec& x);

/// h0 and h1 of h_eps = h0 + eps h1 + O(eps^2).
struct ManifoldExpansion {
  Vec h0;
  Vec h1;
  Mat dh0;  // implicit derivative -(D_y g)^{-1} D_x g
};
ManifoldExpansion expand_manifold(const SlowFastSystem& sf, const Vec& x);

/// h0(x) + eps h1(x) at the system's eps.
Vec first_order_manifold(const SlowFastSystem& sf, const Vec& x);

using ManifoldFn = std::function<Vec(const Vec&)>;

/// Order-0 or order-1 approximation of the slow manifold.
class SlowManifoldApprox {
 public:
  SlowManifoldApprox(std::shared_ptr<const SlowFastSystem> sf, int order);
  int order() const { return order_; }
  Vec operator()(const Vec& x) const;
  double defect(const Vec& x) const;
  ManifoldFn evaluator() const;

 private:
  std::shared_ptr<const SlowFastSystem> sf_;
  int order_;
};

/// |g(x, h(x), eps) - eps Dh(x) f(x, h(x), eps)| with Dh by central
/// differences.
double invariance_defect(const SlowFastSystem& sf, const ManifoldFn& h, const Vec& x,
                         double fd_step = 1e-5);

/// Multilinear interpolation of h0 over a tensor grid on the slow box.
class CriticalManifoldGrid {
 public:
  CriticalManifoldGrid(const SlowFastSystem& sf, const Box& slow_box, int res,
                       Execution ex = Execution::Parallel);
  Vec operator()(const Vec& x) const;
  const Box& box() const { return box_; }
  int resolution() const { return res_; }

 private:
  Box box_;
  int res_;
  std::size_t m_;
  std::vector<Vec> values_;
};

/// The reduced field x' = f(x, h0(x), 0). `slow_box` and `grid_res` are
/// used only for non-affine g, where h0 comes from a CriticalManifoldGrid.
std::shared_ptr<const VectorField> reduced_system(
    const SlowFastSystem& sf, const std::optional<Box>& slow_box = std::nullopt,
    int grid_res = 33);

/// The slow field on the approximate slow manifold, x' = f(x, h(x), eps)
/// with h of the given order (0 or 1) at the system's eps.
std::shared_ptr<const VectorField> slow_manifold_field(const SlowFastSystem& sf, int order);

struct ManifoldCertification {
  std::vector<CriticalManifoldPoint> points;
  bool all_stable = false;
  double max_abscissa = 0.0;
  double mu_raw = 0.0;  // -max_abscissa
  double mu = 0.0;      // mu_raw less a 10% margin
};

/// Solves for h0 at every point of a grid_res^n grid on the slow box.
ManifoldCertification certify_critical_manifold(const SlowFastSystem& sf, const Box& slow_box,
                                                int grid_res,
                                                Execution ex = Execution::Parallel);

inline IntegratorOptions tight_integrator() {
  IntegratorOptions o;
  o.rel_tol = 1e-11;
  o.abs_tol = 1e-13;
  return o;
}

struct ContractionFit {
  double rate = 0.0;
  double tau_begin = 0.0;
  double tau_end = 0.0;
  std::size_t samples = 0;
  std::vector<double> tau;
  std::vector<double> distance;  // |y - h_eps(x)| on the sampling grid
};

struct ContractionOptions {
  std::size_t samples = 400;
  IntegratorOptions integrator = tight_integrator();
  /// Samples with distance below noise_factor * abs_tol are discarded.
  double noise_factor = 100.0;
};

/// Integrates the fast-time system over [0, tau_end] and fits log d(tau),
/// d = |y - h_eps(x)|, by least squares. The window runs from the peak of
/// d to its first local minimum or to the noise floor, whichever is first.
ContractionFit fast_contraction_rate(const SlowFastSystem& sf, const Vec& ic, double tau_end,
                                     const ContractionOptions& opts = {});

struct ClosenessOptions {
  std::size_t samples = 4001;
  IntegratorOptions integrator = tight_integrator();
  Execution execution = Execution::Parallel;
};

/// For each eps: sup over [t_bl, T] of |x_full(t) - x_reduced(t)| with
/// t_bl = 5 eps / mu.
std::vector<double> tikhonov_closeness(const SlowFastSystem& sf, const Vec& ic, double T,
                                       const std::vector<double>& eps_list, double mu,
                                       const ClosenessOptions& opts = {});

/// Fast subsystem y' = g(x, y, 0) at frozen x from `samples` random y0 in
/// [y_lo, y_hi]^m; returns the largest final distance to h0(x) at tau_end.
double fast_subsystem_convergence(const SlowFastSystem& sf, const Vec& x, std::size_t samples,
                                  double y_lo, double y_hi, double tau_end,
                                  unsigned long long seed = 1);

}  // namespace coneflow
