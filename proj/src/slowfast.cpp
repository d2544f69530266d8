#include "coneflow/slowfast.hpp"

#include "coneflow/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace coneflow {

namespace {

Vec gather(const Vec& z, const std::vector<int>& idx) {
  Vec out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out[static_cast<Eigen::Index>(i)] = z[idx[i]];
  return out;
}

Mat gather(const Mat& J, const std::vector<int>& rows, const std::vector<int>& cols) {
  Mat out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j)
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = J(rows[i], cols[j]);
  return out;
}

double smallest_singular_value(const Mat& A) {
  if (A.size() == 0) return 0.0;
  Eigen::JacobiSVD<Mat> svd(A);
  return svd.singularValues().minCoeff();
}

}  // namespace

SlowFastSystem::SlowFastSystem(SystemDef sys, ParamMap params, double eps0)
    : params_(std::move(params)), eps0_(eps0) {
  sys.validate();
  if (!sys.is_slow_fast()) throw PreconditionError("system declares no fast states");
  if (!(eps0 > 0.0)) throw PreconditionError("eps0 must be positive");
  sys_ = std::make_shared<const SystemDef>(std::move(sys));
  eps_slot_ = sys_->param_index(sys_->eps_param);
  auto it = params_.find(sys_->eps_param);
  eps_ = it != params_.end() ? it->second : eps0_;
  if (!(eps_ > 0.0) || eps_ > eps0_) {
    throw PreconditionError("eps must satisfy 0 < eps <= eps0 (eps = " + std::to_string(eps_) +
                            ", eps0 = " + std::to_string(eps0_) + ")");
  }
  params_[sys_->eps_param] = eps_;

  std::vector<bool> in_fast(sys_->dim(), false);
  for (const auto& name : sys_->fast_states) in_fast[static_cast<std::size_t>(sys_->state_index(name))] = true;
  for (std::size_t i = 0; i < sys_->dim(); ++i) (in_fast[i] ? fast_ : slow_).push_back(static_cast<int>(i));

  affine_ = true;
  for (int j : fast_) {
    const int deg = polynomial_degree(sys_->components[static_cast<std::size_t>(j)], in_fast);
    if (deg < 0 || deg > 1) affine_ = false;
  }
  bound_eps_ = bound_at(eps_);
  bound_zero_ = bound_at(0.0);
}

std::shared_ptr<const BoundSystem> SlowFastSystem::bound_at(double eps) const {
  if (bound_eps_ && eps == eps_) return bound_eps_;
  if (bound_zero_ && eps == 0.0) return bound_zero_;
  ParamMap p = params_;
  if (eps_slot_ >= 0) p[sys_->eps_param] = eps;
  else p.erase(sys_->eps_param);
  return std::make_shared<const BoundSystem>(sys_, p);
}

SlowFastSystem SlowFastSystem::with_eps(double eps) const {
  ParamMap p = params_;
  p[sys_->eps_param] = eps;
  return SlowFastSystem(*sys_, p, eps0_);
}

Vec SlowFastSystem::join(const Vec& x, const Vec& y) const {
  require_dim(x, static_cast<Eigen::Index>(n()), "slow state");
  require_dim(y, static_cast<Eigen::Index>(m()), "fast state");
  Vec z(static_cast<Eigen::Index>(n() + m()));
  for (std::size_t i = 0; i < slow_.size(); ++i) z[slow_[i]] = x[static_cast<Eigen::Index>(i)];
  for (std::size_t i = 0; i < fast_.size(); ++i) z[fast_[i]] = y[static_cast<Eigen::Index>(i)];
  return z;
}

Vec SlowFastSystem::slow_part(const Vec& z) const {
  require_dim(z, static_cast<Eigen::Index>(n() + m()), "state");
  return gather(z, slow_);
}

Vec SlowFastSystem::fast_part(const Vec& z) const {
  require_dim(z, static_cast<Eigen::Index>(n() + m()), "state");
  return gather(z, fast_);
}

Vec SlowFastSystem::f(const Vec& x, const Vec& y, double eps) const {
  return gather((*bound_at(eps))(join(x, y)), slow_);
}

Vec SlowFastSystem::g(const Vec& x, const Vec& y, double eps) const {
  return gather((*bound_at(eps))(join(x, y)), fast_);
}

SlowFastSystem::Partials SlowFastSystem::partials(const Vec& x, const Vec& y, double eps) const {
  const auto b = bound_at(eps);
  const Vec z = join(x, y);
  const Mat J = b->jacobian(z);
  Partials p{gather(J, slow_, slow_), gather(J, slow_, fast_), gather(J, fast_, slow_),
             gather(J, fast_, fast_), Vec::Zero(static_cast<Eigen::Index>(n())),
             Vec::Zero(static_cast<Eigen::Index>(m()))};
  if (eps_slot_ >= 0) {
    const Vec d = b->param_derivative(z, static_cast<std::size_t>(eps_slot_));
    p.f_eps = gather(d, slow_);
    p.g_eps = gather(d, fast_);
  }
  return p;
}

std::shared_ptr<const VectorField> SlowFastSystem::slow_time_field() const {
  auto b = bound_eps_;
  auto fast = fast_;
  const double eps = eps_;
  return std::make_shared<FunctionField>(
      b->dim(),
      [b, fast, eps](const Vec& z, Vec& dz) {
        b->eval(z, dz);
        for (int j : fast) dz[j] /= eps;
      },
      [b, fast, eps](const Vec& z) {
        Mat J = b->jacobian(z);
        for (int j : fast) J.row(j) /= eps;
        return J;
      });
}

std::shared_ptr<const VectorField> SlowFastSystem::fast_time_field() const {
  auto b = bound_eps_;
  auto slow = slow_;
  const double eps = eps_;
  return std::make_shared<FunctionField>(
      b->dim(),
      [b, slow, eps](const Vec& z, Vec& dz) {
        b->eval(z, dz);
        for (int i : slow) dz[i] *= eps;
      },
      [b, slow, eps](const Vec& z) {
        Mat J = b->jacobian(z);
        for (int i : slow) J.row(i) *= eps;
        return J;
      });
}

IntegratorOptions SlowFastSystem::scaled_options(const IntegratorOptions& base) const {
  IntegratorOptions o = base;
  const auto dim = static_cast<Eigen::Index>(n() + m());
  Vec atol = base.abs_tol_vec.size() == dim ? base.abs_tol_vec : Vec::Constant(dim, base.abs_tol);
  for (int j : fast_) atol[j] *= eps_;
  o.abs_tol_vec = atol;
  return o;
}

CriticalManifoldPoint solve_critical_manifold(const SlowFastSystem& sf, const Vec& x,
                                              const Vec& y_guess, const NewtonOptions& opts) {
  require_dim(x, static_cast<Eigen::Index>(sf.n()), "slow state");
  require_dim(y_guess, static_cast<Eigen::Index>(sf.m()), "fast guess");
  Vec y = y_guess;
  Vec gv = sf.g(x, y, 0.0);
  double r = gv.norm();
  int it = 0;
  for (; r > opts.tol; ++it) {
    if (it >= opts.max_iter) {
      throw ConvergenceError("critical manifold Newton did not converge after " +
                             std::to_string(opts.max_iter) + " iterations (|g| = " +
                             std::to_string(r) + ")");
    }
    const Mat Gy = sf.partials(x, y, 0.0).gy;
    const Vec dy = Gy.colPivHouseholderQr().solve(-gv);
    if (!dy.allFinite()) throw ConvergenceError("critical manifold Newton: singular D_y g");
    double lambda = 1.0;
    bool accepted = false;
    for (int k = 0; k < 40 && !accepted; ++k, lambda *= 0.5) {
      const Vec yn = y + lambda * dy;
      Vec gn;
      try {
        gn = sf.g(x, yn, 0.0);
      } catch (const EvalError&) {
        continue;
      }
      const double rn = gn.norm();
      if (rn < (1.0 - 1e-4 * lambda) * r) {
        y = yn;
        gv = gn;
        r = rn;
        accepted = true;
      }
    }
    if (!accepted) throw ConvergenceError("critical manifold Newton: line search failed");
  }

  const auto P = sf.partials(x, y, 0.0);
  Mat full(P.gx.rows(), P.gx.cols() + P.gy.cols());
  full << P.gx, P.gy;
  const double scale = std::max(1.0, full.norm());
  if (smallest_singular_value(P.gy) < opts.singular_tol * scale) {
    throw ConvergenceError("singular D_y g at the critical manifold root");
  }
  CriticalManifoldPoint pt;
  pt.x = x;
  pt.h0 = y;
  pt.residual = r;
  pt.iterations = it;
  pt.fast_eigenvalues = Eigen::EigenSolver<Mat>(P.gy, false).eigenvalues();
  pt.spectral_abscissa = pt.fast_eigenvalues.real().maxCoeff();
  pt.mu = -pt.spectral_abscissa;
  pt.stable = pt.spectral_abscissa < 0.0;
  return pt;
}

Vec critical_manifold(const SlowFastSystem& sf, const Vec& x) {
  const Vec y0 = Vec::Zero(static_cast<Eigen::Index>(sf.m()));
  if (sf.g_affine_in_fast()) {
    const auto P = sf.partials(x, y0, 0.0);
    if (smallest_singular_value(P.gy) < NewtonOptions{}.singular_tol * std::max(1.0, P.gy.norm())) {
      throw ConvergenceError("singular D_y g at the critical manifold root");
    }
    return P.gy.partialPivLu().solve(-sf.g(x, y0, 0.0));
  }
  return solve_critical_manifold(sf, x, y0).h0;
}

ManifoldExpansion expand_manifold(const SlowFastSystem& sf, const Vec& x) {
  ManifoldExpansion e;
  e.h0 = critical_manifold(sf, x);
  const auto P = sf.partials(x, e.h0, 0.0);
  const auto lu = P.gy.partialPivLu();
  e.dh0 = -lu.solve(P.gx);
  const Vec f0 = sf.f(x, e.h0, 0.0);
  e.h1 = lu.solve(e.dh0 * f0 - P.g_eps);
  return e;
}

Vec first_order_manifold(const SlowFastSystem& sf, const Vec& x) {
  const auto e = expand_manifold(sf, x);
  return e.h0 + sf.eps() * e.h1;
}

SlowManifoldApprox::SlowManifoldApprox(std::shared_ptr<const SlowFastSystem> sf, int order)
    : sf_(std::move(sf)), order_(order) {
  if (order != 0 && order != 1) throw PreconditionError("manifold order must be 0 or 1");
}

Vec SlowManifoldApprox::operator()(const Vec& x) const {
  return order_ == 0 ? critical_manifold(*sf_, x) : first_order_manifold(*sf_, x);
}

ManifoldFn SlowManifoldApprox::evaluator() const {
  auto self = *this;
  return [self](const Vec& x) { return self(x); };
}

double SlowManifoldApprox::defect(const Vec& x) const {
  return invariance_defect(*sf_, evaluator(), x);
}

double invariance_defect(const SlowFastSystem& sf, const ManifoldFn& h, const Vec& x,
                         double fd_step) {
  const Vec hx = h(x);
  const auto n = x.size();
  Mat Dh(hx.size(), n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double s = fd_step * std::max(1.0, std::abs(x[i]));
    Vec xp = x, xm = x;
    xp[i] += s;
    xm[i] -= s;
    Dh.col(i) = (h(xp) - h(xm)) / (2.0 * s);
  }
  const double eps = sf.eps();
  return (sf.g(x, hx, eps) - eps * Dh * sf.f(x, hx, eps)).norm();
}

CriticalManifoldGrid::CriticalManifoldGrid(const SlowFastSystem& sf, const Box& slow_box,
                                           int res, Execution ex)
    : box_(slow_box), res_(res), m_(sf.m()) {
  if (res < 2) throw PreconditionError("grid resolution must be at least 2");
  if (slow_box.dim() != sf.n()) throw DimensionError("slow box dimension mismatch");
  const auto pts = tensor_grid(box_, res);
  values_.resize(pts.size());
  for_each_index(pts.size(), ex, [&](std::size_t k) { values_[k] = critical_manifold(sf, pts[k]); });
}

Vec CriticalManifoldGrid::operator()(const Vec& x) const {
  const auto n = static_cast<Eigen::Index>(box_.dim());
  require_dim(x, n, "slow state");
  std::vector<std::size_t> base(static_cast<std::size_t>(n));
  std::vector<double> frac(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const double u = std::clamp((x[i] - box_.lo[i]) / (box_.hi[i] - box_.lo[i]), 0.0, 1.0) * (res_ - 1);
    const auto b = std::min(static_cast<std::size_t>(u), static_cast<std::size_t>(res_ - 2));
    base[static_cast<std::size_t>(i)] = b;
    frac[static_cast<std::size_t>(i)] = u - static_cast<double>(b);
  }
  Vec out = Vec::Zero(static_cast<Eigen::Index>(m_));
  for (std::size_t corner = 0; corner < (std::size_t{1} << n); ++corner) {
    double w = 1.0;
    std::size_t idx = 0, stride = 1;
    for (Eigen::Index i = 0; i < n; ++i) {
      const bool up = (corner >> i) & 1U;
      const auto ii = static_cast<std::size_t>(i);
      w *= up ? frac[ii] : 1.0 - frac[ii];
      idx += (base[ii] + (up ? 1 : 0)) * stride;
      stride *= static_cast<std::size_t>(res_);
    }
    if (w != 0.0) out += w * values_[idx];
  }
  return out;
}

namespace {

class ReducedField final : public VectorField {
 public:
  ReducedField(std::shared_ptr<const SlowFastSystem> sf,
               std::shared_ptr<const CriticalManifoldGrid> grid)
      : sf_(std::move(sf)), grid_(std::move(grid)) {}
  std::size_t dim() const override { return sf_->n(); }
  void eval(const Vec& x, Vec& dx) const override { dx = sf_->f(x, h0(x), 0.0); }
  Mat jacobian(const Vec& x) const override {
    const auto P = sf_->partials(x, h0(x), 0.0);
    return P.fx - P.fy * P.gy.partialPivLu().solve(P.gx);
  }

 private:
  Vec h0(const Vec& x) const { return grid_ ? (*grid_)(x) : critical_manifold(*sf_, x); }
  std::shared_ptr<const SlowFastSystem> sf_;
  std::shared_ptr<const CriticalManifoldGrid> grid_;
};

}  // namespace

std::shared_ptr<const VectorField> reduced_system(const SlowFastSystem& sf,
                                                  const std::optional<Box>& slow_box,
                                                  int grid_res) {
  auto owned = std::make_shared<const SlowFastSystem>(sf);
  std::shared_ptr<const CriticalManifoldGrid> grid;
  if (!sf.g_affine_in_fast() && slow_box) {
    grid = std::make_shared<const CriticalManifoldGrid>(sf, *slow_box, grid_res);
  }
  return std::make_shared<ReducedField>(owned, grid);
}

std::shared_ptr<const VectorField> slow_manifold_field(const SlowFastSystem& sf, int order) {
  auto h = std::make_shared<const SlowManifoldApprox>(std::make_shared<const SlowFastSystem>(sf), order);
  auto owned = std::make_shared<const SlowFastSystem>(sf);
  return std::make_shared<FunctionField>(owned->n(), [h, owned](const Vec& x, Vec& dx) {
    dx = owned->f(x, (*h)(x), owned->eps());
  });
}

ManifoldCertification certify_critical_manifold(const SlowFastSystem& sf, const Box& slow_box,
                                                int grid_res, Execution ex) {
  if (slow_box.dim() != sf.n()) throw DimensionError("slow box dimension mismatch");
  const auto pts = tensor_grid(slow_box, grid_res);
  ManifoldCertification cert;
  cert.points.resize(pts.size());
  const Vec guess = Vec::Zero(static_cast<Eigen::Index>(sf.m()));
  for_each_index(pts.size(), ex,
                 [&](std::size_t k) { cert.points[k] = solve_critical_manifold(sf, pts[k], guess); });
  cert.max_abscissa = -std::numeric_limits<double>::infinity();
  for (const auto& p : cert.points) cert.max_abscissa = std::max(cert.max_abscissa, p.spectral_abscissa);
  cert.all_stable = cert.max_abscissa < 0.0;
  cert.mu_raw = -cert.max_abscissa;
  cert.mu = 0.9 * cert.mu_raw;
  return cert;
}

ContractionFit fast_contraction_rate(const SlowFastSystem& sf, const Vec& ic, double tau_end,
                                     const ContractionOptions& opts) {
  require_dim(ic, static_cast<Eigen::Index>(sf.n() + sf.m()), "initial condition");
  if (!(tau_end > 0.0)) throw PreconditionError("tau_end must be positive");
  if (opts.samples < 3) throw PreconditionError("need at least 3 samples");
  const double floor = opts.noise_factor * opts.integrator.abs_tol;
  auto distance = [&](const Vec& z) {
    return (sf.fast_part(z) - first_order_manifold(sf, sf.slow_part(z))).norm();
  };
  if (distance(ic) <= floor) throw PreconditionError("initial condition already on the slow manifold");

  const auto field = sf.fast_time_field();
  const Trajectory traj = flow(*field, ic, 0.0, tau_end, opts.integrator);
  ContractionFit fit;
  fit.tau.resize(opts.samples);
  fit.distance.resize(opts.samples);
  std::size_t usable = opts.samples;
  for (std::size_t k = 0; k < opts.samples; ++k) {
    fit.tau[k] = tau_end * static_cast<double>(k) / static_cast<double>(opts.samples - 1);
    fit.distance[k] = distance(traj.at(fit.tau[k]));
    if (usable == opts.samples && fit.distance[k] <= floor) usable = k;
  }
  const auto& d = fit.distance;
  std::size_t peak = 0;
  for (std::size_t k = 1; k < usable; ++k)
    if (d[k] > d[peak]) peak = k;
  std::size_t end = peak;
  while (end + 1 < usable && d[end + 1] < d[end]) ++end;
  if (end < peak + 2) throw PreconditionError("contraction fit window has fewer than 3 samples");

  double st = 0, sy = 0, stt = 0, sty = 0;
  const double cnt = static_cast<double>(end - peak + 1);
  for (std::size_t k = peak; k <= end; ++k) {
    const double t = fit.tau[k], y = std::log(d[k]);
    st += t;
    sy += y;
    stt += t * t;
    sty += t * y;
  }
  fit.rate = (cnt * sty - st * sy) / (cnt * stt - st * st);
  fit.tau_begin = fit.tau[peak];
  fit.tau_end = fit.tau[end];
  fit.samples = end - peak + 1;
  return fit;
}

std::vector<double> tikhonov_closeness(const SlowFastSystem& sf, const Vec& ic, double T,
                                       const std::vector<double>& eps_list, double mu,
                                       const ClosenessOptions& opts) {
  require_dim(ic, static_cast<Eigen::Index>(sf.n() + sf.m()), "initial condition");
  if (!(mu > 0.0)) throw PreconditionError("mu must be positive");
  if (opts.samples < 2) throw PreconditionError("need at least 2 samples");
  const Vec x0 = sf.slow_part(ic);
  const auto reduced = reduced_system(sf);
  const Trajectory red = flow(*reduced, x0, 0.0, T, opts.integrator);
  std::vector<double> out(eps_list.size());
  for_each_index(eps_list.size(), opts.execution, [&](std::size_t i) {
    const double eps = eps_list[i];
    const double t_bl = 5.0 * eps / mu;
    if (!(t_bl < T)) throw PreconditionError("T does not exceed the boundary layer");
    const SlowFastSystem s = sf.with_eps(eps);
    const Trajectory full = flow(*s.slow_time_field(), ic, 0.0, T, s.scaled_options(opts.integrator));
    double sup = 0.0;
    for (std::size_t k = 0; k < opts.samples; ++k) {
      const double t = t_bl + (T - t_bl) * static_cast<double>(k) / static_cast<double>(opts.samples - 1);
      sup = std::max(sup, (s.slow_part(full.at(t)) - red.at(t)).norm());
    }
    out[i] = sup;
  });
  return out;
}

double fast_subsystem_convergence(const SlowFastSystem& sf, const Vec& x, std::size_t samples,
                                  double y_lo, double y_hi, double tau_end,
                                  unsigned long long seed) {
  const Vec h0 = critical_manifold(sf, x);
  FunctionField fast(sf.m(), [&](const Vec& y, Vec& dy) { dy = sf.g(x, y, 0.0); });
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(y_lo, y_hi);
  double worst = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    Vec y0(static_cast<Eigen::Index>(sf.m()));
    for (Eigen::Index j = 0; j < y0.size(); ++j) y0[j] = u(rng);
    IntegratorOptions o;
    o.dense = false;
    const Trajectory tr = flow(fast, y0, 0.0, tau_end, o);
    worst = std::max(worst, (tr.back() - h0).norm());
  }
  return worst;
}

}  // namespace coneflow
