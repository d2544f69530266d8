#include "coneflow/integrate.hpp"

#include <algorithm>
#include <cmath>

namespace coneflow {

namespace {

// Dormand-Prince 5(4) tableau with the continuous extension of Hairer,
// Norsett & Wanner.
constexpr double c2 = 1.0 / 5.0, c3 = 3.0 / 10.0, c4 = 4.0 / 5.0, c5 = 8.0 / 9.0;
constexpr double a21 = 1.0 / 5.0;
constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                 a54 = -212.0 / 729.0;
constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                 a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
constexpr double a71 = 35.0 / 384.0, a73 = 500.0 / 1113.0, a74 = 125.0 / 192.0,
                 a75 = -2187.0 / 6784.0, a76 = 11.0 / 84.0;
constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                 e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

// PI controller constants.
constexpr double kBeta = 0.04;
constexpr double kExpo = 0.2 - kBeta * 0.75;
constexpr double kSafe = 0.9;
constexpr double kMaxShrink = 5.0;   // h_new >= h / 5
constexpr double kMaxGrowth = 0.1;   // h_new <= 10 h

Vec interpolate(const Trajectory::DenseCoeffs& r, double theta) {
  const double theta1 = 1.0 - theta;
  return r[0] + theta * (r[1] + theta1 * (r[2] + theta * (r[3] + theta1 * r[4])));
}

}  // namespace

void IntegratorOptions::validate(std::size_t n) const {
  if (!(rel_tol > 0.0) || !(abs_tol > 0.0)) {
    throw PreconditionError("integrator tolerances must be positive");
  }
  if (abs_tol_vec.size() != 0) {
    if (abs_tol_vec.size() != static_cast<Eigen::Index>(n)) {
      throw DimensionError("abs_tol_vec must have one entry per component");
    }
    if ((abs_tol_vec.array() <= 0.0).any()) {
      throw PreconditionError("abs_tol_vec entries must be positive");
    }
  }
}

Trajectory::Trajectory(std::vector<double> t, std::vector<Vec> x) : t_(std::move(t)), x_(std::move(x)) {
  if (t_.size() != x_.size()) throw DimensionError("trajectory times and states differ in length");
  for (std::size_t i = 1; i < t_.size(); ++i) {
    if (!(t_[i] > t_[i - 1])) throw PreconditionError("trajectory times must increase strictly");
  }
}

void Trajectory::push(double t, Vec x) {
  t_.push_back(t);
  x_.push_back(std::move(x));
}

Vec Trajectory::at(double t) const {
  if (t_.empty()) throw PreconditionError("empty trajectory");
  const double span = t_.back() - t_.front();
  const double slack = 1e-12 * std::max(1.0, std::abs(span));
  if (t < t_.front() - slack || t > t_.back() + slack) {
    throw PreconditionError("time outside trajectory span");
  }
  if (t_.size() == 1) return x_.front();
  t = std::clamp(t, t_.front(), t_.back());
  auto it = std::upper_bound(t_.begin(), t_.end(), t);
  std::size_t i = it == t_.begin() ? 0 : static_cast<std::size_t>(it - t_.begin()) - 1;
  if (i >= t_.size() - 1) i = t_.size() - 2;
  const double theta = (t - t_[i]) / (t_[i + 1] - t_[i]);
  if (!dense_.empty()) return interpolate(dense_[i], theta);
  return (1.0 - theta) * x_[i] + theta * x_[i + 1];
}

Trajectory Trajectory::resample(std::size_t count) const {
  if (count < 2) throw PreconditionError("resample needs at least two points");
  std::vector<double> ts(count);
  std::vector<Vec> xs(count);
  for (std::size_t k = 0; k < count; ++k) {
    ts[k] = t_front() + (t_back() - t_front()) * static_cast<double>(k) / static_cast<double>(count - 1);
    xs[k] = at(ts[k]);
  }
  Trajectory out(std::move(ts), std::move(xs));
  out.stats_ = stats_;
  return out;
}

Dopri5::Dopri5(const VectorField& f, double t0, const Vec& x0, IntegratorOptions opts)
    : f_(f), opts_(std::move(opts)), n_(f.dim()), t_(t0), t_prev_(t0), x_(x0), x_prev_(x0) {
  require_dim(x0, static_cast<Eigen::Index>(n_), "initial state");
  opts_.validate(n_);
  if (!x0.allFinite()) throw IntegrationError("non-finite initial state");
  for (auto& k : k_) k.resize(static_cast<Eigen::Index>(n_));
  tmp_.resize(static_cast<Eigen::Index>(n_));
  k1_.resize(static_cast<Eigen::Index>(n_));
  try {
    f_.eval(x_, k1_);
  } catch (const EvalError& e) {
    throw IntegrationError(std::string("field evaluation failed at the initial state: ") + e.what());
  }
  ++stats_.evaluations;
  h_ = opts_.h_init;
}

double Dopri5::error_norm(const Vec& x_new, const Vec& err) const {
  double sum = 0.0;
  for (std::size_t i = 0; i < n_; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    const double atol = opts_.abs_tol_vec.size() ? opts_.abs_tol_vec[ii] : opts_.abs_tol;
    const double sk = atol + opts_.rel_tol * std::max(std::abs(x_[ii]), std::abs(x_new[ii]));
    const double r = err[ii] / sk;
    sum += r * r;
  }
  return std::sqrt(sum / static_cast<double>(n_));
}

double Dopri5::initial_step(double t_limit) {
  double dnf = 0.0;
  double dny = 0.0;
  for (std::size_t i = 0; i < n_; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    const double atol = opts_.abs_tol_vec.size() ? opts_.abs_tol_vec[ii] : opts_.abs_tol;
    const double sk = atol + opts_.rel_tol * std::abs(x_[ii]);
    dnf += (k1_[ii] / sk) * (k1_[ii] / sk);
    dny += (x_[ii] / sk) * (x_[ii] / sk);
  }
  double h = (dnf <= 1e-10 || dny <= 1e-10) ? 1e-6 : std::sqrt(dny / dnf) * 0.01;
  h = std::min({h, opts_.h_max, t_limit - t_});
  Vec x1 = x_ + h * k1_;
  Vec f1(static_cast<Eigen::Index>(n_));
  double der2 = 0.0;
  try {
    f_.eval(x1, f1);
    ++stats_.evaluations;
    for (std::size_t i = 0; i < n_; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      const double atol = opts_.abs_tol_vec.size() ? opts_.abs_tol_vec[ii] : opts_.abs_tol;
      const double sk = atol + opts_.rel_tol * std::abs(x_[ii]);
      const double d = (f1[ii] - k1_[ii]) / sk;
      der2 += d * d;
    }
    der2 = std::sqrt(der2) / h;
  } catch (const EvalError&) {
    return h * 1e-3;
  }
  const double der12 = std::max(std::abs(der2), std::sqrt(dnf));
  const double h1 = der12 <= 1e-15 ? std::max(1e-6, h * 1e-3) : std::pow(0.01 / der12, 0.2);
  return std::min({100.0 * h, h1, opts_.h_max});
}

void Dopri5::step(double t_limit) {
  if (!(t_limit > t_)) throw PreconditionError("step: t_limit must exceed the current time");
  if (h_ <= 0.0) h_ = initial_step(t_limit);
  auto& [k2, k3, k4, k5, k6, k7, err] = k_;
  while (true) {
    if (stats_.accepted + stats_.rejected >= opts_.max_steps) {
      throw IntegrationError("step budget exhausted at t = " + std::to_string(t_));
    }
    const double hmin = 1e-14 * std::max(1.0, std::abs(t_));
    if (h_ < hmin && t_limit - t_ > hmin) {
      throw IntegrationError("step size underflow at t = " + std::to_string(t_));
    }
    double h = std::min(h_, opts_.h_max);
    bool last = false;
    if (t_ + 1.01 * h >= t_limit) {
      h = t_limit - t_;
      last = true;
    }
    bool stage_failed = false;
    try {
      tmp_ = x_ + h * a21 * k1_;
      f_.eval(tmp_, k2);
      tmp_ = x_ + h * (a31 * k1_ + a32 * k2);
      f_.eval(tmp_, k3);
      tmp_ = x_ + h * (a41 * k1_ + a42 * k2 + a43 * k3);
      f_.eval(tmp_, k4);
      tmp_ = x_ + h * (a51 * k1_ + a52 * k2 + a53 * k3 + a54 * k4);
      f_.eval(tmp_, k5);
      tmp_ = x_ + h * (a61 * k1_ + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
      f_.eval(tmp_, k6);
      tmp_ = x_ + h * (a71 * k1_ + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
      f_.eval(tmp_, k7);
    } catch (const EvalError&) {
      stage_failed = true;
    }
    stats_.evaluations += 6;
    double e = std::numeric_limits<double>::infinity();
    if (!stage_failed) {
      err = h * (e1 * k1_ + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
      e = error_norm(tmp_, err);
    }
    if (!std::isfinite(e)) {
      ++stats_.rejected;
      h_ = h * 0.1;
      last_rejected_ = true;
      continue;
    }
    const double fac11 = std::pow(e, kExpo);
    if (e <= 1.0) {
      if (!tmp_.allFinite()) throw IntegrationError("non-finite state at t = " + std::to_string(t_));
      const Vec ydiff = tmp_ - x_;
      rcont_[0] = x_;
      rcont_[1] = ydiff;
      rcont_[2] = h * k1_ - ydiff;
      rcont_[3] = ydiff - h * k7 - rcont_[2];
      rcont_[4] = h * (d1 * k1_ + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
      x_prev_ = x_;
      t_prev_ = t_;
      x_ = tmp_;
      t_ = last ? t_limit : t_ + h;
      k1_ = k7;
      ++stats_.accepted;
      double fac = fac11 / std::pow(fac_old_, kBeta);
      fac = std::max(kMaxGrowth, std::min(kMaxShrink, fac / kSafe));
      double h_new = h / fac;
      if (last_rejected_) h_new = std::min(h_new, h);
      fac_old_ = std::max(e, 1e-4);
      last_rejected_ = false;
      // Keep the controller's step, not the truncated one used to hit t_limit.
      h_ = last ? std::max(h_new, h_) : h_new;
      return;
    }
    ++stats_.rejected;
    h_ = h / std::min(kMaxShrink, fac11 / kSafe);
    last_rejected_ = true;
  }
}

Vec Dopri5::dense(double t) const {
  const double h = t_ - t_prev_;
  if (h <= 0.0) return x_;
  return interpolate(rcont_, (t - t_prev_) / h);
}

Trajectory flow(const VectorField& f, const Vec& x0, double t0, double t1,
                const IntegratorOptions& opts) {
  if (!(t1 > t0)) {
    if (t1 == t0) {
      Trajectory tr;
      tr.push(t0, x0);
      return tr;
    }
    throw PreconditionError("flow: t1 must not precede t0");
  }
  Dopri5 st(f, t0, x0, opts);
  Trajectory tr;
  tr.push(t0, x0);
  while (st.t() < t1) {
    st.step(t1);
    tr.push(st.t(), st.x());
    if (opts.dense) tr.push_dense(st.dense_coeffs());
  }
  tr.mutable_stats() = st.stats();
  return tr;
}

namespace {

QuadratureRule compute_gauss_legendre(int order) {
  QuadratureRule rule;
  rule.nodes.resize(static_cast<std::size_t>(order));
  rule.weights.resize(static_cast<std::size_t>(order));
  const double pi = std::acos(-1.0);
  for (int i = 0; i < order; ++i) {
    double x = std::cos(pi * (i + 0.75) / (order + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= order; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = order * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    rule.nodes[static_cast<std::size_t>(i)] = 0.5 * (1.0 - x);
    rule.weights[static_cast<std::size_t>(i)] = 1.0 / ((1.0 - x * x) * dp * dp);
  }
  return rule;
}

}  // namespace

const QuadratureRule& gauss_legendre_01(int order) {
  if (order == 8) {
    static const QuadratureRule rule8 = compute_gauss_legendre(8);
    return rule8;
  }
  if (order < 1 || order > 64) throw PreconditionError("quadrature order must be in [1, 64]");
  thread_local QuadratureRule other;
  other = compute_gauss_legendre(order);
  return other;
}

Mat chord_matrix(const VectorField& f, const Vec& p, const Vec& q) {
  const auto n = static_cast<Eigen::Index>(f.dim());
  require_dim(p, n, "chord_matrix p");
  require_dim(q, n, "chord_matrix q");
  if (p == q) return f.jacobian(p);
  const QuadratureRule& gl = gauss_legendre_01(8);
  Mat A = Mat::Zero(n, n);
  for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
    const double s = gl.nodes[i];
    A += gl.weights[i] * f.jacobian(s * p + (1.0 - s) * q);
  }
  return A;
}

namespace {

// z = [x_p; x_q; vec(U)] with U stored column-major.
class JointChordField final : public VectorField {
 public:
  explicit JointChordField(const VectorField& f) : f_(f), n_(static_cast<Eigen::Index>(f.dim())) {}

  std::size_t dim() const override { return static_cast<std::size_t>(2 * n_ + n_ * n_); }

  void eval(const Vec& z, Vec& dz) const override {
    dz.resize(z.size());
    const Vec xp = z.segment(0, n_);
    const Vec xq = z.segment(n_, n_);
    Vec fp(n_);
    f_.eval(xp, fp);
    dz.segment(0, n_) = fp;
    if (xp == xq) {
      dz.segment(n_, n_) = fp;
    } else {
      Vec fq(n_);
      f_.eval(xq, fq);
      dz.segment(n_, n_) = fq;
    }
    const Mat A = chord_matrix(f_, xp, xq);
    const Eigen::Map<const Mat> U(z.data() + 2 * n_, n_, n_);
    Eigen::Map<Mat> dU(dz.data() + 2 * n_, n_, n_);
    dU.noalias() = A * U;
  }

 private:
  const VectorField& f_;
  Eigen::Index n_;
};

}  // namespace

ChordFlow::ChordFlow(std::size_t n, Vec p, Vec q, Trajectory joint)
    : n_(n), p_(std::move(p)), q_(std::move(q)), joint_(std::move(joint)) {}

Mat ChordFlow::unpack(const Vec& z) const {
  const auto n = static_cast<Eigen::Index>(n_);
  return Eigen::Map<const Mat>(z.data() + 2 * n, n, n);
}

Vec ChordFlow::p_at(double t) const { return joint_.at(t).head(static_cast<Eigen::Index>(n_)); }

Vec ChordFlow::q_at(double t) const {
  return joint_.at(t).segment(static_cast<Eigen::Index>(n_), static_cast<Eigen::Index>(n_));
}

Mat ChordFlow::U(double t) const { return unpack(joint_.at(t)); }

ChordFlow fundamental_matrix(const VectorField& f, const Vec& p, const Vec& q, double t0,
                             double t1, const IntegratorOptions& opts) {
  const auto n = static_cast<Eigen::Index>(f.dim());
  require_dim(p, n, "fundamental_matrix p");
  require_dim(q, n, "fundamental_matrix q");
  JointChordField joint(f);
  Vec z0(2 * n + n * n);
  z0.segment(0, n) = p;
  z0.segment(n, n) = q;
  Eigen::Map<Mat>(z0.data() + 2 * n, n, n).setIdentity();
  IntegratorOptions jopts = opts;
  if (opts.abs_tol_vec.size() == n) {
    jopts.abs_tol_vec = Vec::Constant(2 * n + n * n, opts.abs_tol);
    jopts.abs_tol_vec.segment(0, n) = opts.abs_tol_vec;
    jopts.abs_tol_vec.segment(n, n) = opts.abs_tol_vec;
  }
  return ChordFlow(static_cast<std::size_t>(n), p, q, flow(joint, z0, t0, t1, jopts));
}

Mat cocycle_compose(const ChordFlow& cf1, double s, const ChordFlow& cf2, double t, double tol) {
  if (cf1.dim() != cf2.dim()) throw DimensionError("cocycle_compose: dimension mismatch");
  const Vec ps = cf1.p_at(cf1.t0() + s);
  const Vec qs = cf1.q_at(cf1.t0() + s);
  if ((cf2.p() - ps).norm() > tol * (1.0 + ps.norm()) ||
      (cf2.q() - qs).norm() > tol * (1.0 + qs.norm())) {
    throw PreconditionError("cocycle_compose: second flow does not start at the first flow's endpoints");
  }
  return cf2.U(cf2.t0() + t) * cf1.U(cf1.t0() + s);
}

}  // namespace coneflow
