#include "coneflow/limitsets.hpp"

#include "coneflow/slowfast.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace coneflow {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

CVec sorted_by_modulus(const CVec& v) {
  std::vector<std::complex<double>> e(v.begin(), v.end());
  std::sort(e.begin(), e.end(), [](auto a, auto b) {
    if (std::abs(a) != std::abs(b)) return std::abs(a) > std::abs(b);
    if (a.real() != b.real()) return a.real() > b.real();
    return a.imag() > b.imag();
  });
  CVec out(static_cast<Eigen::Index>(e.size()));
  for (std::size_t i = 0; i < e.size(); ++i) out[static_cast<Eigen::Index>(i)] = e[i];
  return out;
}

bool in_box(const std::optional<Box>& box, const Vec& x) {
  if (!box) return true;
  const Vec slack = 0.01 * (box->hi - box->lo);
  for (Eigen::Index i = 0; i < x.size(); ++i)
    if (x[i] < box->lo[i] - slack[i] || x[i] > box->hi[i] + slack[i]) return false;
  return true;
}

OmegaClassification unresolved(std::string reason, Vec ref, std::map<std::string, double> diag = {}) {
  OmegaClassification c;
  c.kind = OmegaKind::Unresolved;
  c.reason = std::move(reason);
  c.reference_state = std::move(ref);
  c.diagnostics = std::move(diag);
  return c;
}

}  // namespace

Equilibrium polish_equilibrium(const VectorField& f, const Vec& guess, const EquilibriumOptions& opts) {
  Vec x = guess;
  Vec F = f(x);
  double r = F.norm();
  int extra = 0;
  for (int it = 0; it < opts.max_iter; ++it) {
    if (r <= opts.tol && (extra++ >= 2 || r == 0.0)) break;
    const Mat J = f.jacobian(x);
    const auto lu = J.fullPivLu();
    if (!lu.isInvertible()) throw ConvergenceError("singular Jacobian during equilibrium Newton");
    const Vec dx = lu.solve(-F);
    double a = 1.0;
    bool ok = false;
    for (int k = 0; k < 30; ++k, a *= 0.5) {
      const Vec xn = x + a * dx;
      Vec Fn;
      try {
        Fn = f(xn);
      } catch (const EvalError&) {
        continue;
      }
      if (Fn.allFinite() && Fn.norm() < r) {
        x = xn;
        F = Fn;
        r = F.norm();
        ok = true;
        break;
      }
    }
    if (!ok) break;
  }
  if (!(r <= opts.tol)) throw ConvergenceError("equilibrium Newton did not converge");
  Equilibrium e;
  e.point = x;
  e.residual = f(x).norm();
  e.eigenvalues = Eigen::EigenSolver<Mat>(f.jacobian(x), false).eigenvalues();
  return e;
}

std::vector<Equilibrium> find_equilibria(const VectorField& f, const Box& box, int seed_grid_res,
                                         const EquilibriumOptions& opts) {
  if (box.dim() != f.dim()) throw DimensionError("box dimension does not match the field");
  for (Eigen::Index i = 0; i < box.lo.size(); ++i)
    if (!(box.lo[i] <= box.hi[i])) throw PreconditionError("box is empty");
  const auto seeds = tensor_grid(box, seed_grid_res);
  std::vector<std::optional<Equilibrium>> found(seeds.size());
  for_each_index(seeds.size(), opts.execution, [&](std::size_t k) {
    try {
      found[k] = polish_equilibrium(f, seeds[k], opts);
    } catch (const Error&) {
    }
  });
  std::vector<Equilibrium> out;
  for (auto& e : found) {
    if (!e || !box.contains(e->point, 1e-9)) continue;
    const bool dup = std::any_of(out.begin(), out.end(), [&](const Equilibrium& o) {
      return (o.point - e->point).norm() <= opts.dedup;
    });
    if (!dup) out.push_back(std::move(*e));
  }
  return out;
}

PoincareReturn poincare_return(const VectorField& f, const Vec& anchor, const Vec& direction,
                               const Vec& start, const PoincareOptions& opts) {
  const auto n = static_cast<Eigen::Index>(f.dim());
  require_dim(anchor, n, "anchor");
  require_dim(start, n, "start");
  const Vec Fa = f(anchor);
  const Vec dir = direction.size() == 0 ? Fa : direction;
  require_dim(dir, n, "section direction");
  const double flux = Fa.dot(dir);
  if (!(std::abs(flux) > opts.tangency_tol * Fa.norm() * dir.norm()) || dir.norm() == 0.0) {
    throw PreconditionError("section is not transversal to the flow at the anchor");
  }
  const double sigma = flux > 0 ? 1.0 : -1.0;
  auto s = [&](const Vec& x) { return sigma * (x - anchor).dot(dir); };

  Dopri5 st(f, 0.0, start, opts.integrator);
  double s_prev = s(start);
  while (st.t() < opts.t_max) {
    st.step(opts.t_max);
    const double s_new = s(st.x());
    if (s_prev < 0.0 && s_new >= 0.0) {
      double a = st.t_prev(), b = st.t();
      while (b - a > opts.time_tol) {
        const double m = 0.5 * (a + b);
        (s(st.dense(m)) < 0.0 ? a : b) = m;
      }
      PoincareReturn ret{st.dense(b), b};
      const Vec Fr = f(ret.point);
      if (std::abs(Fr.dot(dir)) < opts.tangency_tol * Fr.norm() * dir.norm()) {
        throw ConvergenceError("tangential section crossing at t = " + std::to_string(b));
      }
      return ret;
    }
    s_prev = s_new;
  }
  throw ConvergenceError("no section crossing within t_max = " + std::to_string(opts.t_max));
}

std::size_t count_unit_multipliers(const CVec& floquet, double tol) {
  std::size_t k = 0;
  for (const auto& m : floquet)
    if (std::abs(m - 1.0) <= tol) ++k;
  return k;
}

PeriodicOrbit refine_periodic_orbit(const VectorField& f, const Vec& x_guess, double T_guess,
                                    const RefineOptions& opts) {
  const auto n = static_cast<Eigen::Index>(f.dim());
  require_dim(x_guess, n, "orbit guess");
  if (!(T_guess > 0.0) || !std::isfinite(T_guess)) throw PreconditionError("period guess must be positive");
  const Vec F0 = f(x_guess);
  if (!(F0.norm() > 1e-10)) throw ConvergenceError("section degeneracy: the field vanishes at the guess");
  const Vec normal = F0 / F0.norm();
  const double scale = 1.0 + x_guess.norm();

  Vec x = x_guess;
  double T = T_guess;
  auto residual_at = [&](const Vec& y, double t) {
    IntegratorOptions o = opts.integrator;
    o.dense = false;
    return (flow(f, y, 0.0, t, o).back() - y).norm();
  };
  for (int it = 0; it <= opts.max_iter; ++it) {
    std::optional<ChordFlow> cf;
    try {
      cf.emplace(fundamental_matrix(f, x, x, 0.0, T, opts.integrator));
    } catch (const Error& e) {
      throw ConvergenceError(std::string("periodic orbit refinement: ") + e.what());
    }
    const Vec xT = cf->p_at(T);
    const Vec r = xT - x;
    const Mat M = cf->U_final();
    if (r.norm() <= opts.orbit_tol) {
      if (!(f(x).norm() > 1e-8 * F0.norm()))
        throw ConvergenceError("periodic orbit refinement collapsed onto an equilibrium");
      PeriodicOrbit po;
      po.anchor = x;
      po.section_normal = normal;
      po.period = T;
      po.raw_period = T_guess;
      po.monodromy = M;
      po.floquet = sorted_by_modulus(Eigen::EigenSolver<Mat>(M, false).eigenvalues());
      po.residual = r.norm();
      po.iterations = it;
      po.hyperbolic = count_unit_multipliers(po.floquet, opts.floquet_tol) == 1;
      po.orbit = flow(f, x, 0.0, T, opts.integrator);
      return po;
    }
    if (it == opts.max_iter) break;

    Mat J = Mat::Zero(n + 1, n + 1);
    J.topLeftCorner(n, n) = M - Mat::Identity(n, n);
    J.topRightCorner(n, 1) = f(xT);
    J.bottomLeftCorner(1, n) = normal.transpose();
    Vec rhs(n + 1);
    rhs << -r, -normal.dot(x - x_guess);
    Eigen::CompleteOrthogonalDecomposition<Mat> cod(J.rows(), J.cols());
    cod.setThreshold(1e-8);
    cod.compute(J);
    const Vec delta = cod.solve(rhs);
    if (!delta.allFinite()) throw ConvergenceError("periodic orbit refinement: singular Newton system");

    const double r0 = r.norm();
    double a = 1.0;
    bool accepted = false;
    for (int k = 0; k < 8 && !accepted; ++k, a *= 0.5) {
      const Vec xn = x + a * delta.head(n);
      const double Tn = T + a * delta[n];
      if (!(Tn > 0.0) || (xn - x_guess).norm() > 10.0 * scale) continue;
      double rn;
      try {
        rn = residual_at(xn, Tn);
      } catch (const Error&) {
        continue;
      }
      if (rn < r0 || k == 7) {
        x = xn;
        T = Tn;
        accepted = rn < r0;
      }
    }
    if (!accepted) throw ConvergenceError("periodic orbit refinement stalled (residual " + std::to_string(r0) + ")");
  }
  throw ConvergenceError("periodic orbit refinement did not converge in " + std::to_string(opts.max_iter) +
                         " iterations");
}

const char* to_string(OmegaKind k) {
  switch (k) {
    case OmegaKind::Equilibrium: return "Equilibrium";
    case OmegaKind::ClosedOrbit: return "ClosedOrbit";
    case OmegaKind::Unresolved: return "Unresolved";
  }
  return "?";
}

ClassifyOptions slow_fast_classify_options(const SlowFastSystem& sf, ClassifyOptions base) {
  base.integrator = sf.scaled_options(base.integrator);
  base.refine.integrator = sf.scaled_options(base.refine.integrator);
  return base;
}

OmegaClassification classify_omega(const VectorField& f, const Vec& x0, const ClassifyOptions& opts) {
  const auto n = static_cast<Eigen::Index>(f.dim());
  require_dim(x0, n, "initial condition");
  IntegratorOptions lean = opts.integrator;
  lean.dense = false;

  Vec x_ref;
  try {
    const Trajectory tr = flow(f, x0, 0.0, opts.transient, lean);
    for (const Vec& s : tr.states())
      if (!in_box(opts.box, s)) return unresolved("trajectory left the box during the transient", s);
    x_ref = tr.back();
  } catch (const Error& e) {
    return unresolved(std::string("integration failed during transient: ") + e.what(), x0);
  }

  const double speed = f(x_ref).norm();
  std::map<std::string, double> diag{{"speed_at_reference", speed}};
  if (speed < opts.eq_tol) {
    double disp = 0.0;
    try {
      const Trajectory probe = flow(f, x_ref, 0.0, opts.probe, lean);
      for (const Vec& s : probe.states()) disp = std::max(disp, (s - x_ref).norm());
    } catch (const Error& e) {
      return unresolved(std::string("integration failed during probe: ") + e.what(), x_ref, diag);
    }
    diag["probe_displacement"] = disp;
    if (disp < opts.eq_tol) {
      try {
        OmegaClassification c;
        c.kind = OmegaKind::Equilibrium;
        c.equilibrium = polish_equilibrium(f, x_ref);
        c.reference_state = x_ref;
        c.diagnostics = diag;
        return c;
      } catch (const Error& e) {
        return unresolved(std::string("equilibrium polish failed: ") + e.what(), x_ref, diag);
      }
    }
  }

  // near-recurrence search
  const double threshold = opts.recur_tol * (1.0 + x_ref.norm());
  double min_dist = kInf, T_raw = 0.0, hit_dist = kInf;
  try {
    Dopri5 st(f, 0.0, x_ref, opts.integrator);
    Trajectory tr;
    tr.push(0.0, x_ref);
    double d2 = kInf, d1 = kInf;
    while (st.t() < opts.t_max && T_raw == 0.0) {
      st.step(opts.t_max);
      tr.push(st.t(), st.x());
      tr.push_dense(st.dense_coeffs());
      if (!in_box(opts.box, st.x())) return unresolved("trajectory left the box", st.x(), diag);
      const double d0 = (st.x() - x_ref).norm();
      const std::size_t k = tr.size() - 1;
      if (k >= 2 && d1 < d2 && d1 <= d0 && tr.times()[k - 1] >= opts.t_min) {
        // golden-section refinement of the local minimum on [t_{k-2}, t_k]
        double a = tr.times()[k - 2], b = tr.times()[k];
        auto dist = [&](double t) { return (tr.at(t) - x_ref).norm(); };
        constexpr double g = 0.6180339887498949;
        double c = b - g * (b - a), e = a + g * (b - a), fc = dist(c), fe = dist(e);
        for (int i = 0; i < 80 && b - a > 1e-13 * (1.0 + b); ++i) {
          if (fc < fe) {
            b = e; e = c; fe = fc; c = b - g * (b - a); fc = dist(c);
          } else {
            a = c; c = e; fc = fe; e = a + g * (b - a); fe = dist(e);
          }
        }
        const double tm = fc < fe ? c : e, dm = std::min(fc, fe);
        min_dist = std::min(min_dist, dm);
        if (dm < threshold) {
          T_raw = tm;
          hit_dist = dm;
        }
      }
      d2 = d1;
      d1 = d0;
    }
  } catch (const Error& e) {
    return unresolved(std::string("integration failed during recurrence search: ") + e.what(), x_ref, diag);
  }
  diag["min_recurrence_distance"] = min_dist;
  if (T_raw == 0.0) {
    return unresolved("no near-recurrence below " + std::to_string(threshold) + " in [" +
                          std::to_string(opts.t_min) + ", " + std::to_string(opts.t_max) + "]",
                      x_ref, diag);
  }
  diag["raw_period"] = T_raw;
  diag["recurrence_distance"] = hit_dist;

  PeriodicOrbit po;
  try {
    po = refine_periodic_orbit(f, x_ref, T_raw, opts.refine);
  } catch (const Error& e) {
    return unresolved(std::string("periodic orbit refinement failed: ") + e.what(), x_ref, diag);
  }
  diag["period"] = po.period;
  diag["orbit_residual"] = po.residual;
  diag["unit_multipliers"] = static_cast<double>(count_unit_multipliers(po.floquet, opts.refine.floquet_tol));
  if (!po.hyperbolic) {
    auto c = unresolved("non-hyperbolic closed orbit (Floquet multipliers near 1: " +
                            std::to_string(count_unit_multipliers(po.floquet, opts.refine.floquet_tol)) + ")",
                        x_ref, diag);
    c.orbit = std::move(po);
    return c;
  }
  if (!opts.known_equilibria.empty()) {
    const Trajectory samples = po.orbit.resample(512);
    double sep = kInf;
    for (const Vec& s : samples.states())
      for (const Vec& e : opts.known_equilibria) sep = std::min(sep, (s - e).norm());
    diag["equilibrium_separation"] = sep;
    if (!(sep > opts.separation_tol)) {
      auto c = unresolved("closed orbit passes within " + std::to_string(sep) + " of an equilibrium", x_ref, diag);
      c.orbit = std::move(po);
      return c;
    }
  }
  OmegaClassification c;
  c.kind = OmegaKind::ClosedOrbit;
  c.orbit = std::move(po);
  c.reference_state = x_ref;
  c.diagnostics = diag;
  return c;
}

SweepReport genericity_sweep(const VectorField& f, const Box& box, std::size_t n, std::uint64_t seed,
                             const SweepOptions& opts) {
  if (n == 0) throw PreconditionError("sweep needs N > 0");
  if (box.dim() != f.dim()) throw DimensionError("box dimension does not match the field");
  SweepReport rep;
  rep.n = n;
  rep.seed = seed;
  ClassifyOptions copts = opts.classify;
  if (opts.equilibrium_seed_res > 0) {
    rep.equilibria = find_equilibria(f, box, opts.equilibrium_seed_res);
    for (const auto& e : rep.equilibria) copts.known_equilibria.push_back(e.point);
  }

  std::vector<Vec> ics;
  for (const Vec& v : opts.forced_samples) {
    if (ics.size() == n) break;
    require_dim(v, static_cast<Eigen::Index>(f.dim()), "forced sample");
    ics.push_back(v);
  }
  for (Vec& v : random_points(box, n - ics.size(), seed)) ics.push_back(std::move(v));

  rep.entries.resize(n);
  for_each_index(n, opts.execution, [&](std::size_t i) {
    SweepEntry& e = rep.entries[i];
    e.index = i;
    e.ic = ics[i];
    OmegaClassification c;
    try {
      c = classify_omega(f, ics[i], copts);
    } catch (const std::exception& ex) {
      c = unresolved(std::string("classification error: ") + ex.what(), ics[i]);
    }
    e.kind = c.kind;
    e.reason = c.reason;
    e.diagnostics = c.diagnostics;
    if (c.kind == OmegaKind::ClosedOrbit) {
      e.period = c.orbit->period;
      e.point = c.orbit->anchor;
    } else if (c.kind == OmegaKind::Equilibrium) {
      e.point = c.equilibrium->point;
    }
  });
  for (const auto& e : rep.entries) {
    switch (e.kind) {
      case OmegaKind::ClosedOrbit: ++rep.closed_orbit; break;
      case OmegaKind::Equilibrium: ++rep.equilibrium; break;
      case OmegaKind::Unresolved: ++rep.unresolved; break;
    }
    auto& ex = rep.exemplars[e.kind];
    if (ex.size() < opts.exemplars_per_class) ex.push_back(e.index);
  }
  return rep;
}

double hausdorff_distance(const std::vector<Vec>& a, const std::vector<Vec>& b) {
  if (a.empty() || b.empty()) throw PreconditionError("Hausdorff distance of an empty set");
  auto directed = [](const std::vector<Vec>& p, const std::vector<Vec>& q) {
    double h = 0.0;
    for (const Vec& x : p) {
      double m = kInf;
      for (const Vec& y : q) m = std::min(m, (x - y).norm());
      h = std::max(h, m);
    }
    return h;
  };
  return std::max(directed(a, b), directed(b, a));
}

}  // namespace coneflow
