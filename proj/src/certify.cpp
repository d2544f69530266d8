#include "coneflow/certify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace coneflow {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_cone_fits(const VectorField& f, const QuadraticCone& cone) {
  if (static_cast<std::size_t>(cone.rank()) > f.dim()) {
    throw PreconditionError("cone rank " + std::to_string(cone.rank()) +
                            " exceeds usable subspace of the " + std::to_string(f.dim()) +
                            "-dimensional field");
  }
  if (cone.dim() != f.dim()) {
    throw PreconditionError("cone dimension " + std::to_string(cone.dim()) +
                            " does not match field dimension " + std::to_string(f.dim()));
  }
}

std::vector<double> checked_times(std::vector<double> t, bool allow_zero) {
  if (t.empty()) throw PreconditionError("time grid is empty");
  for (double s : t) {
    if (!std::isfinite(s) || s < 0.0 || (!allow_zero && s == 0.0)) {
      throw PreconditionError(allow_zero ? "sample times must be finite and >= 0"
                                         : "time grid entries must be > 0 (U(0) = I maps the "
                                           "boundary to the boundary)");
    }
  }
  std::sort(t.begin(), t.end());
  t.erase(std::unique(t.begin(), t.end()), t.end());
  return t;
}

double spectral_norm(const Mat& A) {
  return Eigen::JacobiSVD<Mat>(A).singularValues()(0);
}

}  // namespace

LambdaSpec LambdaSpec::automatic() { return LambdaSpec{}; }

LambdaSpec LambdaSpec::constant(double c) {
  return function([c](const Vec&) { return c; }, std::to_string(c));
}

LambdaSpec LambdaSpec::function(Fn fn, std::string text) {
  LambdaSpec s;
  s.fn_ = std::move(fn);
  s.text_ = std::move(text);
  return s;
}

LambdaSpec LambdaSpec::parse(const std::string& text, const SystemDef& sys,
                             const ParamMap& params) {
  const auto first = text.find_first_not_of(" \t");
  const auto last = text.find_last_not_of(" \t");
  const std::string trimmed = first == std::string::npos ? "" : text.substr(first, last - first + 1);
  if (trimmed == "auto") return automatic();
  auto expr = std::make_shared<const Expr>(parse_expression(trimmed, sys.scope()));
  std::vector<double> pv(sys.params.size());
  for (std::size_t i = 0; i < sys.params.size(); ++i) {
    auto it = params.find(sys.params[i]);
    pv[i] = it == params.end() ? 0.0 : it->second;
  }
  return function(
      [expr, pv](const Vec& xi) {
        return expr->evaluate<double>(std::span<const double>(xi.data(), static_cast<std::size_t>(xi.size())),
                                      std::span<const double>(pv));
      },
      trimmed);
}

const char* to_string(CertMode m) {
  switch (m) {
    case CertMode::Algebraic: return "algebraic";
    case CertMode::Dynamic: return "dynamic";
    case CertMode::Eventual: return "eventual";
  }
  return "?";
}

Mat cooperativity_matrix(const Mat& P, const Mat& DF, double lambda) {
  Mat M = P * DF;
  M += DF.transpose() * P;
  M += lambda * P;
  return 0.5 * (M + M.transpose());
}

double max_eigenvalue(const Mat& symmetric) {
  return Eigen::SelfAdjointEigenSolver<Mat>(symmetric, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
}

double lambda_centre(const Mat& P, const Mat& DF) {
  Eigen::SelfAdjointEigenSolver<Mat> es(P);
  const Vec& e = es.eigenvalues();
  const Mat& V = es.eigenvectors();
  const Vec scale = e.cwiseAbs().cwiseSqrt().cwiseInverse();
  const Mat T = scale.asDiagonal() * (V.transpose() * cooperativity_matrix(P, DF, 0.0) * V) *
                scale.asDiagonal();
  std::vector<Eigen::Index> neg, pos;
  for (Eigen::Index i = 0; i < e.size(); ++i) (e[i] < 0 ? neg : pos).push_back(i);
  if (neg.empty() || pos.empty()) return 0.0;
  auto block_max = [&](const std::vector<Eigen::Index>& idx) {
    Mat B(static_cast<Eigen::Index>(idx.size()), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i)
      for (std::size_t j = 0; j < idx.size(); ++j)
        B(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = T(idx[i], idx[j]);
    return max_eigenvalue(B);
  };
  return 0.5 * (block_max(neg) - block_max(pos));
}

std::pair<double, double> auto_lambda(const Mat& P, const Mat& DF, const AutoLambdaOptions& opts) {
  if (opts.samples < 3 || !(opts.half_width > 0.0)) throw PreconditionError("invalid auto-lambda options");
  const double lc = lambda_centre(P, DF);
  auto h = [&](double l) { return max_eigenvalue(cooperativity_matrix(P, DF, l)); };
  const double lo = lc - opts.half_width, hi = lc + opts.half_width;
  const double step = (hi - lo) / (opts.samples - 1);
  int best = 0;
  double best_val = kInf;
  for (int k = 0; k < opts.samples; ++k) {
    const double v = h(lo + step * k);
    if (v < best_val) {
      best_val = v;
      best = k;
    }
  }
  double a = lo + step * std::max(best - 1, 0);
  double b = lo + step * std::min(best + 1, opts.samples - 1);
  double best_l = lo + step * best;
  constexpr double kInvPhi = 0.6180339887498949;
  double c = b - kInvPhi * (b - a), d = a + kInvPhi * (b - a);
  double fc = h(c), fd = h(d);
  for (int it = 0; it < 200 && (b - a) > opts.tol * (1.0 + std::abs(best_l)); ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = h(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = h(d);
    }
  }
  for (auto [l, v] : {std::pair{c, fc}, std::pair{d, fd}}) {
    if (v < best_val) {
      best_val = v;
      best_l = l;
    }
  }
  return {best_l, best_val};
}

CooperativityReport algebraic_certificate(const VectorField& f, const QuadraticCone& cone,
                                          const Box& box, int grid_res, const LambdaSpec& lambda,
                                          const AlgebraicOptions& opts) {
  require_cone_fits(f, cone);
  if (box.dim() != f.dim()) throw PreconditionError("box dimension does not match the field");
  if (grid_res < 1) throw PreconditionError("grid is empty (grid_res < 1)");
  const auto pts = tensor_grid(box, grid_res);
  CooperativityReport rep;
  rep.mode = CertMode::Algebraic;
  rep.required_margin = opts.required_margin;
  rep.lambda_text = lambda.text();
  rep.description = std::to_string(grid_res) + "^" + std::to_string(f.dim()) + " grid";
  rep.points.resize(pts.size());
  const Mat& P = cone.matrix();
  for_each_index(pts.size(), opts.execution, [&](std::size_t k) {
    AlgebraicPoint& pt = rep.points[k];
    pt.xi = pts[k];
    const Mat DF = f.jacobian(pts[k]);
    if (lambda.is_auto()) {
      std::tie(pt.lambda, pt.max_eigenvalue) = auto_lambda(P, DF, opts.auto_lambda);
    } else {
      pt.lambda = lambda(pts[k]);
      pt.max_eigenvalue = max_eigenvalue(cooperativity_matrix(P, DF, pt.lambda));
    }
    pt.pass = pt.max_eigenvalue < -opts.required_margin;
  });
  rep.worst_margin = -kInf;
  for (std::size_t k = 0; k < rep.points.size(); ++k) {
    if (!rep.points[k].pass) ++rep.failures;
    if (rep.points[k].max_eigenvalue > rep.worst_margin) {
      rep.worst_margin = rep.points[k].max_eigenvalue;
      rep.worst_index = k;
    }
  }
  rep.pass = rep.failures == 0;
  return rep;
}

CooperativityReport dynamic_certificate(const VectorField& f, const QuadraticCone& cone,
                                        const std::vector<PointPair>& pairs,
                                        const std::vector<double>& t_grid,
                                        std::size_t n_directions, std::uint64_t seed,
                                        const DynamicOptions& opts) {
  require_cone_fits(f, cone);
  if (pairs.empty()) throw PreconditionError("no point pairs given");
  if (n_directions == 0) throw PreconditionError("need at least one boundary direction");
  const auto times = checked_times(t_grid, false);
  const auto n = static_cast<Eigen::Index>(f.dim());
  for (const auto& [p, q] : pairs) {
    require_dim(p, n, "pair point p");
    require_dim(q, n, "pair point q");
  }
  auto dirs = cone.sample_directions(n_directions, ConeStratum::Boundary, seed);
  if (opts.interior_directions > 0) {
    auto inner = cone.sample_directions(opts.interior_directions, ConeStratum::Interior,
                                        seed ^ 0x9e3779b97f4a7c15ULL);
    dirs.insert(dirs.end(), inner.begin(), inner.end());
  }

  CooperativityReport rep;
  rep.mode = CertMode::Dynamic;
  rep.required_margin = opts.relative_margin;
  rep.t_grid = times;
  rep.pairs = pairs;
  rep.directions = dirs.size();
  rep.description = std::to_string(pairs.size()) + " pairs x " + std::to_string(times.size()) +
                    " times x " + std::to_string(dirs.size()) + " directions";
  rep.samples.resize(pairs.size() * times.size());
  const Mat& P = cone.matrix();
  for_each_index(pairs.size(), opts.execution, [&](std::size_t i) {
    const ChordFlow cf = fundamental_matrix(f, pairs[i].first, pairs[i].second, 0.0, times.back(),
                                            opts.integrator);
    for (std::size_t j = 0; j < times.size(); ++j) {
      const Mat U = cf.U(times[j]);
      DynamicSample& s = rep.samples[i * times.size() + j];
      s.pair = i;
      s.t = times[j];
      s.worst_margin = -kInf;
      for (const Vec& v : dirs) {
        const Vec w = U * v;
        const double nn = w.squaredNorm();
        const double m = nn > 0.0 ? w.dot(P * w) / nn : kInf;
        if (m > s.worst_margin) {
          s.worst_margin = m;
          s.worst_direction = v;
        }
      }
      s.pass = s.worst_margin < -opts.relative_margin;
    }
  });
  rep.worst_margin = -kInf;
  for (std::size_t k = 0; k < rep.samples.size(); ++k) {
    if (!rep.samples[k].pass) ++rep.failures;
    if (rep.samples[k].worst_margin > rep.worst_margin) {
      rep.worst_margin = rep.samples[k].worst_margin;
      rep.worst_index = k;
    }
  }
  rep.pass = rep.failures == 0;
  return rep;
}

CooperativityReport eventual_tstar(const VectorField& g, const QuadraticCone& cone,
                                   const std::vector<PointPair>& pairs,
                                   const std::vector<double>& t_grid, std::size_t n_directions,
                                   std::uint64_t seed, const EventualOptions& opts,
                                   const VectorField* reference, const std::optional<Box>& box) {
  CooperativityReport rep = dynamic_certificate(g, cone, pairs, t_grid, n_directions, seed, opts.dynamic);
  rep.mode = CertMode::Eventual;
  const std::size_t nt = rep.t_grid.size();
  std::vector<bool> ok(nt, true);
  for (const auto& s : rep.samples) {
    const auto j = static_cast<std::size_t>(std::lower_bound(rep.t_grid.begin(), rep.t_grid.end(), s.t) -
                                            rep.t_grid.begin());
    if (!s.pass) ok[j] = false;
  }
  std::size_t k = nt;
  while (k > 0 && ok[k - 1]) --k;
  if (k < nt) rep.tstar = rep.t_grid[k];
  rep.pass = rep.tstar.has_value();

  if (reference != nullptr) {
    if (!box) throw PreconditionError("a box is required to sample the perturbation size");
    if (reference->dim() != g.dim()) throw DimensionError("reference field dimension mismatch");
    double sup = 0.0;
    for (const Vec& x : random_points(*box, opts.perturbation_samples, seed + 1)) {
      sup = std::max(sup, ((*reference)(x) - g(x)).norm() +
                              spectral_norm(reference->jacobian(x) - g.jacobian(x)));
    }
    rep.perturbation_sup = sup;
  }
  return rep;
}

MonotonicityResult monotonicity_check(const VectorField& f, const QuadraticCone& cone,
                                      const std::vector<PointPair>& pairs,
                                      const std::vector<double>& t_samples,
                                      const MonotonicityOptions& opts) {
  require_cone_fits(f, cone);
  const auto times = checked_times(t_samples, true);
  const auto n = static_cast<Eigen::Index>(f.dim());
  std::vector<bool> skip(pairs.size(), false);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    require_dim(pairs[i].first, n, "pair point p");
    require_dim(pairs[i].second, n, "pair point q");
    const Vec d = pairs[i].second - pairs[i].first;
    if (d.norm() == 0.0) {
      skip[i] = true;
    } else if (cone.contains(d).stratum == ConeStratum::Exterior) {
      throw PreconditionError("pair " + std::to_string(i) + " is not ordered: q - p lies outside the cone");
    }
  }

  struct PairOutcome {
    std::size_t checked = 0;
    std::size_t violations = 0;
    std::optional<OrderWitness> first;
    double worst = -kInf;
  };
  std::vector<PairOutcome> out(pairs.size());
  for_each_index(pairs.size(), opts.execution, [&](std::size_t i) {
    if (skip[i]) return;
    const auto& [p, q] = pairs[i];
    std::optional<Trajectory> tp, tq;
    if (times.back() > 0.0) {
      tp = flow(f, p, 0.0, times.back(), opts.integrator);
      tq = flow(f, q, 0.0, times.back(), opts.integrator);
    }
    PairOutcome& o = out[i];
    for (double t : times) {
      const Vec d = t > 0.0 ? Vec(tq->at(t) - tp->at(t)) : Vec(q - p);
      const ConePosition pos = cone.contains(d, opts.relative_margin);
      const bool strict = opts.strong && t > 0.0 && t >= opts.strict_after;
      const bool good = strict ? pos.stratum == ConeStratum::Interior : pos.stratum != ConeStratum::Exterior;
      const double nq = pos.q / d.squaredNorm();
      ++o.checked;
      o.worst = std::max(o.worst, nq);
      if (!good) {
        ++o.violations;
        if (!o.first) o.first = OrderWitness{i, t, pos.stratum, nq};
      }
    }
  });
  MonotonicityResult res;
  res.worst_normalized_q = -kInf;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (skip[i]) {
      ++res.skipped;
      continue;
    }
    res.checked += out[i].checked;
    res.violations += out[i].violations;
    res.worst_normalized_q = std::max(res.worst_normalized_q, out[i].worst);
    if (!res.first_violation && out[i].first) res.first_violation = out[i].first;
  }
  res.pass = res.violations == 0;
  return res;
}

std::optional<std::pair<double, double>> pseudo_order_scan(const Trajectory& traj,
                                                           const QuadraticCone& cone,
                                                           std::size_t stride, double margin) {
  if (traj.size() < 2) throw PreconditionError("trajectory needs at least 2 samples");
  if (stride == 0) throw PreconditionError("stride must be positive");
  if (traj.dim() != cone.dim()) throw DimensionError("trajectory dimension does not match the cone");
  const auto& t = traj.times();
  const auto& x = traj.states();
  for (std::size_t i = 0; i < x.size(); i += stride) {
    for (std::size_t j = i + stride; j < x.size(); j += stride) {
      const Vec d = x[j] - x[i];
      if (d.norm() <= 1e-12 * (1.0 + x[i].norm())) continue;
      if (cone.contains(d, margin).stratum != ConeStratum::Exterior) return std::pair{t[i], t[j]};
    }
  }
  return std::nullopt;
}

std::vector<PointPair> random_ordered_pairs(const QuadraticCone& cone, const Box& box,
                                            std::size_t count, double s_min, double s_max,
                                            std::uint64_t seed) {
  if (box.dim() != cone.dim()) throw DimensionError("box dimension does not match the cone");
  if (!(s_min > 0.0) || s_max < s_min) throw PreconditionError("need 0 < s_min <= s_max");
  const auto dirs = cone.sample_directions(count, ConeStratum::Interior, seed);
  const auto base = random_points(box, count, seed + 1);
  std::mt19937_64 rng(seed + 2);
  std::uniform_real_distribution<double> u(s_min, s_max);
  std::vector<PointPair> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) out.emplace_back(base[k], base[k] + u(rng) * dirs[k]);
  return out;
}

}  // namespace coneflow
