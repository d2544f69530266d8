#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "coneflow/builtins.hpp"
#include "coneflow/certify.hpp"
#include "coneflow/slowfast.hpp"

#include <cmath>

using namespace coneflow;

namespace {

Vec vec(std::initializer_list<double> d) {
  Vec v(static_cast<Eigen::Index>(d.size()));
  Eigen::Index i = 0;
  for (double x : d) v[i++] = x;
  return v;
}

struct Limit {
  BuiltinSystem b = get_builtin("paper-3d-limit");
  BoundSystem F{b.sys, {}};
  const QuadraticCone& cone() const { return *b.cone; }
  const Box& box() const { return *b.box; }
};

LambdaSpec r2_lambda(const SystemDef& sys, double shift) {
  return LambdaSpec::parse("3*(x^2 + y^2 + z^2) + (" + std::to_string(shift) + ")", sys, {});
}

// G = F + delta (z, 0, -x): a rotation in the (x, z) plane that mixes the
// cone's negative and positive eigendirections.
FunctionField skew_perturbation(const VectorField& F, double delta) {
  return FunctionField(3, [&F, delta](const Vec& x, Vec& dx) {
    dx = F(x);
    dx[0] += delta * x[2];
    dx[2] -= delta * x[0];
  });
}

}  // namespace

TEST_CASE("cooperativity matrix at the origin") {
  Limit L;
  const Mat DF = L.F.jacobian(Vec::Zero(3));
  Mat expected_df(3, 3);
  expected_df << 1, -1, 0, 1, 1, 0, 0, 0, -1;
  CHECK((DF - expected_df).norm() == 0.0);
  const Mat M = cooperativity_matrix(L.cone().matrix(), DF, 0.0);
  CHECK((M + 2.0 * Mat::Identity(3, 3)).norm() < 1e-15);
  CHECK(max_eigenvalue(M) == doctest::Approx(-2.0));

  const auto rep = algebraic_certificate(L.F, L.cone(), Box::symmetric(vec({1, 1, 1})), 1,
                                         LambdaSpec::constant(0.0));
  REQUIRE(rep.points.size() == 1);
  CHECK(rep.points[0].xi.norm() == 0.0);
  CHECK(rep.points[0].max_eigenvalue == doctest::Approx(-2.0));
  CHECK(rep.pass);
}

TEST_CASE("lambda window of the limiting system") {
  Limit L;
  const Mat& P = L.cone().matrix();
  for (const Vec& xi : random_points(L.box(), 50, 4)) {
    const Mat DF = L.F.jacobian(xi);
    const double c = 3.0 * xi.squaredNorm();
    CHECK(max_eigenvalue(cooperativity_matrix(P, DF, c)) == doctest::Approx(-2.0).epsilon(1e-9));
    CHECK(max_eigenvalue(cooperativity_matrix(P, DF, c - 2.0)) >= -1e-6);
    CHECK(max_eigenvalue(cooperativity_matrix(P, DF, c + 2.0)) >= -1e-6);
    CHECK(max_eigenvalue(cooperativity_matrix(P, DF, c - 1.0)) < 0.0);
    CHECK(max_eigenvalue(cooperativity_matrix(P, DF, c + 1.0)) < 0.0);
    CHECK(lambda_centre(P, DF) == doctest::Approx(c).epsilon(1e-10));
  }

  const auto mid = algebraic_certificate(L.F, L.cone(), L.box(), 9, r2_lambda(L.b.sys, 0.0));
  CHECK(mid.points.size() == 729);
  CHECK(mid.pass);
  CHECK(mid.worst_margin <= -1.9);
  for (double shift : {-2.0, 2.0}) {
    const auto edge = algebraic_certificate(L.F, L.cone(), L.box(), 9, r2_lambda(L.b.sys, shift));
    CHECK_FALSE(edge.pass);
    for (const auto& p : edge.points) CHECK(p.max_eigenvalue >= -1e-6);
  }
}

TEST_CASE("auto lambda recovers the window centre") {
  Limit L;
  const auto rep = algebraic_certificate(L.F, L.cone(), L.box(), 5, LambdaSpec::automatic());
  CHECK(rep.pass);
  CHECK(rep.lambda_text == "auto");
  for (const auto& p : rep.points) {
    CHECK(p.lambda == doctest::Approx(3.0 * p.xi.squaredNorm()).epsilon(1e-6));
    CHECK(p.max_eigenvalue == doctest::Approx(-2.0).epsilon(1e-6));
  }
  // the scan only refines inside its bracket
  const auto [l, v] = auto_lambda(L.cone().matrix(), L.F.jacobian(vec({1, 2, 0.5})));
  CHECK(l == doctest::Approx(3.0 * 5.25).epsilon(1e-8));
  CHECK(v == doctest::Approx(-2.0).epsilon(1e-8));
}

TEST_CASE("algebraic certificate failure modes") {
  Limit L;
  const FunctionField zero(3, [](const Vec&, Vec& dx) { dx.setZero(3); },
                           [](const Vec&) { return Mat(Mat::Zero(3, 3)); });
  const auto rep = algebraic_certificate(zero, L.cone(), L.box(), 3, LambdaSpec::constant(1.0));
  CHECK_FALSE(rep.pass);
  CHECK(rep.failures == 27);
  CHECK(rep.worst_margin == doctest::Approx(1.0));

  CHECK_THROWS_AS(algebraic_certificate(L.F, L.cone(), L.box(), 0, LambdaSpec::automatic()),
                  PreconditionError);
  CHECK_THROWS_AS(algebraic_certificate(L.F, L.cone(), Box::symmetric(vec({1, 1})), 3,
                                        LambdaSpec::automatic()),
                  PreconditionError);
  CHECK_THROWS_AS(LambdaSpec::parse("3*q", L.b.sys, {}), ParseError);
}

TEST_CASE("scale equivariance of algebraic decisions") {
  Limit L;
  for (double shift : {0.0, -2.5, 1.0, 3.0}) {
    const auto a = algebraic_certificate(L.F, L.cone(), L.box(), 5, r2_lambda(L.b.sys, shift));
    const auto b = algebraic_certificate(L.F, L.cone().scaled(2.0), L.box(), 5, r2_lambda(L.b.sys, shift));
    REQUIRE(a.points.size() == b.points.size());
    for (std::size_t k = 0; k < a.points.size(); ++k) {
      CHECK(a.points[k].pass == b.points[k].pass);
      CHECK(b.points[k].max_eigenvalue == doctest::Approx(2.0 * a.points[k].max_eigenvalue));
    }
  }
}

TEST_CASE("dynamic certificate on the limiting system") {
  Limit L;
  const auto pairs = random_pairs(L.box(), 20, 2024);
  const std::vector<double> ts{0.1, 0.5, 1, 2, 5};
  const auto rep = dynamic_certificate(L.F, L.cone(), pairs, ts, 64, 5);
  CHECK(rep.pass);
  CHECK(rep.failures == 0);
  CHECK(rep.samples.size() == 100);
  CHECK(rep.directions == 64 + 16);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const double early = rep.samples[i * 5].worst_margin;
    const double late = rep.samples[i * 5 + 4].worst_margin;
    CHECK(late < early);
  }
  // algebraic and dynamic checks agree
  const auto alg = algebraic_certificate(L.F, L.cone(), L.box(), 9, r2_lambda(L.b.sys, 0.0));
  CHECK(alg.pass == rep.pass);

  DynamicOptions serial;
  serial.execution = Execution::Serial;
  const auto ser = dynamic_certificate(L.F, L.cone(), pairs, ts, 64, 5, serial);
  for (std::size_t k = 0; k < rep.samples.size(); ++k) CHECK(ser.samples[k].worst_margin == rep.samples[k].worst_margin);
}

TEST_CASE("dynamic certificate preconditions") {
  Limit L;
  const auto pairs = random_pairs(L.box(), 2, 1);
  CHECK_THROWS_AS(dynamic_certificate(L.F, L.cone(), pairs, {0.0, 1.0}, 8, 1), PreconditionError);
  CHECK_THROWS_AS(dynamic_certificate(L.F, L.cone(), pairs, {}, 8, 1), PreconditionError);
  CHECK_THROWS_AS(dynamic_certificate(L.F, L.cone(), {}, {1.0}, 8, 1), PreconditionError);

  const FunctionField grow(1, [](const Vec& x, Vec& dx) { dx = x; });
  const std::vector<PointPair> one{{vec({0.1}), vec({0.2})}};
  CHECK_THROWS_WITH_AS(dynamic_certificate(grow, L.cone(), one, {1.0}, 8, 1),
                       doctest::Contains("exceeds usable subspace"), PreconditionError);

  // U(t) = e^t I keeps boundary directions on the boundary
  const FunctionField ident(3, [](const Vec& x, Vec& dx) { dx = x; });
  CHECK_FALSE(dynamic_certificate(ident, L.cone(), pairs, {1.0}, 16, 1).pass);
}

TEST_CASE("eventual cooperativity") {
  Limit L;
  const auto pairs = random_pairs(L.box(), 6, 99);
  const std::vector<double> ts{0.1, 0.5, 1, 2, 5};

  const auto same = eventual_tstar(L.F, L.cone(), pairs, ts, 32, 4);
  REQUIRE(same.tstar);
  CHECK(*same.tstar == 0.1);

  const auto skew = skew_perturbation(L.F, 10.0);
  const auto bad = eventual_tstar(skew, L.cone(), pairs, ts, 32, 4, {}, &L.F, L.box());
  CHECK_FALSE(bad.tstar);
  CHECK_FALSE(bad.pass);
  CHECK(bad.failures > 0);
  REQUIRE(bad.perturbation_sup);
  CHECK(*bad.perturbation_sup > 10.0);

  // constant shifts leave DF (hence every chord matrix) unchanged
  const FunctionField shifted(3, [&](const Vec& x, Vec& dx) { dx = L.F(x) + Vec::Constant(3, 10.0); },
                              [&](const Vec& x) { return L.F.jacobian(x); });
  const auto sh = eventual_tstar(shifted, L.cone(), pairs, {0.1, 0.5}, 16, 4);
  REQUIRE(sh.tstar);

  const SlowFastSystem sf(get_builtin("paper-4d").sys, {{"eps", 0.05}});
  const auto restricted = slow_manifold_field(sf, 1);
  const auto small = std::vector<PointPair>(pairs.begin(), pairs.begin() + 3);
  const auto man = eventual_tstar(*restricted, L.cone(), small, ts, 16, 4, {}, &L.F, L.box());
  REQUIRE(man.tstar);
  CHECK(std::isfinite(*man.tstar));
  CHECK(*man.perturbation_sup > 0.0);
}

TEST_CASE("monotonicity check") {
  Limit L;
  const Vec p = vec({1, 0, 0}), q = vec({1.1, 0.05, 0});
  CHECK(L.cone().contains(q - p).stratum == ConeStratum::Interior);
  const auto res = monotonicity_check(L.F, L.cone(), {{p, q}}, {0.5, 1, 2});
  CHECK(res.pass);
  CHECK(res.checked == 3);
  CHECK(res.worst_normalized_q < -1e-6);

  const auto eq = monotonicity_check(L.F, L.cone(), {{p, p}}, {0.5, 1});
  CHECK(eq.skipped == 1);
  CHECK(eq.checked == 0);
  CHECK(eq.pass);

  CHECK_THROWS_WITH_AS(monotonicity_check(L.F, L.cone(), {{p, vec({1, 0, 0.5})}}, {1.0}),
                       doctest::Contains("not ordered"), PreconditionError);

  const auto pairs = random_ordered_pairs(L.cone(), Box::symmetric(vec({2, 2, 2})), 20, 0.05, 0.5, 8);
  for (const auto& [a, b] : pairs) CHECK(L.cone().contains(b - a).stratum == ConeStratum::Interior);
  MonotonicityOptions opts;
  opts.strict_after = 0.5;
  const auto many = monotonicity_check(L.F, L.cone(), pairs, {0.0, 0.1, 0.5, 1, 2, 4}, opts);
  CHECK(many.pass);
  CHECK(many.violations == 0);

  // an anti-cooperative field breaks the order
  const auto skew = skew_perturbation(L.F, 10.0);
  const auto broken = monotonicity_check(skew, L.cone(), pairs, {0.5, 1, 2}, opts);
  CHECK_FALSE(broken.pass);
  REQUIRE(broken.first_violation);
  CHECK(broken.first_violation->stratum != ConeStratum::Interior);
}

TEST_CASE("pseudo-order scan") {
  const QuadraticCone planar(Mat(vec({-1, 1}).asDiagonal()));
  const Trajectory two({0.0, 1.0}, {vec({1, 0}), vec({0, 1})});
  const auto hit = pseudo_order_scan(two, planar);
  REQUIRE(hit);
  CHECK(hit->first == 0.0);
  CHECK(hit->second == 1.0);

  const Trajectory still({0.0, 1.0, 2.0}, {vec({1, 1}), vec({1, 1}), vec({1, 1})});
  CHECK_FALSE(pseudo_order_scan(still, planar));
  CHECK_THROWS_AS(pseudo_order_scan(Trajectory({0.0}, {vec({1, 1})}), planar), PreconditionError);

  const BoundSystem circle(get_builtin("circle").sys, {});
  const auto ct = flow(circle, vec({1, 0}), 0.0, 6.0).resample(200);
  const auto c = pseudo_order_scan(ct, planar);
  REQUIRE(c);
  CHECK(planar.contains(ct.at(c->second) - ct.at(c->first)).stratum != ConeStratum::Exterior);

  Limit L;
  const auto lt = flow(L.F, vec({2, 2, 3}), 0.0, 30.0).resample(600);
  const auto found = pseudo_order_scan(lt, L.cone(), 3);
  REQUIRE(found);
  CHECK(found->first < found->second);
  CHECK(L.cone().contains(lt.at(found->second) - lt.at(found->first)).stratum != ConeStratum::Exterior);
}
