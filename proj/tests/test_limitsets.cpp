#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "coneflow/builtins.hpp"
#include "coneflow/limitsets.hpp"
#include "coneflow/slowfast.hpp"

#include <cmath>
#include <complex>

using namespace coneflow;

namespace {

Vec vec(std::initializer_list<double> d) {
  Vec v(static_cast<Eigen::Index>(d.size()));
  Eigen::Index i = 0;
  for (double x : d) v[i++] = x;
  return v;
}

const double kPi = std::acos(-1.0);

struct Limit {
  BuiltinSystem b = get_builtin("paper-3d-limit");
  BoundSystem F{b.sys, {}};
};

}  // namespace

TEST_CASE("equilibria") {
  Limit L;
  const auto eqs = find_equilibria(L.F, *L.b.box, 5);
  REQUIRE(eqs.size() == 1);
  CHECK(eqs[0].point.norm() < 1e-12);
  CHECK(eqs[0].residual <= 1e-11);
  CHECK(L.F(eqs[0].point).norm() <= 1e-11);
  std::vector<std::complex<double>> ev(eqs[0].eigenvalues.begin(), eqs[0].eigenvalues.end());
  std::sort(ev.begin(), ev.end(), [](auto a, auto b) {
    return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
  });
  CHECK(std::abs(ev[0] - std::complex<double>(-1, 0)) < 1e-8);
  CHECK(std::abs(ev[1] - std::complex<double>(1, -1)) < 1e-8);
  CHECK(std::abs(ev[2] - std::complex<double>(1, 1)) < 1e-8);

  const BoundSystem logistic(parse_system("states = x\nparams =\nx' = x*(1 - x)\n"), {});
  const auto roots = find_equilibria(logistic, Box::symmetric(vec({2})), 9);
  REQUIRE(roots.size() == 2);
  std::vector<double> xs{roots[0].point[0], roots[1].point[0]};
  std::sort(xs.begin(), xs.end());
  CHECK(xs[0] == doctest::Approx(0.0));
  CHECK(xs[1] == doctest::Approx(1.0));

  EquilibriumOptions serial;
  serial.execution = Execution::Serial;
  CHECK(find_equilibria(logistic, Box::symmetric(vec({2})), 9, serial).size() == 2);
  CHECK_THROWS_AS(find_equilibria(logistic, Box{vec({1}), vec({-1})}, 3), PreconditionError);
}

TEST_CASE("Poincare return") {
  const BoundSystem circle(get_builtin("circle").sys, {});
  const auto r = poincare_return(circle, vec({1, 0}), vec({0, 1}), vec({1, 0}));
  CHECK(std::abs(r.time - 2.0 * kPi) <= 1e-9);
  CHECK((r.point - vec({1, 0})).norm() <= 1e-9);

  // default direction is F(anchor)
  const auto r2 = poincare_return(circle, vec({0, 1}), Vec(), vec({0, 1}));
  CHECK(std::abs(r2.time - 2.0 * kPi) <= 1e-9);

  const BoundSystem decay(parse_system("states = x, y\nparams =\nx' = -x\ny' = -y\n"), {});
  PoincareOptions shortrun;
  shortrun.t_max = 20.0;
  CHECK_THROWS_WITH_AS(poincare_return(decay, vec({1, 1}), Vec(), vec({1, 1}), shortrun),
                       doctest::Contains("no section crossing"), ConvergenceError);
  CHECK_THROWS_AS(poincare_return(circle, vec({1, 0}), vec({1, 0}), vec({1, 0})), PreconditionError);

  Limit L;
  const Vec near = vec({std::sqrt(2.0) + 1e-3, 0, 1e-3});
  const auto r3 = poincare_return(L.F, near, Vec(), near);
  CHECK(std::abs(r3.time - 2.0 * kPi) < 1e-2);
}

TEST_CASE("periodic orbit refinement on the limiting system") {
  Limit L;
  const auto po = refine_periodic_orbit(L.F, vec({1.3, 0.4, 0.05}), 6.0);
  CHECK(po.residual <= 1e-9);
  CHECK(std::abs(po.period - 2.0 * kPi) <= 1e-6);
  const Vec& a = po.anchor;
  CHECK(std::abs(std::hypot(a[0], a[1]) - std::sqrt(2.0)) <= 1e-6);
  CHECK(std::abs(a[2]) <= 1e-6);
  REQUIRE(po.floquet.size() == 3);
  CHECK(std::abs(po.floquet[0] - 1.0) <= 1e-4);
  CHECK(std::abs(po.floquet[1].real() - std::exp(-4.0 * kPi)) <= 1e-4 * std::exp(-4.0 * kPi));
  CHECK(std::abs(po.floquet[2] - std::exp(-8.0 * kPi)) <= 1e-9);
  CHECK(po.hyperbolic);
  CHECK(count_unit_multipliers(po.floquet, 1e-4) == 1);
  CHECK(po.orbit.t_back() == doctest::Approx(po.period));

  // the anchor stays on the section through the guess
  const Vec F0 = L.F(vec({1.3, 0.4, 0.05}));
  CHECK(std::abs(F0.dot(po.anchor - vec({1.3, 0.4, 0.05}))) < 1e-8 * F0.norm());

  CHECK_THROWS_AS(refine_periodic_orbit(L.F, vec({0, 0, 3}), 6.0), ConvergenceError);
  CHECK_THROWS_AS(refine_periodic_orbit(L.F, vec({0, 0, 0}), 6.0), ConvergenceError);
  CHECK_THROWS_AS(refine_periodic_orbit(L.F, vec({1, 0, 0}), -1.0), PreconditionError);
}

TEST_CASE("circle is a non-hyperbolic cycle") {
  const BoundSystem circle(get_builtin("circle").sys, {});
  const auto po = refine_periodic_orbit(circle, vec({1, 0}), 2.0 * kPi + 1e-7);
  CHECK(std::abs(po.period - 2.0 * kPi) < 1e-8);
  CHECK_THROWS_WITH_AS(refine_periodic_orbit(circle, vec({1, 0}), 6.0), doctest::Contains("equilibrium"),
                       ConvergenceError);
  CHECK(count_unit_multipliers(po.floquet, 1e-4) == 2);
  CHECK_FALSE(po.hyperbolic);

  const auto c = classify_omega(circle, vec({1, 0}));
  CHECK(c.kind == OmegaKind::Unresolved);
  CHECK(c.reason.find("non-hyperbolic") != std::string::npos);
  CHECK(c.diagnostics.count("period") == 1);
}

TEST_CASE("omega-limit classification of the limiting system") {
  Limit L;
  const auto eq = classify_omega(L.F, vec({0, 0, 1}));
  REQUIRE(eq.kind == OmegaKind::Equilibrium);
  CHECK(eq.equilibrium->point.norm() < 1e-9);
  CHECK(L.F(eq.equilibrium->point).norm() <= 1e-11);

  const auto c = classify_omega(L.F, vec({2, 2, 3}));
  REQUIRE(c.kind == OmegaKind::ClosedOrbit);
  const auto& po = *c.orbit;
  CHECK(std::abs(po.period - 2.0 * kPi) <= 1e-3);
  CHECK(std::abs(po.period - c.diagnostics.at("raw_period")) <= 0.02 * po.period);
  const Trajectory sampled = po.orbit.resample(200);
  for (const Vec& s : sampled.states()) {
    CHECK(std::abs(s[0] * s[0] + s[1] * s[1] - 2.0) <= 1e-4);
    CHECK(std::abs(s[2]) <= 1e-4);
  }

  ClassifyOptions guarded;
  guarded.known_equilibria = {po.anchor};
  const auto g = classify_omega(L.F, vec({2, 2, 3}), guarded);
  CHECK(g.kind == OmegaKind::Unresolved);
  CHECK(g.reason.find("equilibrium") != std::string::npos);

  ClassifyOptions boxed;
  boxed.box = Box::symmetric(vec({0.5, 0.5, 0.5}));
  CHECK(classify_omega(L.F, vec({0.1, 0.1, 0.1}), boxed).kind == OmegaKind::Unresolved);

  const BoundSystem decay(parse_system("states = x, y\nparams =\nx' = -0.01*x\ny' = -0.01*y\n"), {});
  const auto slow = classify_omega(decay, vec({1, 1}));
  CHECK(slow.kind == OmegaKind::Unresolved);
  CHECK(slow.reason.find("no near-recurrence") != std::string::npos);
  CHECK(slow.diagnostics.count("speed_at_reference") == 1);
}

TEST_CASE("slow-fast classification") {
  const SlowFastSystem sf(get_builtin("paper-4d").sys, {{"eps", 0.05}});
  const auto opts = slow_fast_classify_options(sf);
  CHECK(opts.integrator.abs_tol_vec[3] == doctest::Approx(0.05 * 1e-14));
  const auto c = classify_omega(*sf.slow_time_field(), vec({2, 2, 3, 12}), opts);
  REQUIRE(c.kind == OmegaKind::ClosedOrbit);
  CHECK(std::abs(c.orbit->period - 2.0 * kPi) <= 0.2);
  std::vector<Vec> orbit, ref;
  const Trajectory sampled = c.orbit->orbit.resample(400);
  for (const Vec& s : sampled.states()) orbit.push_back(s);
  for (int k = 0; k < 400; ++k) {
    const double th = 2.0 * kPi * k / 400.0, x = std::sqrt(2.0) * std::cos(th), y = std::sqrt(2.0) * std::sin(th);
    ref.push_back(vec({x, y, 0, x + y}));
  }
  CHECK(hausdorff_distance(orbit, ref) <= 0.2);
  CHECK(c.orbit->hyperbolic);
}

TEST_CASE("genericity sweep") {
  Limit L;
  SweepOptions forced;
  forced.forced_samples = {Vec::Zero(3)};
  const auto one = genericity_sweep(L.F, *L.b.box, 1, 42, forced);
  CHECK(one.equilibrium == 1);
  CHECK(one.n == 1);

  const auto par = genericity_sweep(L.F, *L.b.box, 24, 42);
  SweepOptions serial;
  serial.execution = Execution::Serial;
  const auto ser = genericity_sweep(L.F, *L.b.box, 24, 42, serial);
  CHECK(par.closed_orbit == ser.closed_orbit);
  CHECK(par.equilibrium == ser.equilibrium);
  CHECK(par.unresolved == ser.unresolved);
  for (std::size_t i = 0; i < par.entries.size(); ++i) {
    CHECK(par.entries[i].ic == ser.entries[i].ic);
    CHECK(par.entries[i].kind == ser.entries[i].kind);
    CHECK(par.entries[i].period == ser.entries[i].period);
  }
  CHECK(par.closed_orbit + par.equilibrium + par.unresolved == 24);
  CHECK(par.closed_fraction() >= 0.95);
  REQUIRE(par.equilibria.size() == 1);
  CHECK(par.exemplars.at(OmegaKind::ClosedOrbit).size() == 3);

  set_parallel_threads(3);
  const auto three = genericity_sweep(L.F, *L.b.box, 24, 42);
  set_parallel_threads(0);
  CHECK(three.closed_orbit == par.closed_orbit);

  // every ClosedOrbit anchor lies on the same cycle
  for (const auto& e : par.entries) {
    if (e.kind != OmegaKind::ClosedOrbit) continue;
    CHECK(std::abs(std::hypot(e.point[0], e.point[1]) - std::sqrt(2.0)) <= 1e-4);
  }
  CHECK_THROWS_AS(genericity_sweep(L.F, *L.b.box, 0, 42), PreconditionError);
}

TEST_CASE("Hausdorff distance") {
  const std::vector<Vec> a{vec({0, 0}), vec({1, 0})};
  const std::vector<Vec> b{vec({0, 0}), vec({1, 0}), vec({3, 0})};
  CHECK(hausdorff_distance(a, b) == doctest::Approx(2.0));
  CHECK(hausdorff_distance(a, a) == 0.0);
  CHECK_THROWS_AS(hausdorff_distance({}, a), PreconditionError);
}

TEST_CASE("paper-4d trajectory settles on the slow manifold and a closed curve") {
  const SlowFastSystem sf(get_builtin("paper-4d").sys, {{"eps", 0.05}});
  const Vec ic = vec({2, 2, 3, 12});
  const Trajectory dense = flow(*sf.slow_time_field(), ic, 0.0, 100.0, sf.scaled_options({}));
  const Trajectory tr = dense.resample(5001);
  double worst = 0.0;
  for (std::size_t i = 0; i < tr.size(); ++i) {
    if (tr.times()[i] <= 1.0) continue;
    const Vec& s = tr.states()[i];
    worst = std::max(worst, std::abs(s[3] - (s[0] + s[1] + s[2])));
  }
  CHECK(worst <= 0.2);
  // the tail repeats after one period (the angular speed is exactly 1)
  double drift = 0.0;
  for (double t = 80.0; t <= 100.0; t += 0.25) drift = std::max(drift, (dense.at(t) - dense.at(t - 2.0 * kPi)).norm());
  CHECK(drift <= 1e-6);
}
