#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "coneflow/builtins.hpp"
#include "coneflow/config.hpp"
#include "support/random_ast.hpp"

#include <cmath>
#include <complex>
#include <random>

using namespace coneflow;

namespace {

Vec vec(std::initializer_list<double> d) {
  Vec v(static_cast<Eigen::Index>(d.size()));
  Eigen::Index i = 0;
  for (double x : d) v[i++] = x;
  return v;
}

double eval_text(const std::string& text, const NameScope& scope, std::vector<double> vars,
                 std::vector<double> params = {}) {
  const Expr e = parse_expression(text, scope);
  return e.evaluate<double>(std::span<const double>(vars), std::span<const double>(params));
}

// Limiting system written out by hand; independent of the parser.
Vec limit_field(const Vec& s) {
  const double x = s[0], y = s[1], z = s[2];
  const double r2 = x * x + y * y;
  return vec({x - y - 1.5 * x * z * z - 0.5 * x * r2, x + y - 1.5 * y * z * z - 0.5 * y * r2,
              -z - 0.5 * z * z * z - 1.5 * z * r2});
}

}  // namespace

TEST_CASE("parse and evaluate simple expressions") {
  const NameScope xyz{{"x", "y", "z"}, {}};
  CHECK(eval_text("x - y - 1.5*x*z^2", xyz, {1, 1, 1}) == doctest::Approx(-1.5));
  CHECK(eval_text("2^3^2", xyz, {0, 0, 0}) == 512.0);
  CHECK(eval_text("-x^2", xyz, {3, 0, 0}) == -9.0);
  CHECK(eval_text("8/4/2", xyz, {0, 0, 0}) == 1.0);
  CHECK(eval_text("10 - 4 - 3", xyz, {0, 0, 0}) == 3.0);
  CHECK(eval_text("x^-2", xyz, {2, 0, 0}) == 0.25);
  CHECK(eval_text("2.5e-1*x + 1E2", xyz, {4, 0, 0}) == 101.0);
  CHECK(eval_text("exp(0) + cos(0) + sin(0)", xyz, {0, 0, 0}) == 2.0);
  CHECK(eval_text("(-2)^3", xyz, {0, 0, 0}) == -8.0);
}

TEST_CASE("parse errors carry line and column") {
  const NameScope xy{{"x", "y"}, {}};
  try {
    parse_expression("x + (y", xy);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("parenthesis") != std::string::npos);
    CHECK(e.line() == 1);
    CHECK(e.column() == 5);
  }
  try {
    parse_expression("x + q", xy, 3, 10);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("undeclared identifier 'q'") != std::string::npos);
    CHECK(e.line() == 3);
    CHECK(e.column() == 14);
  }
  CHECK_THROWS_AS(parse_expression("x +", xy), ParseError);
  CHECK_THROWS_AS(parse_expression("x y", xy), ParseError);
  CHECK_THROWS_AS(parse_expression("x)", xy), ParseError);
  CHECK_THROWS_AS(parse_expression("", xy), ParseError);
  CHECK_THROWS_AS(parse_expression("tan(x)", xy), ParseError);
  CHECK_THROWS_AS(parse_expression("x $ y", xy), ParseError);
}

TEST_CASE("full first component of the slow-fast example") {
  const NameScope s{{"x", "y", "z", "w"}, {"eps"}};
  const double v = eval_text("x - y - 1.5*x*z^2 - 0.5*x*(x^2+y^2) + eps*x*w", s, {2, 2, 3, 12}, {0.05});
  // 2 - 2 - 27 - 8 + 1.2
  CHECK(v == doctest::Approx(-33.8).epsilon(1e-14));
}

TEST_CASE("evaluation domain errors") {
  const NameScope xy{{"x", "y"}, {"a"}};
  CHECK_THROWS_AS(eval_text("x/y", xy, {1, 0}, {1}), EvalError);
  CHECK_THROWS_AS(eval_text("x^0.5", xy, {-1, 0}, {1}), EvalError);
  CHECK_THROWS_AS(eval_text("x^a", xy, {0, 0}, {0.5}), EvalError);
  CHECK(eval_text("x^a", xy, {-2, 0}, {2}) == 4.0);  // integral exponent: repeated multiplication
  CHECK(eval_text("x^0.5", xy, {4, 0}, {1}) == doctest::Approx(2.0));
  CHECK_THROWS_AS(eval_text("x^-1", xy, {0, 0}, {1}), EvalError);

  const SystemDef sys = parse_system("states = x\nparams = a\nx' = a*x\n");
  CHECK_THROWS_AS(eval_field(sys, vec({1}), {}), PreconditionError);
  const SystemDef blow = parse_system("states = x\nparams =\nx' = exp(x)\n");
  CHECK_THROWS_AS(eval_field(blow, vec({1000}), {}), EvalError);
}

TEST_CASE("system parsing") {
  const SystemDef sys = parse_system(R"(# comment line
states = x, y
params = k
x' = -k*y   # trailing comment
y' = x
)");
  CHECK(sys.dim() == 2);
  CHECK(sys.params == std::vector<std::string>{"k"});
  const Vec f = eval_field(sys, vec({1, 2}), {{"k", 3}});
  CHECK(f[0] == -6.0);
  CHECK(f[1] == 1.0);

  CHECK_THROWS_AS(parse_system("states = x, y\nparams =\nx' = y\n"), ParseError);  // arity
  CHECK_THROWS_AS(parse_system("states = x\nparams =\nx' = y\nx' = 1\n"), ParseError);
  CHECK_THROWS_AS(parse_system("states = x\nparams =\nz' = 1\n"), ParseError);
  CHECK_THROWS_AS(parse_system("params =\nx' = 1\n"), ParseError);
  CHECK_THROWS_AS(parse_system("states = x, y\nfast = y\nx' = 1\ny' = 1\n"), ParseError);  // no eps
  try {
    parse_system("states = x\nparams =\n\nx' = 1 + (x\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 4);
    CHECK(e.column() == 10);
  }
}

TEST_CASE("eval_field on builtins") {
  const auto lim = get_builtin("paper-3d-limit");
  CHECK(eval_field(lim.sys, vec({0, 0, 0}), {}).norm() == 0.0);
  const auto circle = get_builtin("circle");
  const Vec c = eval_field(circle.sys, vec({1, 0}), {});
  CHECK(c[0] == 0.0);
  CHECK(c[1] == 1.0);
  const Vec p = vec({std::sqrt(2.0), 0, 0});
  const Vec f = eval_field(lim.sys, p, {});
  const Vec oracle = limit_field(p);
  CHECK(f[0] == doctest::Approx(0.0).epsilon(1e-15).scale(1.0));
  CHECK(std::abs(f[0]) < 1e-15);
  CHECK(f[1] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  CHECK(f[2] == 0.0);
  CHECK((f - oracle).norm() < 1e-15);
}

TEST_CASE("jacobian is exact forward-mode") {
  const auto circle = get_builtin("circle");
  for (const Vec& s : {vec({0, 0}), vec({3, -7})}) {
    const Mat J = jacobian(circle.sys, s, {});
    CHECK(J(0, 0) == 0.0);
    CHECK(J(0, 1) == -1.0);
    CHECK(J(1, 0) == 1.0);
    CHECK(J(1, 1) == 0.0);
  }
  const auto lim = get_builtin("paper-3d-limit");
  const Mat J0 = jacobian(lim.sys, vec({0, 0, 0}), {});
  Mat expected(3, 3);
  expected << 1, -1, 0, 1, 1, 0, 0, 0, -1;
  CHECK((J0 - expected).norm() == 0.0);

  // Central-difference oracle on the hand-written field.
  const double h = 1e-5;
  Mat fd(3, 3);
  for (int j = 0; j < 3; ++j) {
    Vec e = Vec::Zero(3);
    e[j] = h;
    fd.col(j) = (limit_field(e) - limit_field(-e)) / (2 * h);
  }
  CHECK((J0 - fd).norm() < 1e-9);

  Eigen::EigenSolver<Mat> es(J0);
  std::vector<std::complex<double>> ev(es.eigenvalues().begin(), es.eigenvalues().end());
  std::sort(ev.begin(), ev.end(), [](auto a, auto b) { return a.real() < b.real() || (a.real() == b.real() && a.imag() < b.imag()); });
  CHECK(std::abs(ev[0] - std::complex<double>(-1, 0)) < 1e-12);
  CHECK(std::abs(ev[1] - std::complex<double>(1, -1)) < 1e-12);
  CHECK(std::abs(ev[2] - std::complex<double>(1, 1)) < 1e-12);
}

TEST_CASE("builtin registry") {
  const auto p4 = get_builtin("paper-4d");
  CHECK(p4.sys.dim() == 4);
  CHECK(p4.sys.params == std::vector<std::string>{"eps"});
  CHECK(p4.sys.fast_states == std::vector<std::string>{"w"});
  REQUIRE(p4.box.has_value());
  CHECK(p4.box->hi == vec({4, 4, 4, 16}));
  CHECK(p4.box->lo == vec({-4, -4, -4, -16}));
  REQUIRE(p4.cone.has_value());
  CHECK(p4.cone->rank() == 2);
  const auto circle = get_builtin("circle");
  CHECK(circle.sys.dim() == 2);
  CHECK_FALSE(circle.cone.has_value());
  CHECK_THROWS_AS(get_builtin("nope"), PreconditionError);
}

TEST_CASE("property: paper-4d at eps = 0 on w = x+y+z equals the limiting system") {
  const auto p4 = get_builtin("paper-4d");
  const auto lim = get_builtin("paper-3d-limit");
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-4.0, 4.0);
  for (int k = 0; k < 500; ++k) {
    const Vec s = vec({u(rng), u(rng), u(rng)});
    Vec full(4);
    full << s, s.sum();
    const Vec f4 = eval_field(p4.sys, full, {{"eps", 0.0}});
    const Vec f3 = eval_field(lim.sys, s, {});
    CHECK((f4.head(3) - f3).norm() <= 1e-12 * (1.0 + f3.norm()));
    CHECK(f4[3] == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
  }
}

TEST_CASE("property: forward-mode Jacobian matches central differences") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  int checked = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + trial % 3;
    testing::RandomAst gen(1000 + static_cast<std::uint64_t>(trial), n, 1, true);
    SystemDef sys;
    for (int i = 0; i < n; ++i) sys.states.push_back("s" + std::to_string(i));
    sys.params = {"a"};
    for (int i = 0; i < n; ++i) sys.components.push_back(gen.make(4));
    const ParamMap pm{{"a", 0.7}};
    const BoundSystem bs(sys, pm);
    Vec x(n);
    for (int i = 0; i < n; ++i) x[i] = u(rng);
    const Mat J = bs.jacobian(x);
    const double h = 1e-5;
    for (int j = 0; j < n; ++j) {
      Vec xp = x, xm = x;
      xp[j] += h;
      xm[j] -= h;
      const Vec col = (bs(xp) - bs(xm)) / (2 * h);
      for (int i = 0; i < n; ++i) {
        CHECK(std::abs(J(i, j) - col[i]) <= 1e-6 * std::max(1.0, std::abs(J(i, j))));
      }
    }
    ++checked;
  }
  CHECK(checked == 100);
}

TEST_CASE("property: printed expressions re-parse to identical trees") {
  const NameScope scope{{"x", "y", "z"}, {"a", "eps"}};
  for (int trial = 0; trial < 300; ++trial) {
    testing::RandomAst gen(static_cast<std::uint64_t>(trial), 3, 2);
    const Expr e = gen.make(6);
    const std::string text = to_string(e, scope);
    const Expr back = parse_expression(text, scope);
    INFO(text);
    CHECK(structurally_equal(e, back));
  }
}

TEST_CASE("systems round-trip through the printer") {
  const auto p4 = get_builtin("paper-4d");
  const SystemDef back = parse_system(to_string(p4.sys));
  CHECK(structurally_equal(p4.sys, back));
}

TEST_CASE("polynomial degree analysis") {
  const NameScope s{{"x", "y"}, {"eps"}};
  const std::vector<bool> fast{false, true};
  CHECK(polynomial_degree(parse_expression("-y + x + eps*x*x^3", s), fast) == 1);
  CHECK(polynomial_degree(parse_expression("y^2 + x", s), fast) == 2);
  CHECK(polynomial_degree(parse_expression("x/y", s), fast) < 0);
  CHECK(polynomial_degree(parse_expression("y/x", s), fast) == 1);
  CHECK(polynomial_degree(parse_expression("sin(y)", s), fast) < 0);
  CHECK(polynomial_degree(parse_expression("sin(x)*y", s), fast) == 1);
}

TEST_CASE("config files") {
  const ModelConfig cfg = parse_config(R"(
[system]
states = x, y, z
params = k
x' = x - y - 1.5*x*z^2 - 0.5*x*(x^2 + y^2)
y' = x + y - 1.5*y*z^2 - 0.5*y*(x^2 + y^2)
z' = -k*z - 0.5*z^3 - 1.5*z*(x^2 + y^2)

[params]
k = 1

[cone]
P = -1, 0, 0,  0, -1, 0,  0, 0, 1
v_plus = 0, 0, 1

[domain]
half_widths = 4, 4, 4

[solver]
rel_tol = 1e-10

[sweep]
n = 50
seed = 9
)");
  CHECK(cfg.sys.dim() == 3);
  CHECK(cfg.params.at("k") == 1.0);
  REQUIRE(cfg.cone.has_value());
  CHECK(cfg.cone->rank() == 2);
  CHECK(cfg.box->hi == vec({4, 4, 4}));
  CHECK(cfg.solver.rel_tol == 1e-10);
  CHECK(cfg.solver.abs_tol == 1e-12);
  CHECK(cfg.sweep.n == 50);
  CHECK(cfg.sweep.seed == 9);

  const ModelConfig b = parse_config("[system]\nbuiltin = paper-4d\n[params]\neps = 0.02\n");
  CHECK(b.sys.dim() == 4);
  CHECK(b.params.at("eps") == 0.02);
  CHECK(b.box.has_value());
  CHECK(b.eps0 == 0.1);
  CHECK(b.delta0 == 0.5);
  const ModelConfig c = parse_config("[system]\nbuiltin = paper-4d\n[slowfast]\neps0 = 0.2\ndelta0 = 0.25\n");
  CHECK(c.eps0 == 0.2);
  CHECK(c.delta0 == 0.25);

  try {
    parse_config("[system]\nstates = x\nparams =\nx' = (x\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 4);
  }
  CHECK_THROWS_AS(parse_config("[system]\nbuiltin = nope\n"), ParseError);
  CHECK_THROWS_AS(parse_config("[bogus]\n"), ParseError);
  CHECK_THROWS_AS(parse_config("[system]\nbuiltin = circle\n[cone]\nP = 1, 2, 3\n"), ParseError);
  CHECK_THROWS_AS(parse_config("[system]\nbuiltin = circle\n[cone]\nP = -1, 0, 0, 1\nv_plus = 1, 0\n"),
                  ParseError);
  CHECK_THROWS_AS(parse_config("[system]\nbuiltin = circle\n[params]\nq = 1\n"), ParseError);
}
