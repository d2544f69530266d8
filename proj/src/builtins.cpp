#include "coneflow/builtins.hpp"

namespace coneflow {

namespace {

constexpr const char* kPaper4d = R"(states = x, y, z, w
params = eps
fast = w
eps_param = eps
x' = x - y - 1.5*x*z^2 - 0.5*x*(x^2 + y^2) + eps*x*w
y' = x + y - 1.5*y*z^2 - 0.5*y*(x^2 + y^2) + eps*y*w
z' = -z - 0.5*z^3 - 1.5*z*(x^2 + y^2) + eps*z*w
w' = -w + x + y + z
)";

constexpr const char* kPaper3dLimit = R"(states = x, y, z
params =
x' = x - y - 1.5*x*z^2 - 0.5*x*(x^2 + y^2)
y' = x + y - 1.5*y*z^2 - 0.5*y*(x^2 + y^2)
z' = -z - 0.5*z^3 - 1.5*z*(x^2 + y^2)
)";

constexpr const char* kCircle = R"(states = x, y
params =
x' = -y
y' = x
)";

QuadraticCone paper_cone() {
  Mat P = Mat::Zero(3, 3);
  P.diagonal() << -1.0, -1.0, 1.0;
  return QuadraticCone(P);
}

Vec vec(std::initializer_list<double> v) {
  Vec out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

}  // namespace

std::vector<std::string> builtin_names() { return {"paper-4d", "paper-3d-limit", "circle"}; }

BuiltinSystem get_builtin(const std::string& name) {
  BuiltinSystem b;
  b.name = name;
  if (name == "paper-4d") {
    b.description = "slow-fast system with rank-2 cone; fast variable w";
    b.sys = parse_system(kPaper4d);
    b.default_params = {{"eps", 0.05}};
    b.cone = paper_cone();
    b.v_plus = vec({0.0, 0.0, 1.0});
    b.box = Box::symmetric(vec({4.0, 4.0, 4.0, 16.0}));
  } else if (name == "paper-3d-limit") {
    b.description = "eps = 0 limiting system on the critical manifold w = x + y + z";
    b.sys = parse_system(kPaper3dLimit);
    b.cone = paper_cone();
    b.v_plus = vec({0.0, 0.0, 1.0});
    b.box = Box::symmetric(vec({4.0, 4.0, 4.0}));
  } else if (name == "circle") {
    b.description = "harmonic rotation x' = -y, y' = x";
    b.sys = parse_system(kCircle);
    b.box = Box::symmetric(vec({2.0, 2.0}));
  } else {
    throw PreconditionError("unknown builtin system '" + name + "'");
  }
  return b;
}

}  // namespace coneflow
