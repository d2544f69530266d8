#include "coneflow/field.hpp"

#include <algorithm>
#include <cmath>

namespace coneflow {

Mat VectorField::jacobian(const Vec& x) const { return finite_difference_jacobian(*this, x); }

Mat finite_difference_jacobian(const VectorField& f, const Vec& x, double rel_step) {
  const auto n = static_cast<Eigen::Index>(f.dim());
  require_dim(x, n, "jacobian");
  Mat J(n, n);
  Vec xp = x;
  Vec fp(n);
  Vec fm(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double h = rel_step * std::max(1.0, std::abs(x[j]));
    xp[j] = x[j] + h;
    f.eval(xp, fp);
    xp[j] = x[j] - h;
    f.eval(xp, fm);
    xp[j] = x[j];
    J.col(j) = (fp - fm) / (2.0 * h);
  }
  return J;
}

}  // namespace coneflow
