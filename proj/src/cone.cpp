#include "coneflow/cone.hpp"

#include <cmath>
#include <random>

namespace coneflow {

const char* to_string(ConeStratum s) {
  switch (s) {
    case ConeStratum::Interior: return "interior";
    case ConeStratum::Boundary: return "boundary";
    case ConeStratum::Exterior: return "exterior";
  }
  return "?";
}

QuadraticCone::QuadraticCone(Mat P, double tol_sym, double tol_zero)
    : P_(std::move(P)), tol_sym_(tol_sym) {
  if (P_.rows() == 0 || P_.rows() != P_.cols()) {
    throw DimensionError("cone matrix must be square and nonempty");
  }
  const double asym = (P_ - P_.transpose()).cwiseAbs().maxCoeff();
  if (asym > tol_sym_) {
    throw PreconditionError("cone matrix is not symmetric (max |P - P^T| = " +
                            std::to_string(asym) + ")");
  }
  P_ = 0.5 * (P_ + P_.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(P_);
  evals_ = es.eigenvalues();
  evecs_ = es.eigenvectors();
  const double norm = evals_.cwiseAbs().maxCoeff();
  tol_zero_ = tol_zero < 0.0 ? 1e-9 * norm : tol_zero;
  for (Eigen::Index i = 0; i < evals_.size(); ++i) {
    if (std::abs(evals_[i]) <= tol_zero_) {
      throw PreconditionError("degenerate cone form: eigenvalue " + std::to_string(evals_[i]) +
                              " within tolerance of zero");
    }
    if (evals_[i] < 0.0) ++rank_;
  }
}

double QuadraticCone::quadratic_form(const Vec& xi) const {
  require_dim(xi, P_.rows(), "quadratic_form");
  return xi.dot(P_ * xi);
}

ConePosition QuadraticCone::contains(const Vec& xi, double margin) const {
  if (margin < 0.0) throw PreconditionError("contains: margin must be nonnegative");
  const double q = quadratic_form(xi);
  const double scale = margin * xi.squaredNorm();
  if (q < -scale) return {ConeStratum::Interior, q};
  if (q > scale) return {ConeStratum::Exterior, q};
  return {ConeStratum::Boundary, q};
}

void QuadraticCone::validate_positive_eigenvector(const Vec& v) const {
  require_dim(v, P_.rows(), "v_plus");
  const double vv = v.squaredNorm();
  if (vv == 0.0) throw PreconditionError("v_plus must be nonzero");
  const Vec Pv = P_ * v;
  const double rayleigh = v.dot(Pv) / vv;
  const double scale = evals_.cwiseAbs().maxCoeff();
  if ((Pv - rayleigh * v).norm() > 1e-9 * scale * std::sqrt(vv)) {
    throw PreconditionError("v_plus is not an eigenvector of P");
  }
  if (rayleigh <= tol_zero_) {
    throw PreconditionError("v_plus belongs to a non-positive eigenvalue of P");
  }
}

bool QuadraticCone::competitive_contains(const Vec& v_plus, const Vec& xi) const {
  validate_positive_eigenvector(v_plus);
  return quadratic_form(xi) >= 0.0 && xi.dot(v_plus) >= 0.0;
}

QuadraticCone QuadraticCone::scaled(double scale) const {
  if (!(scale > 0.0)) throw PreconditionError("cone scale must be positive");
  return QuadraticCone(scale * P_, tol_sym_ * scale);
}

std::vector<Vec> QuadraticCone::sample_directions(std::size_t count, ConeStratum stratum,
                                                  std::uint64_t seed) const {
  if (count == 0) throw PreconditionError("sample_directions: count must be positive");
  const Eigen::Index n = P_.rows();
  const int k = rank_;
  if (stratum == ConeStratum::Exterior) {
    throw PreconditionError("sample_directions: only boundary or interior strata are supported");
  }
  if (stratum == ConeStratum::Interior && k == 0) {
    throw PreconditionError("cone of rank 0 has no interior directions");
  }
  if (stratum == ConeStratum::Boundary && (k == 0 || k == n)) {
    throw PreconditionError("cone of rank " + std::to_string(k) +
                            " has no nonzero boundary directions");
  }

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 0.9);
  auto gaussian = [&] {
    Vec v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = normal(rng);
    return v;
  };

  std::vector<Vec> out;
  out.reserve(count);
  // Eigenvalues are sorted ascending, so the first k eigenvectors span the
  // negative eigenspace.
  const Mat neg = evecs_.leftCols(k);
  const Mat pos = evecs_.rightCols(n - k);
  while (out.size() < count) {
    if (stratum == ConeStratum::Interior) {
      Vec a = neg * Eigen::VectorXd(gaussian().head(k));
      if (a.norm() < 1e-8) continue;
      a.normalize();
      Vec xi = a;
      if (n > k) {
        Vec b = pos * Eigen::VectorXd(gaussian().head(n - k));
        if (b.norm() < 1e-8) continue;
        const double qa = a.dot(P_ * a);
        const double qb = b.dot(P_ * b);
        xi = a + unif(rng) * std::sqrt(-qa / qb) * b;
      }
      out.push_back(xi.normalized());
      continue;
    }
    // Boundary: start on the sphere and Newton-project onto q = 0 along P xi.
    Vec xi = gaussian();
    if (xi.norm() < 1e-8) continue;
    xi.normalize();
    bool ok = false;
    for (int it = 0; it < 60; ++it) {
      const Vec g = P_ * xi;
      const double q = xi.dot(g);
      if (std::abs(q) <= 1e-14) {
        ok = true;
        break;
      }
      xi -= (q / (2.0 * g.squaredNorm())) * g;
      xi.normalize();
    }
    if (ok && std::abs(quadratic_form(xi)) <= 1e-12) out.push_back(xi);
  }
  return out;
}

}  // namespace coneflow
