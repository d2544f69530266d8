#pragma once

#include "coneflow/types.hpp"

#include <cstdint>
#include <optional>

namespace coneflow {

enum class ConeStratum { Interior, Boundary, Exterior };

const char* to_string(ConeStratum s);

/// Classification of a direction against a cone, with the raw form value.
struct ConePosition {
  ConeStratum stratum;
  double q;
};

/// Quadratic cone C = { xi : <P xi, xi> <= 0 } for a nondegenerate symmetric P.
///
/// The rank of C (dimension of the largest linear subspace it contains) is the
/// number of negative eigenvalues of P. Construction validates symmetry and
/// nondegeneracy and caches the eigendecomposition; the object is immutable.
class QuadraticCone {
 public:
  static constexpr double kDefaultMargin = 1e-10;

  /// Throws PreconditionError when P is not symmetric to tol_sym or has an
  /// eigenvalue within tol_zero of zero. A negative tol_zero selects the
  /// default 1e-9 * ||P||.
  explicit QuadraticCone(Mat P, double tol_sym = 1e-12, double tol_zero = -1.0);

  std::size_t dim() const { return static_cast<std::size_t>(P_.rows()); }
  const Mat& matrix() const { return P_; }
  const Vec& eigenvalues() const { return evals_; }
  const Mat& eigenvectors() const { return evecs_; }
  double tol_sym() const { return tol_sym_; }
  double tol_zero() const { return tol_zero_; }

  /// xi^T P xi.
  double quadratic_form(const Vec& xi) const;

  /// Interior iff q < -margin |xi|^2, Exterior iff q > margin |xi|^2.
  ConePosition contains(const Vec& xi, double margin = kDefaultMargin) const;

  /// Negative index of inertia of P.
  int rank() const { return rank_; }

  /// Membership in the convex competitive cone K = { q >= 0, <xi, v_plus> >= 0 }.
  /// v_plus must be an eigenvector of P for a positive eigenvalue.
  bool competitive_contains(const Vec& v_plus, const Vec& xi) const;

  /// Throws PreconditionError unless v is (to tolerance) an eigenvector of P
  /// with positive eigenvalue.
  void validate_positive_eigenvector(const Vec& v) const;

  /// Unit vectors on the boundary (|q| <= 1e-12) or in the interior (q < 0).
  /// Deterministic for a fixed seed.
  std::vector<Vec> sample_directions(std::size_t count, ConeStratum stratum,
                                     std::uint64_t seed) const;

  /// Same cone data with P replaced by scale * P (scale > 0).
  QuadraticCone scaled(double scale) const;

 private:
  Mat P_;
  Vec evals_;
  Mat evecs_;
  double tol_sym_;
  double tol_zero_;
  int rank_ = 0;
};

/// Free-function spellings of the cone queries.
inline double quadratic_form(const QuadraticCone& c, const Vec& xi) { return c.quadratic_form(xi); }
inline ConePosition contains(const QuadraticCone& c, const Vec& xi,
                             double margin = QuadraticCone::kDefaultMargin) {
  return c.contains(xi, margin);
}
inline int cone_rank(const QuadraticCone& c) { return c.rank(); }
inline bool competitive_cone_contains(const QuadraticCone& c, const Vec& v_plus, const Vec& xi) {
  return c.competitive_contains(v_plus, xi);
}
inline std::vector<Vec> sample_cone_directions(const QuadraticCone& c, std::size_t count,
                                               ConeStratum stratum, std::uint64_t seed) {
  return c.sample_directions(count, stratum, seed);
}

}  // namespace coneflow
