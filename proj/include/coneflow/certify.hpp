#pragma once

#include "coneflow/cone.hpp"
#include "coneflow/execution.hpp"
#include "coneflow/integrate.hpp"
#include "coneflow/sampling.hpp"
#include "coneflow/system.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace coneflow {

/// The multiplier lambda(xi) in M = P DF + DF^T P + lambda P: either an
/// explicit function of the state or "auto" (chosen per point).
class LambdaSpec {
 public:
  using Fn = std::function<double(const Vec&)>;
  static LambdaSpec automatic();
  static LambdaSpec constant(double c);
  static LambdaSpec function(Fn fn, std::string text);
  /// "auto" or an expression in the system's states and parameters.
  static LambdaSpec parse(const std::string& text, const SystemDef& sys, const ParamMap& params);

  bool is_auto() const { return !fn_; }
  double operator()(const Vec& xi) const { return fn_(xi); }
  const std::string& text() const { return text_; }

 private:
  Fn fn_;
  std::string text_ = "auto";
};

enum class CertMode { Algebraic, Dynamic, Eventual };
const char* to_string(CertMode m);

struct AlgebraicPoint {
  Vec xi;
  double lambda = 0.0;
  double max_eigenvalue = 0.0;
  bool pass = false;
};

/// Worst mapped direction for one (pair, t) sample: the largest
/// q(Uv) / |Uv|^2 over all sampled v.
struct DynamicSample {
  std::size_t pair = 0;
  double t = 0.0;
  double worst_margin = 0.0;
  Vec worst_direction;
  bool pass = false;
};

struct CooperativityReport {
  CertMode mode = CertMode::Algebraic;
  std::string description;
  double required_margin = 0.0;
  std::string lambda_text;
  std::vector<AlgebraicPoint> points;
  std::vector<DynamicSample> samples;  // pair-major, then t
  std::vector<double> t_grid;
  std::vector<PointPair> pairs;
  std::size_t directions = 0;
  std::size_t failures = 0;
  double worst_margin = 0.0;
  std::size_t worst_index = 0;
  bool pass = false;
  std::optional<double> tstar;            // Eventual mode
  std::optional<double> perturbation_sup;  // Eventual mode, if a reference field is given
};

/// P DF + DF^T P + lambda P.
Mat cooperativity_matrix(const Mat& P, const Mat& DF, double lambda);
double max_eigenvalue(const Mat& symmetric);

struct AutoLambdaOptions {
  double half_width = 10.0;
  int samples = 64;
  double tol = 1e-10;
};

/// Minimizes the largest eigenvalue of cooperativity_matrix over
/// [lc - w, lc + w], lc being the value that balances the top eigenvalues of
/// the (normalized) negative and positive blocks; coarse scan followed by
/// golden-section refinement. Returns (lambda, max eigenvalue).
std::pair<double, double> auto_lambda(const Mat& P, const Mat& DF,
                                      const AutoLambdaOptions& opts = {});
/// The balancing centre lc used by auto_lambda.
double lambda_centre(const Mat& P, const Mat& DF);

struct AlgebraicOptions {
  double required_margin = 1e-8;
  AutoLambdaOptions auto_lambda;
  Execution execution = Execution::Parallel;
};

/// Sampled check that M(xi, lambda(xi)) is negative definite at every point of
/// a grid_res^n grid on the box.
CooperativityReport algebraic_certificate(const VectorField& f, const QuadraticCone& cone,
                                          const Box& box, int grid_res, const LambdaSpec& lambda,
                                          const AlgebraicOptions& opts = {});

struct DynamicOptions {
  double relative_margin = 1e-6;
  /// Interior directions sampled in addition to the boundary directions.
  std::size_t interior_directions = 16;
  IntegratorOptions integrator;
  Execution execution = Execution::Parallel;
};

/// Maps sampled boundary and interior cone directions through the chord
/// fundamental matrix U^pq(t) and requires every image strictly inside the
/// cone. A sampled certificate, not a proof.
CooperativityReport dynamic_certificate(const VectorField& f, const QuadraticCone& cone,
                                        const std::vector<PointPair>& pairs,
                                        const std::vector<double>& t_grid,
                                        std::size_t n_directions, std::uint64_t seed,
                                        const DynamicOptions& opts = {});

struct EventualOptions {
  DynamicOptions dynamic;
  /// Points sampled for sup |F - G| + |DF - DG| when a reference is given.
  std::size_t perturbation_samples = 2000;
};

/// Smallest grid time from which the dynamic check passes at every later
/// grid time for all pairs; tstar is empty if the last grid time fails.
CooperativityReport eventual_tstar(const VectorField& g, const QuadraticCone& cone,
                                   const std::vector<PointPair>& pairs,
                                   const std::vector<double>& t_grid, std::size_t n_directions,
                                   std::uint64_t seed, const EventualOptions& opts = {},
                                   const VectorField* reference = nullptr,
                                   const std::optional<Box>& box = std::nullopt);

struct OrderWitness {
  std::size_t pair = 0;
  double t = 0.0;
  ConeStratum stratum = ConeStratum::Exterior;
  double normalized_q = 0.0;
};

struct MonotonicityOptions {
  bool strong = true;
  /// Under `strong`, Interior is required for t >= strict_after (and t > 0);
  /// before that membership in C suffices.
  double strict_after = 0.0;
  double relative_margin = 1e-6;
  IntegratorOptions integrator = [] {
    IntegratorOptions o;
    o.rel_tol = 1e-11;
    o.abs_tol = 1e-13;
    return o;
  }();
  Execution execution = Execution::Parallel;
};

struct MonotonicityResult {
  bool pass = false;
  std::size_t checked = 0;
  std::size_t skipped = 0;  // pairs with p == q
  std::size_t violations = 0;
  std::optional<OrderWitness> first_violation;
  double worst_normalized_q = 0.0;  // largest q(d) / |d|^2 seen; -inf if nothing was checked
};

/// Checks phi_t(q) - phi_t(p) in C for ordered pairs (q - p in C).
/// Throws PreconditionError if some pair is not ordered.
MonotonicityResult monotonicity_check(const VectorField& f, const QuadraticCone& cone,
                                      const std::vector<PointPair>& pairs,
                                      const std::vector<double>& t_samples,
                                      const MonotonicityOptions& opts = {});

/// First strided sample pair (i < j) of the trajectory whose difference is a
/// nonzero element of C; returns (t_i, t_j).
std::optional<std::pair<double, double>> pseudo_order_scan(const Trajectory& traj,
                                                           const QuadraticCone& cone,
                                                           std::size_t stride = 1,
                                                           double margin = QuadraticCone::kDefaultMargin);

/// Random ordered pairs: p uniform in the box, q = p + s v with v a unit
/// interior direction of C and s uniform in [s_min, s_max].
std::vector<PointPair> random_ordered_pairs(const QuadraticCone& cone, const Box& box,
                                            std::size_t count, double s_min, double s_max,
                                            std::uint64_t seed);

}  // namespace coneflow
