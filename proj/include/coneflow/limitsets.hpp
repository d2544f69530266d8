#pragma once

#include "coneflow/execution.hpp"
#include "coneflow/integrate.hpp"
#include "coneflow/sampling.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace coneflow {

class SlowFastSystem;

struct Equilibrium {
  Vec point;
  CVec eigenvalues;
  double residual = 0.0;
};

struct EquilibriumOptions {
  int max_iter = 100;
  double tol = 1e-11;
  double dedup = 1e-6;
  Execution execution = Execution::Parallel;
};

/// Damped Newton from every point of a seed_grid_res^n grid on the box;
/// roots inside the box with residual <= tol are deduplicated (first seed
/// wins). Non-convergent seeds are dropped.
std::vector<Equilibrium> find_equilibria(const VectorField& f, const Box& box, int seed_grid_res,
                                         const EquilibriumOptions& opts = {});

/// Newton polish of a single near-equilibrium; throws ConvergenceError.
Equilibrium polish_equilibrium(const VectorField& f, const Vec& guess,
                               const EquilibriumOptions& opts = {});

inline IntegratorOptions precise_integrator() {
  IntegratorOptions o;
  o.rel_tol = 1e-12;
  o.abs_tol = 1e-14;
  return o;
}

struct PoincareOptions {
  double t_max = 100.0;
  double time_tol = 1e-10;
  /// Crossings are tangential when |<F, n>| < tangency_tol |F| |n|.
  double tangency_tol = 1e-9;
  IntegratorOptions integrator = precise_integrator();
};

struct PoincareReturn {
  Vec point;
  double time = 0.0;
};

/// Next crossing of {x : <x - anchor, n> = 0} from `start` in the direction
/// of F(anchor). An empty `direction` selects n = F(anchor).
PoincareReturn poincare_return(const VectorField& f, const Vec& anchor, const Vec& direction,
                               const Vec& start, const PoincareOptions& opts = {});

struct PeriodicOrbit {
  Vec anchor;
  Vec section_normal;
  double period = 0.0;
  double raw_period = 0.0;  // period estimate handed to the refinement
  Trajectory orbit;         // one period from the anchor, dense
  Mat monodromy;
  CVec floquet;             // sorted by decreasing modulus
  double residual = 0.0;    // |phi_T(x*) - x*|
  int iterations = 0;
  bool hyperbolic = false;  // exactly one multiplier within floquet_tol of 1
};

struct RefineOptions {
  int max_iter = 40;
  double orbit_tol = 1e-9;
  double floquet_tol = 1e-4;
  IntegratorOptions integrator = precise_integrator();
};

/// Newton on (x, T) for phi_T(x) = x with the phase fixed by the section
/// through x_guess normal to F(x_guess). Throws ConvergenceError on
/// non-convergence or a degenerate section.
PeriodicOrbit refine_periodic_orbit(const VectorField& f, const Vec& x_guess, double T_guess,
                                    const RefineOptions& opts = {});

/// Floquet multipliers within tol of 1.
std::size_t count_unit_multipliers(const CVec& floquet, double tol);

enum class OmegaKind { Equilibrium, ClosedOrbit, Unresolved };
const char* to_string(OmegaKind k);

struct OmegaClassification {
  OmegaKind kind = OmegaKind::Unresolved;
  std::optional<Equilibrium> equilibrium;
  std::optional<PeriodicOrbit> orbit;
  std::string reason;  // Unresolved only
  std::map<std::string, double> diagnostics;
  Vec reference_state;  // state after the transient
};

struct ClassifyOptions {
  double transient = 50.0;
  double t_min = 0.5;
  double t_max = 50.0;
  double eq_tol = 1e-9;
  double probe = 1.0;
  /// Recurrence threshold, scaled by (1 + |x_ref|).
  double recur_tol = 1e-4;
  double separation_tol = 1e-3;
  IntegratorOptions integrator = precise_integrator();
  RefineOptions refine;
  std::vector<Vec> known_equilibria;
  std::optional<Box> box;  // trajectories leaving it (with 1% slack) are Unresolved
};

/// Tolerances for the full slow-time field of a slow-fast system: absolute
/// tolerances on fast components scaled by eps.
ClassifyOptions slow_fast_classify_options(const SlowFastSystem& sf, ClassifyOptions base = {});

OmegaClassification classify_omega(const VectorField& f, const Vec& x0,
                                   const ClassifyOptions& opts = {});

struct SweepOptions {
  ClassifyOptions classify;
  Execution execution = Execution::Parallel;
  /// Classified first, ahead of the random samples (counted in N).
  std::vector<Vec> forced_samples;
  /// Seed-grid resolution for the equilibrium scan feeding the separation
  /// guard; 0 disables the scan.
  int equilibrium_seed_res = 5;
  std::size_t exemplars_per_class = 3;
};

struct SweepEntry {
  std::size_t index = 0;
  Vec ic;
  OmegaKind kind = OmegaKind::Unresolved;
  double period = 0.0;  // ClosedOrbit only
  Vec point;            // equilibrium or orbit anchor
  std::string reason;
  std::map<std::string, double> diagnostics;
};

struct SweepReport {
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::size_t closed_orbit = 0;
  std::size_t equilibrium = 0;
  std::size_t unresolved = 0;
  std::vector<Equilibrium> equilibria;
  std::vector<SweepEntry> entries;
  std::map<OmegaKind, std::vector<std::size_t>> exemplars;
  double closed_fraction() const { return n ? static_cast<double>(closed_orbit) / static_cast<double>(n) : 0.0; }
};

/// N initial conditions drawn uniformly from the box with mt19937_64(seed),
/// each classified independently.
SweepReport genericity_sweep(const VectorField& f, const Box& box, std::size_t n, std::uint64_t seed,
                             const SweepOptions& opts = {});

/// Hausdorff distance between two finite point sets.
double hausdorff_distance(const std::vector<Vec>& a, const std::vector<Vec>& b);

}  // namespace coneflow
