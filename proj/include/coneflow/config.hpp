#pragma once

#include "coneflow/builtins.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace coneflow {

struct SolverSettings {
  double rel_tol = 1e-9;
  double abs_tol = 1e-12;
};

struct SweepSettings {
  std::size_t n = 200;
  std::uint64_t seed = 42;
};

/// Everything a run needs about the model: system, parameter values, cone,
/// domain, and solver/sweep defaults. Produced from a builtin name or a
/// config file.
struct ModelConfig {
  std::string source;  // "builtin:<name>" or the file path
  SystemDef sys;
  ParamMap params;
  std::optional<QuadraticCone> cone;
  std::optional<Vec> v_plus;
  std::optional<Box> box;
  SolverSettings solver;
  SweepSettings sweep;
  double eps0 = 0.1;
  /// Tubular-neighbourhood radius for the slow manifold; reported only.
  double delta0 = 0.5;
};

/// Config file grammar (INI-like, `#` comments):
///
///     [system]          either `builtin = <name>` or a parse_system block
///     [params]          name = value
///     [cone]            P = <n*n row-major numbers>; v_plus = <n numbers>
///     [domain]          half_widths = ... | lo = ... + hi = ...
///     [solver]          rel_tol, abs_tol
///     [sweep]           n, seed
///     [slowfast]        eps0, delta0
///
/// Errors are ParseError with the offending line.
ModelConfig parse_config(std::string_view text, const std::string& source = "<config>");
ModelConfig load_config(const std::filesystem::path& path);
ModelConfig from_builtin(const std::string& name);

}  // namespace coneflow
