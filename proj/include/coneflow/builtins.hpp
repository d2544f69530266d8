#pragma once

#include "coneflow/cone.hpp"
#include "coneflow/system.hpp"

#include <optional>
#include <string>
#include <vector>

namespace coneflow {

/// A registered system together with its cone and domain data.
struct BuiltinSystem {
  std::string name;
  std::string description;
  SystemDef sys;
  ParamMap default_params;
  std::optional<QuadraticCone> cone;
  std::optional<Vec> v_plus;
  std::optional<Box> box;
};

/// Registered names: "paper-4d", "paper-3d-limit", "circle".
///
/// paper-4d is the slow-fast system with fast variable w,
///   x' = x - y - 1.5 x z^2 - 0.5 x (x^2+y^2) + eps x w   (likewise y, z)
///   eps w' = -w + x + y + z,
/// on the box |x|,|y|,|z| <= 4, |w| <= 16. paper-3d-limit is its eps = 0
/// reduction (w = x + y + z). Both carry the rank-2 cone P = diag(-1,-1,1)
/// on the slow variables with v_plus = e_z.
BuiltinSystem get_builtin(const std::string& name);

std::vector<std::string> builtin_names();

}  // namespace coneflow
