#pragma once

#include "coneflow/expr.hpp"
#include "coneflow/field.hpp"

#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace coneflow {

using ParamMap = std::map<std::string, double>;

/// Vector field over named states and parameters, one expression per state.
///
/// For slow-fast systems `fast_states` names the fast variables y; their
/// component expressions are the right-hand sides g of eps * y' = g, while
/// the remaining components are the slow right-hand sides f.
struct SystemDef {
  std::vector<std::string> states;
  std::vector<std::string> params;
  std::vector<Expr> components;
  std::vector<std::string> fast_states;
  std::string eps_param = "eps";

  std::size_t dim() const { return states.size(); }
  NameScope scope() const { return NameScope{states, params}; }
  bool is_slow_fast() const { return !fast_states.empty(); }
  int state_index(std::string_view name) const;
  int param_index(std::string_view name) const;

  /// Throws ParseError on arity mismatch, duplicate names, or an unknown
  /// fast-state / eps name.
  void validate() const;
};

/// Parses a system block:
///
///     states = x, y
///     params = a
///     fast = y            # optional
///     eps_param = eps     # optional, defaults to "eps"
///     x' = -y
///     y' = a*x
///
/// `#` starts a comment. `first_line` offsets reported line numbers.
SystemDef parse_system(std::string_view text, int first_line = 1);

/// Renders a system block that parse_system reads back to an identical system.
std::string to_string(const SystemDef& sys);

bool structurally_equal(const SystemDef& a, const SystemDef& b);

/// A SystemDef with every parameter bound; evaluates the component
/// expressions as written and differentiates them in forward mode.
class BoundSystem final : public VectorField {
 public:
  /// Throws PreconditionError if a declared parameter is missing from `params`.
  BoundSystem(std::shared_ptr<const SystemDef> sys, const ParamMap& params);
  BoundSystem(const SystemDef& sys, const ParamMap& params)
      : BoundSystem(std::make_shared<const SystemDef>(sys), params) {}

  std::size_t dim() const override { return sys_->dim(); }
  void eval(const Vec& x, Vec& dx) const override;
  Mat jacobian(const Vec& x) const override;

  /// d/d(param) of every component at x.
  Vec param_derivative(const Vec& x, std::size_t param) const;

  const SystemDef& system() const { return *sys_; }
  const std::vector<double>& param_values() const { return values_; }

 private:
  std::shared_ptr<const SystemDef> sys_;
  std::vector<double> values_;
};

/// Component-wise evaluation; throws EvalError on domain failures or
/// non-finite results and PreconditionError on unbound parameters.
Vec eval_field(const SystemDef& sys, const Vec& state, const ParamMap& params);

/// Exact forward-mode Jacobian.
Mat jacobian(const SystemDef& sys, const Vec& state, const ParamMap& params);

}  // namespace coneflow
