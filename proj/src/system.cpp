#include "coneflow/system.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

namespace coneflow {

int SystemDef::state_index(std::string_view name) const {
  const auto it = std::find(states.begin(), states.end(), name);
  return it == states.end() ? -1 : static_cast<int>(it - states.begin());
}

int SystemDef::param_index(std::string_view name) const {
  const auto it = std::find(params.begin(), params.end(), name);
  return it == params.end() ? -1 : static_cast<int>(it - params.begin());
}

void SystemDef::validate() const {
  if (states.empty()) throw ParseError("system declares no states", 0, 0);
  if (components.size() != states.size()) {
    throw ParseError("arity mismatch: " + std::to_string(states.size()) + " states but " +
                         std::to_string(components.size()) + " component expressions",
                     0, 0);
  }
  std::set<std::string> seen;
  for (const auto& n : states) {
    if (!seen.insert(n).second) throw ParseError("duplicate name '" + n + "'", 0, 0);
  }
  for (const auto& n : params) {
    if (!seen.insert(n).second) throw ParseError("duplicate name '" + n + "'", 0, 0);
  }
  for (const auto& f : fast_states) {
    if (state_index(f) < 0) throw ParseError("fast state '" + f + "' is not a declared state", 0, 0);
  }
  if (is_slow_fast() && param_index(eps_param) < 0) {
    throw ParseError("slow-fast system must declare parameter '" + eps_param + "'", 0, 0);
  }
  if (is_slow_fast() && fast_states.size() >= states.size()) {
    throw ParseError("slow-fast system needs at least one slow state", 0, 0);
  }
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

int leading_ws(std::string_view s) {
  int n = 0;
  while (static_cast<std::size_t>(n) < s.size() && std::isspace(static_cast<unsigned char>(s[n]))) ++n;
  return n;
}

bool is_identifier(std::string_view s) {
  if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
  });
}

std::vector<std::string> split_names(std::string_view list, int line, int column) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= list.size()) {
    const std::size_t comma = list.find(',', start);
    const std::size_t end = comma == std::string_view::npos ? list.size() : comma;
    const auto item = trim(list.substr(start, end - start));
    if (!item.empty()) {
      if (!is_identifier(item)) {
        throw ParseError("invalid identifier '" + std::string(item) + "'", line, column);
      }
      out.emplace_back(item);
    } else if (comma != std::string_view::npos) {
      throw ParseError("empty name in list", line, column);
    }
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

struct PendingComponent {
  std::string state;
  std::string_view expr;
  int line;
  int column;
};

}  // namespace

SystemDef parse_system(std::string_view text, int first_line) {
  SystemDef sys;
  bool have_states = false;
  std::vector<PendingComponent> pending;

  int line_no = first_line - 1;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    const std::size_t end = nl == std::string_view::npos ? text.size() : nl;
    std::string_view raw = text.substr(pos, end - pos);
    ++line_no;
    pos = end + 1;
    if (const auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
    if (trim(raw).empty()) {
      if (nl == std::string_view::npos) break;
      continue;
    }
    const auto eq = raw.find('=');
    if (eq == std::string_view::npos) {
      throw ParseError("expected 'key = value' or \"name' = expression\"", line_no,
                       leading_ws(raw) + 1);
    }
    const auto key = trim(raw.substr(0, eq));
    const std::string_view value_raw = raw.substr(eq + 1);
    const auto value = trim(value_raw);
    const int value_col = static_cast<int>(eq) + 1 + leading_ws(value_raw) + 1;
    if (key == "states") {
      sys.states = split_names(value, line_no, value_col);
      have_states = true;
    } else if (key == "params") {
      sys.params = split_names(value, line_no, value_col);
    } else if (key == "fast") {
      sys.fast_states = split_names(value, line_no, value_col);
    } else if (key == "eps_param") {
      if (!is_identifier(value)) throw ParseError("invalid eps_param", line_no, value_col);
      sys.eps_param = std::string(value);
    } else if (key.size() > 1 && key.back() == '\'' && is_identifier(trim(key.substr(0, key.size() - 1)))) {
      pending.push_back({std::string(trim(key.substr(0, key.size() - 1))), value, line_no, value_col});
    } else {
      throw ParseError("unknown key '" + std::string(key) + "'", line_no, 1);
    }
    if (nl == std::string_view::npos) break;
  }

  if (!have_states) throw ParseError("missing 'states = ...' declaration", first_line, 1);
  const NameScope scope = sys.scope();
  std::vector<Expr> comps(sys.states.size());
  std::vector<bool> filled(sys.states.size(), false);
  for (const auto& pc : pending) {
    const int idx = sys.state_index(pc.state);
    if (idx < 0) {
      throw ParseError("component given for undeclared state '" + pc.state + "'", pc.line, 1);
    }
    if (filled[static_cast<std::size_t>(idx)]) {
      throw ParseError("arity mismatch: state '" + pc.state + "' has more than one component",
                       pc.line, 1);
    }
    comps[static_cast<std::size_t>(idx)] = parse_expression(pc.expr, scope, pc.line, pc.column);
    filled[static_cast<std::size_t>(idx)] = true;
  }
  for (std::size_t i = 0; i < filled.size(); ++i) {
    if (!filled[i]) {
      throw ParseError("arity mismatch: no component expression for state '" + sys.states[i] + "'",
                       first_line, 1);
    }
  }
  sys.components = std::move(comps);
  sys.validate();
  return sys;
}

std::string to_string(const SystemDef& sys) {
  std::ostringstream os;
  auto join = [](const std::vector<std::string>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + v[i];
    return s;
  };
  os << "states = " << join(sys.states) << '\n';
  os << "params = " << join(sys.params) << '\n';
  if (sys.is_slow_fast()) {
    os << "fast = " << join(sys.fast_states) << '\n';
    os << "eps_param = " << sys.eps_param << '\n';
  }
  const NameScope scope = sys.scope();
  for (std::size_t i = 0; i < sys.states.size(); ++i) {
    os << sys.states[i] << "' = " << to_string(sys.components[i], scope) << '\n';
  }
  return os.str();
}

bool structurally_equal(const SystemDef& a, const SystemDef& b) {
  if (a.states != b.states || a.params != b.params || a.fast_states != b.fast_states) return false;
  if (a.is_slow_fast() && a.eps_param != b.eps_param) return false;
  if (a.components.size() != b.components.size()) return false;
  for (std::size_t i = 0; i < a.components.size(); ++i) {
    if (!structurally_equal(a.components[i], b.components[i])) return false;
  }
  return true;
}

BoundSystem::BoundSystem(std::shared_ptr<const SystemDef> sys, const ParamMap& params)
    : sys_(std::move(sys)) {
  values_.reserve(sys_->params.size());
  for (const auto& name : sys_->params) {
    const auto it = params.find(name);
    if (it == params.end()) throw PreconditionError("unbound parameter '" + name + "'");
    values_.push_back(it->second);
  }
}

void BoundSystem::eval(const Vec& x, Vec& dx) const {
  const auto n = static_cast<Eigen::Index>(sys_->dim());
  require_dim(x, n, "eval_field");
  dx.resize(n);
  const std::span<const double> vars(x.data(), static_cast<std::size_t>(n));
  const std::span<const double> pars(values_);
  for (Eigen::Index i = 0; i < n; ++i) {
    dx[i] = sys_->components[static_cast<std::size_t>(i)].evaluate<double>(vars, pars);
  }
  if (!dx.allFinite()) throw EvalError("vector field evaluated to a non-finite value");
}

Mat BoundSystem::jacobian(const Vec& x) const {
  const auto n = static_cast<Eigen::Index>(sys_->dim());
  require_dim(x, n, "jacobian");
  std::vector<Dual> vars(static_cast<std::size_t>(n));
  std::vector<Dual> pars(values_.size());
  for (std::size_t k = 0; k < values_.size(); ++k) pars[k] = Dual{values_[k], 0.0};
  for (Eigen::Index i = 0; i < n; ++i) vars[static_cast<std::size_t>(i)] = Dual{x[i], 0.0};
  Mat J(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    vars[static_cast<std::size_t>(j)].d = 1.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      J(i, j) = sys_->components[static_cast<std::size_t>(i)]
                    .evaluate<Dual>(std::span<const Dual>(vars), std::span<const Dual>(pars))
                    .d;
    }
    vars[static_cast<std::size_t>(j)].d = 0.0;
  }
  if (!J.allFinite()) throw EvalError("Jacobian evaluated to a non-finite value");
  return J;
}

Vec BoundSystem::param_derivative(const Vec& x, std::size_t param) const {
  const auto n = static_cast<Eigen::Index>(sys_->dim());
  require_dim(x, n, "param_derivative");
  if (param >= values_.size()) throw PreconditionError("parameter index out of range");
  std::vector<Dual> vars(static_cast<std::size_t>(n));
  std::vector<Dual> pars(values_.size());
  for (std::size_t k = 0; k < values_.size(); ++k) pars[k] = Dual{values_[k], k == param ? 1.0 : 0.0};
  for (Eigen::Index i = 0; i < n; ++i) vars[static_cast<std::size_t>(i)] = Dual{x[i], 0.0};
  Vec out(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out[i] = sys_->components[static_cast<std::size_t>(i)]
                 .evaluate<Dual>(std::span<const Dual>(vars), std::span<const Dual>(pars))
                 .d;
  }
  return out;
}

Vec eval_field(const SystemDef& sys, const Vec& state, const ParamMap& params) {
  return BoundSystem(sys, params)(state);
}

Mat jacobian(const SystemDef& sys, const Vec& state, const ParamMap& params) {
  return BoundSystem(sys, params).jacobian(state);
}

}  // namespace coneflow
