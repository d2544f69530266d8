#include "coneflow/report.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <ostream>

namespace coneflow::report {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Json number(double v) {
  if (std::isnan(v)) return "NaN";
  if (std::isinf(v)) return v > 0 ? "Infinity" : "-Infinity";
  return v;
}

Json to_json(const Vec& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(number(v[i]));
  return a;
}

Json to_json(const CVec& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(Json::array({number(v[i].real()), number(v[i].imag())}));
  return a;
}

Json to_json(const Mat& m) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) a.push_back(to_json(Vec(m.row(i).transpose())));
  return a;
}

namespace {

Json optional_number(const std::optional<double>& v) { return v ? number(*v) : Json(nullptr); }

Json diagnostics_json(const std::map<std::string, double>& d) {
  Json o = Json::object();
  for (const auto& [k, v] : d) o[k] = number(v);
  return o;
}

}  // namespace

Json to_json(const CooperativityReport& r) {
  Json j;
  j["mode"] = to_string(r.mode);
  j["description"] = r.description;
  j["required_margin"] = number(r.required_margin);
  j["lambda"] = r.lambda_text;
  j["pass"] = r.pass;
  j["failures"] = r.failures;
  j["worst_margin"] = number(r.worst_margin);
  j["worst_index"] = r.worst_index;
  if (r.mode == CertMode::Algebraic) {
    Json pts = Json::array();
    for (const auto& p : r.points)
      pts.push_back({{"xi", to_json(p.xi)},
                     {"lambda", number(p.lambda)},
                     {"max_eigenvalue", number(p.max_eigenvalue)},
                     {"pass", p.pass}});
    j["grid"] = std::move(pts);
    if (!r.points.empty()) {
      const auto& w = r.points[r.worst_index];
      j["worst_witness"] = {{"xi", to_json(w.xi)}, {"lambda", number(w.lambda)}, {"max_eigenvalue", number(w.max_eigenvalue)}};
    }
  } else {
    j["t_grid"] = r.t_grid;
    j["directions"] = r.directions;
    Json pairs = Json::array();
    for (const auto& [p, q] : r.pairs) pairs.push_back({{"p", to_json(p)}, {"q", to_json(q)}});
    j["pairs"] = std::move(pairs);
    Json samples = Json::array();
    for (const auto& s : r.samples)
      samples.push_back({{"pair", s.pair},
                         {"t", number(s.t)},
                         {"worst_margin", number(s.worst_margin)},
                         {"pass", s.pass}});
    j["samples"] = std::move(samples);
    if (!r.samples.empty()) {
      const auto& w = r.samples[r.worst_index];
      j["worst_witness"] = {{"pair", w.pair}, {"t", number(w.t)}, {"worst_margin", number(w.worst_margin)},
                            {"direction", to_json(w.worst_direction)}};
    }
  }
  if (r.mode == CertMode::Eventual) {
    j["tstar"] = optional_number(r.tstar);
    j["perturbation_sup"] = optional_number(r.perturbation_sup);
  }
  return j;
}

Json to_json(const Equilibrium& e) {
  return {{"point", to_json(e.point)}, {"eigenvalues", to_json(e.eigenvalues)}, {"residual", number(e.residual)}};
}

Json to_json(const PeriodicOrbit& po) {
  return {{"anchor", to_json(po.anchor)},
          {"section_normal", to_json(po.section_normal)},
          {"period", number(po.period)},
          {"raw_period", number(po.raw_period)},
          {"monodromy", to_json(po.monodromy)},
          {"floquet_multipliers", to_json(po.floquet)},
          {"residual", number(po.residual)},
          {"iterations", po.iterations},
          {"hyperbolic", po.hyperbolic}};
}

Json to_json(const OmegaClassification& c) {
  Json j;
  j["kind"] = to_string(c.kind);
  j["reason"] = c.reason;
  j["diagnostics"] = diagnostics_json(c.diagnostics);
  j["reference_state"] = to_json(c.reference_state);
  j["equilibrium"] = c.equilibrium ? to_json(*c.equilibrium) : Json(nullptr);
  j["orbit"] = c.orbit ? to_json(*c.orbit) : Json(nullptr);
  return j;
}

Json to_json(const SweepReport& r) {
  Json j;
  j["n"] = r.n;
  j["seed"] = r.seed;
  j["counts"] = {{"ClosedOrbit", r.closed_orbit}, {"Equilibrium", r.equilibrium}, {"Unresolved", r.unresolved}};
  j["closed_fraction"] = number(r.closed_fraction());
  Json eqs = Json::array();
  for (const auto& e : r.equilibria) eqs.push_back(to_json(e));
  j["equilibria"] = std::move(eqs);
  auto entry = [](const SweepEntry& e) {
    return Json{{"index", e.index},
                {"ic", to_json(e.ic)},
                {"kind", to_string(e.kind)},
                {"period", number(e.period)},
                {"point", to_json(e.point)},
                {"reason", e.reason},
                {"diagnostics", diagnostics_json(e.diagnostics)}};
  };
  Json ex = Json::object();
  for (const auto& [kind, idx] : r.exemplars) {
    Json rows = Json::array();
    for (std::size_t i : idx) rows.push_back(entry(r.entries[i]));
    ex[to_string(kind)] = std::move(rows);
  }
  j["exemplars"] = std::move(ex);
  Json all = Json::array();
  for (const auto& e : r.entries) all.push_back(entry(e));
  j["entries"] = std::move(all);
  return j;
}

Json to_json(const ManifoldCertification& m) {
  Json pts = Json::array();
  for (const auto& p : m.points)
    pts.push_back({{"x", to_json(p.x)},
                   {"h0", to_json(p.h0)},
                   {"fast_eigenvalues", to_json(p.fast_eigenvalues)},
                   {"spectral_abscissa", number(p.spectral_abscissa)},
                   {"residual", number(p.residual)},
                   {"stable", p.stable}});
  return {{"all_stable", m.all_stable},
          {"max_abscissa", number(m.max_abscissa)},
          {"mu_raw", number(m.mu_raw)},
          {"mu", number(m.mu)},
          {"points", std::move(pts)}};
}

Json to_json(const ContractionFit& f) {
  return {{"rate", number(f.rate)},
          {"tau_begin", number(f.tau_begin)},
          {"tau_end", number(f.tau_end)},
          {"samples", f.samples}};
}

Json to_json(const MonotonicityResult& m) {
  Json j{{"pass", m.pass},
         {"checked", m.checked},
         {"skipped", m.skipped},
         {"violations", m.violations},
         {"worst_normalized_q", number(m.worst_normalized_q)}};
  if (m.first_violation) {
    const auto& w = *m.first_violation;
    j["first_violation"] = {{"pair", w.pair},
                            {"t", number(w.t)},
                            {"stratum", to_string(w.stratum)},
                            {"normalized_q", number(w.normalized_q)}};
  } else {
    j["first_violation"] = nullptr;
  }
  return j;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

Json envelope(const std::string& kind, const Json& body, const std::optional<std::string>& generated_at) {
  Json j = body.is_object() ? body : Json{{"data", body}};
  j["schema_version"] = kSchemaVersion;
  j["report"] = kind;
  if (generated_at) j["generated_at"] = *generated_at;
  return j;
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

void write_csv_header(std::ostream& os, const std::vector<std::string>& names) {
  for (std::size_t i = 0; i < names.size(); ++i) os << (i ? "," : "") << names[i];
  os << '\n';
}

void write_csv_row(std::ostream& os, const std::vector<double>& row) {
  for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << format_double(row[i]);
  os << '\n';
}

void write_projection_csv(std::ostream& os, const Trajectory& traj, const std::vector<std::string>& names,
                          const std::vector<std::size_t>& columns) {
  std::vector<std::string> head{"t"};
  for (std::size_t c : columns) {
    if (c >= names.size()) throw PreconditionError("projection column out of range");
    head.push_back(names[c]);
  }
  write_csv_header(os, head);
  std::vector<double> row(columns.size() + 1);
  for (std::size_t i = 0; i < traj.size(); ++i) {
    row[0] = traj.times()[i];
    for (std::size_t k = 0; k < columns.size(); ++k) row[k + 1] = traj.states()[i][static_cast<Eigen::Index>(columns[k])];
    write_csv_row(os, row);
  }
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj, const std::vector<std::string>& names) {
  if (!traj.empty() && traj.dim() != names.size()) throw DimensionError("trajectory/name count mismatch");
  std::vector<std::size_t> all(names.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  write_projection_csv(os, traj, names, all);
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out << content;
  out.close();
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

}  // namespace coneflow::report
