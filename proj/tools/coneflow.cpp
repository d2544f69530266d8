#include "coneflow/builtins.hpp"
#include "coneflow/certify.hpp"
#include "coneflow/config.hpp"
#include "coneflow/execution.hpp"
#include "coneflow/limitsets.hpp"
#include "coneflow/report.hpp"
#include "coneflow/slowfast.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace coneflow;
namespace rep = coneflow::report;

namespace {

constexpr int kExitPass = 0;
constexpr int kExitError = 1;
constexpr int kExitFail = 2;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string builtin;
  std::string config;
  std::optional<double> eps;
  std::optional<std::uint64_t> seed;
  std::string out;
  int threads = 0;
  bool no_timestamp = false;
};

struct Model {
  ModelConfig cfg;
  std::shared_ptr<const SlowFastSystem> sf;
  std::shared_ptr<const VectorField> full;  // slow-time field for slow-fast systems
  IntegratorOptions integrator;

  std::vector<std::string> slow_names() const {
    if (!sf) return cfg.sys.states;
    std::vector<std::string> s;
    for (int i : sf->slow_indices()) s.push_back(cfg.sys.states[static_cast<std::size_t>(i)]);
    return s;
  }
  std::vector<std::string> fast_names() const {
    std::vector<std::string> s;
    if (sf)
      for (int i : sf->fast_indices()) s.push_back(cfg.sys.states[static_cast<std::size_t>(i)]);
    return s;
  }
  Box require_box() const {
    if (!cfg.box) throw UsageError("the system has no domain box; add a [domain] section");
    return *cfg.box;
  }
  Box slow_box() const {
    const Box b = require_box();
    if (!sf) return b;
    Box s{Vec(static_cast<Eigen::Index>(sf->n())), Vec(static_cast<Eigen::Index>(sf->n()))};
    for (std::size_t k = 0; k < sf->n(); ++k) {
      s.lo[static_cast<Eigen::Index>(k)] = b.lo[sf->slow_indices()[k]];
      s.hi[static_cast<Eigen::Index>(k)] = b.hi[sf->slow_indices()[k]];
    }
    return s;
  }
  /// Field on which cone certificates run: the reduced system for slow-fast models.
  std::shared_ptr<const VectorField> certified_field() const {
    if (sf) return reduced_system(*sf, slow_box());
    return full;
  }
  const QuadraticCone& require_cone() const {
    if (!cfg.cone) throw UsageError("the system has no cone; add a [cone] section");
    return *cfg.cone;
  }
  /// Scope for lambda expressions: the certified field's states.
  SystemDef lambda_scope() const {
    SystemDef s;
    s.states = slow_names();
    s.params = cfg.sys.params;
    return s;
  }
};

Model load_model(const Common& c) {
  if (c.builtin.empty() == c.config.empty()) throw UsageError("exactly one of --builtin or --config is required");
  Model m;
  m.cfg = c.builtin.empty() ? load_config(c.config) : from_builtin(c.builtin);
  m.integrator.rel_tol = m.cfg.solver.rel_tol;
  m.integrator.abs_tol = m.cfg.solver.abs_tol;
  if (m.cfg.sys.is_slow_fast()) {
    ParamMap p = m.cfg.params;
    if (c.eps) p[m.cfg.sys.eps_param] = *c.eps;
    m.sf = std::make_shared<const SlowFastSystem>(m.cfg.sys, p, m.cfg.eps0);
    m.cfg.params = m.sf->params();
    m.full = m.sf->slow_time_field();
    m.integrator = m.sf->scaled_options(m.integrator);
  } else {
    if (c.eps) throw UsageError("--eps applies only to slow-fast systems");
    m.full = std::make_shared<const BoundSystem>(m.cfg.sys, m.cfg.params);
  }
  return m;
}

Vec parse_vector(const std::string& text, std::size_t dim, const std::string& what) {
  std::vector<double> vals;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      vals.push_back(std::stod(item, &used));
      if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError("malformed number '" + item + "' in " + what);
    }
  }
  if (vals.size() != dim)
    throw UsageError(what + " needs " + std::to_string(dim) + " comma-separated values, got " +
                     std::to_string(vals.size()));
  return Eigen::Map<const Vec>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

std::vector<double> parse_list(const std::string& text, const std::string& what) {
  std::vector<double> vals;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      vals.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw UsageError("malformed number '" + item + "' in " + what);
    }
  }
  if (vals.empty()) throw UsageError(what + " is empty");
  return vals;
}

rep::Json model_json(const Model& m) {
  rep::Json j{{"source", m.cfg.source}, {"states", m.cfg.sys.states}, {"slow_fast", m.sf != nullptr}};
  rep::Json p = rep::Json::object();
  for (const auto& [k, v] : m.cfg.params) p[k] = rep::number(v);
  j["params"] = std::move(p);
  if (m.sf) {
    j["eps"] = rep::number(m.sf->eps());
    j["eps0"] = rep::number(m.sf->eps0());
  }
  return j;
}

/// Writes <out>/<name>.json or prints it when no output directory is set.
void emit(const Common& c, const std::string& name, rep::Json body) {
  const std::optional<std::string> ts = c.no_timestamp ? std::nullopt : std::optional(rep::utc_timestamp());
  const std::string text = rep::dump(rep::envelope(name, body, ts));
  if (c.out.empty()) {
    std::cout << text;
  } else {
    rep::write_file(fs::path(c.out) / (name + ".json"), text);
  }
}

void note(const Common& c, const std::string& line) {
  if (!c.out.empty()) std::cout << line << '\n';
}

std::string csv_of_trajectory(const Trajectory& tr, const std::vector<std::string>& names) {
  std::ostringstream os;
  rep::write_trajectory_csv(os, tr, names);
  return os.str();
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  std::string ic;
  double t = 0.0;
  std::size_t dense = 0;
};

int cmd_simulate(const Common& c, const SimulateArgs& a) {
  const Model m = load_model(c);
  if (a.ic.empty()) throw UsageError("simulate needs --ic");
  if (!(a.t > 0.0)) throw UsageError("simulate needs --t > 0");
  const Vec x0 = parse_vector(a.ic, m.cfg.sys.dim(), "--ic");
  const Trajectory tr = flow(*m.full, x0, 0.0, a.t, m.integrator);
  const Trajectory out = a.dense ? tr.resample(a.dense) : tr;
  const std::string csv = csv_of_trajectory(out, m.cfg.sys.states);

  rep::Json s = model_json(m);
  s["initial_state"] = rep::to_json(x0);
  s["t_end"] = rep::number(a.t);
  s["final_state"] = rep::to_json(tr.back());
  s["accepted_steps"] = tr.stats().accepted;
  s["rejected_steps"] = tr.stats().rejected;
  s["evaluations"] = tr.stats().evaluations;
  s["rows"] = out.size();
  if (c.out.empty()) {
    std::cout << csv;
    std::cerr << "final state: " << tr.back().transpose() << " (" << tr.stats().accepted << " accepted, "
              << tr.stats().rejected << " rejected steps)\n";
  } else {
    rep::write_file(fs::path(c.out) / "trajectory.csv", csv);
    emit(c, "simulate", s);
    note(c, "wrote trajectory.csv (" + std::to_string(out.size()) + " rows) and simulate.json");
  }
  return kExitPass;
}

// ---------------------------------------------------------------- certify

struct CertifyArgs {
  std::string mode = "all";
  std::string lambda = "auto";
  int grid = 9;
  std::size_t pairs = 20;
  std::size_t directions = 64;
  std::string t_grid = "0.1,0.5,1,2,5";
};

struct CertifyOutcome {
  rep::Json body;
  bool pass = true;
};

CertifyOutcome run_certify(const Model& m, const CertifyArgs& a, std::uint64_t seed) {
  const QuadraticCone& cone = m.require_cone();
  const auto field = m.certified_field();
  if (cone.dim() != field->dim()) throw UsageError("cone dimension does not match the certified field");
  const Box box = m.slow_box();
  const bool alg = a.mode == "all" || a.mode == "algebraic";
  const bool dyn = a.mode == "all" || a.mode == "dynamic";
  const bool evt = a.mode == "eventual";
  if (!alg && !dyn && !evt) throw UsageError("--mode must be algebraic, dynamic, eventual or all");

  CertifyOutcome o;
  o.body = model_json(m);
  o.body["certified_field"] = m.sf ? "reduced" : "full";
  o.body["mode"] = a.mode;
  if (alg) {
    const LambdaSpec lambda = LambdaSpec::parse(a.lambda, m.lambda_scope(), m.cfg.params);
    const auto r = algebraic_certificate(*field, cone, box, a.grid, lambda);
    o.body["algebraic"] = rep::to_json(r);
    o.pass = o.pass && r.pass;
  }
  const std::vector<double> tg = parse_list(a.t_grid, "--t-grid");
  const auto pairs = random_pairs(box, a.pairs, seed);
  if (dyn) {
    const auto r = dynamic_certificate(*field, cone, pairs, tg, a.directions, seed);
    o.body["dynamic"] = rep::to_json(r);
    o.pass = o.pass && r.pass;
  }
  if (evt) {
    CooperativityReport r;
    if (m.sf) {
      const auto g = slow_manifold_field(*m.sf, 1);
      r = eventual_tstar(*g, cone, pairs, tg, a.directions, seed, {}, field.get(), box);
    } else {
      r = eventual_tstar(*field, cone, pairs, tg, a.directions, seed);
    }
    o.body["eventual"] = rep::to_json(r);
    o.pass = o.pass && r.tstar.has_value();
  }
  o.body["seed"] = seed;
  o.body["pass"] = o.pass;
  return o;
}

int cmd_certify(const Common& c, const CertifyArgs& a) {
  const Model m = load_model(c);
  const auto o = run_certify(m, a, c.seed.value_or(m.cfg.sweep.seed));
  emit(c, "certify", o.body);
  note(c, std::string("certify: ") + (o.pass ? "pass" : "FAIL"));
  return o.pass ? kExitPass : kExitFail;
}

// ---------------------------------------------------------------- manifold

struct ManifoldOutcome {
  rep::Json body;
  std::string csv;
  bool pass = false;
};

ManifoldOutcome run_manifold(const Model& m, int grid) {
  if (!m.sf) throw UsageError("manifold needs a slow-fast system");
  const SlowFastSystem& sf = *m.sf;
  const Box box = m.slow_box();
  const auto cert = certify_critical_manifold(sf, box, grid);
  const SlowManifoldApprox h0(m.sf, 0), h1(m.sf, 1);

  std::vector<std::string> head = m.slow_names();
  for (const auto& y : m.fast_names()) head.push_back(y + "_h0");
  for (const auto& y : m.fast_names()) head.push_back(y + "_h1");
  head.insert(head.end(), {"defect0", "defect1", "spectral_abscissa"});

  std::vector<std::vector<double>> rows(cert.points.size());
  std::vector<double> d0(cert.points.size()), d1(cert.points.size());
  for_each_index(cert.points.size(), Execution::Parallel, [&](std::size_t i) {
    const auto& p = cert.points[i];
    const ManifoldExpansion e = expand_manifold(sf, p.x);
    d0[i] = h0.defect(p.x);
    d1[i] = h1.defect(p.x);
    auto& r = rows[i];
    for (Eigen::Index k = 0; k < p.x.size(); ++k) r.push_back(p.x[k]);
    for (Eigen::Index k = 0; k < e.h0.size(); ++k) r.push_back(e.h0[k]);
    for (Eigen::Index k = 0; k < e.h1.size(); ++k) r.push_back(e.h1[k]);
    r.insert(r.end(), {d0[i], d1[i], p.spectral_abscissa});
  });
  std::ostringstream os;
  rep::write_csv_header(os, head);
  for (const auto& r : rows) rep::write_csv_row(os, r);

  ManifoldOutcome o;
  o.csv = os.str();
  o.body = model_json(m);
  o.body["grid_resolution"] = grid;
  o.body["certification"] = rep::to_json(cert);
  o.body["max_defect0"] = rep::number(*std::max_element(d0.begin(), d0.end()));
  o.body["max_defect1"] = rep::number(*std::max_element(d1.begin(), d1.end()));
  o.body["pass"] = cert.all_stable;
  o.pass = cert.all_stable;
  return o;
}

int cmd_manifold(const Common& c, int grid) {
  const Model m = load_model(c);
  const auto o = run_manifold(m, grid);
  if (c.out.empty()) {
    std::cout << o.csv;
  } else {
    rep::write_file(fs::path(c.out) / "manifold.csv", o.csv);
    emit(c, "manifold", o.body);
    note(c, "manifold: mu = " + rep::format_double(o.body["certification"]["mu_raw"].get<double>()) +
                (o.pass ? " (normally hyperbolic)" : " (NOT attracting everywhere)"));
  }
  return o.pass ? kExitPass : kExitFail;
}

// ---------------------------------------------------------------- classify / sweep

ClassifyOptions classify_options(const Model& m) {
  ClassifyOptions o;
  if (m.sf) o = slow_fast_classify_options(*m.sf, o);
  o.box = m.cfg.box;
  return o;
}

struct ClassifyArgs {
  std::string ic;
  std::string expect = "any";
};

bool kind_matches(OmegaKind k, const std::string& expect) {
  if (expect == "any") return true;
  if (expect == "closed") return k == OmegaKind::ClosedOrbit;
  if (expect == "equilibrium") return k == OmegaKind::Equilibrium;
  throw UsageError("--expect must be closed, equilibrium or any");
}

int cmd_classify(const Common& c, const ClassifyArgs& a) {
  const Model m = load_model(c);
  if (a.ic.empty()) throw UsageError("classify needs --ic");
  kind_matches(OmegaKind::Unresolved, a.expect);
  const Vec x0 = parse_vector(a.ic, m.cfg.sys.dim(), "--ic");
  const auto res = classify_omega(*m.full, x0, classify_options(m));
  rep::Json body = model_json(m);
  body["initial_state"] = rep::to_json(x0);
  body["classification"] = rep::to_json(res);
  emit(c, "classify", body);
  if (!c.out.empty() && res.orbit) rep::write_file(fs::path(c.out) / "orbit.csv", csv_of_trajectory(res.orbit->orbit, m.cfg.sys.states));
  std::string line = std::string("classify: ") + to_string(res.kind);
  if (res.orbit && res.kind == OmegaKind::ClosedOrbit) line += " period " + rep::format_double(res.orbit->period);
  if (!res.reason.empty()) line += " (" + res.reason + ")";
  note(c, line);
  return kind_matches(res.kind, a.expect) ? kExitPass : kExitFail;
}

struct SweepArgs {
  std::optional<std::size_t> n;
  std::optional<double> min_closed;
};

int cmd_sweep(const Common& c, const SweepArgs& a) {
  const Model m = load_model(c);
  SweepOptions so;
  so.classify = classify_options(m);
  const std::size_t n = a.n.value_or(m.cfg.sweep.n);
  const std::uint64_t seed = c.seed.value_or(m.cfg.sweep.seed);
  const auto r = genericity_sweep(*m.full, m.require_box(), n, seed, so);
  rep::Json body = model_json(m);
  body["sweep"] = rep::to_json(r);
  const bool pass = !a.min_closed || r.closed_fraction() >= *a.min_closed;
  body["pass"] = pass;
  emit(c, "sweep", body);
  note(c, "sweep: " + std::to_string(r.closed_orbit) + " ClosedOrbit, " + std::to_string(r.equilibrium) +
              " Equilibrium, " + std::to_string(r.unresolved) + " Unresolved of " + std::to_string(r.n));
  return pass ? kExitPass : kExitFail;
}

// ---------------------------------------------------------------- parse-check

int cmd_parse_check(const Common& c, const std::string& expr) {
  const Model m = load_model(c);
  const std::string canonical = to_string(m.cfg.sys);
  const bool round_trip = structurally_equal(parse_system(canonical), m.cfg.sys);
  rep::Json body = model_json(m);
  body["canonical"] = canonical;
  body["round_trip"] = round_trip;
  body["fast_states"] = m.cfg.sys.fast_states;
  if (m.cfg.cone) body["cone_rank"] = m.cfg.cone->rank();
  if (!expr.empty()) body["expression"] = to_string(parse_expression(expr, m.cfg.sys.scope()), m.cfg.sys.scope());
  emit(c, "parse-check", body);
  note(c, std::string("parse-check: ok") + (round_trip ? "" : " (round trip FAILED)"));
  return round_trip ? kExitPass : kExitFail;
}

// ---------------------------------------------------------------- demo-paper

struct DemoArgs {
  double t = 50.0;
  std::size_t n = 200;
  std::size_t dense = 2001;
  std::string lambda = "3*(x^2+y^2+z^2)";
};

int cmd_demo_paper(Common c, const DemoArgs& a) {
  if (c.builtin.empty() && c.config.empty()) c.builtin = "paper-4d";
  if (c.out.empty()) c.out = "paper_demo";
  const Model m = load_model(c);
  if (!m.sf) throw UsageError("demo-paper needs a slow-fast system");
  const std::uint64_t seed = c.seed.value_or(42);
  const fs::path out(c.out);
  rep::Json summary = model_json(m);

  // equilibria of the reduced system
  const auto reduced = m.certified_field();
  const auto eqs = find_equilibria(*reduced, m.slow_box(), 5);
  rep::Json ej = rep::Json::array();
  for (const auto& e : eqs) ej.push_back(rep::to_json(e));
  emit(c, "equilibria", {{"equilibria", ej}});
  summary["equilibria"] = eqs.size();
  note(c, "equilibria: " + std::to_string(eqs.size()));

  CertifyArgs ca;
  ca.lambda = a.lambda;
  const auto cert = run_certify(m, ca, seed);
  emit(c, "certify", cert.body);
  summary["certify_pass"] = cert.pass;
  note(c, std::string("certify: ") + (cert.pass ? "pass" : "FAIL"));
  if (!cert.pass) {
    emit(c, "demo", summary);
    return kExitFail;
  }

  const auto man = run_manifold(m, 9);
  rep::write_file(out / "manifold.csv", man.csv);
  emit(c, "manifold", man.body);
  summary["manifold_mu"] = man.body["certification"]["mu_raw"];
  note(c, "manifold: mu = " + rep::format_double(man.body["certification"]["mu_raw"].get<double>()));
  if (!man.pass) {
    emit(c, "demo", summary);
    return kExitFail;
  }

  const Vec ic = (Vec(4) << 2, 2, 3, 12).finished();
  if (m.cfg.sys.dim() != 4) throw UsageError("demo-paper expects the four-dimensional paper system");
  const auto cls = classify_omega(*m.full, ic, classify_options(m));
  emit(c, "classify", {{"initial_state", rep::to_json(ic)}, {"classification", rep::to_json(cls)}});
  summary["classification"] = to_string(cls.kind);
  if (cls.orbit) summary["period"] = rep::number(cls.orbit->period);
  note(c, std::string("classify (2,2,3,12): ") + to_string(cls.kind));

  const Trajectory tr = flow(*m.full, ic, 0.0, a.t, m.integrator).resample(a.dense);
  const auto& names = m.cfg.sys.states;
  rep::write_file(out / "timeseries.csv", csv_of_trajectory(tr, names));
  const std::vector<std::pair<std::string, std::vector<std::size_t>>> projections{
      {"xyz", {0, 1, 2}}, {"xyw", {0, 1, 3}}, {"yzw", {1, 2, 3}}, {"xzw", {0, 2, 3}}};
  for (const auto& [tag, cols] : projections) {
    std::ostringstream os;
    rep::write_projection_csv(os, tr, names, cols);
    rep::write_file(out / ("projection_" + tag + ".csv"), os.str());
  }
  note(c, "wrote timeseries.csv and projection_{xyz,xyw,yzw,xzw}.csv");

  SweepOptions so;
  so.classify = classify_options(m);
  const auto sw = genericity_sweep(*m.full, m.require_box(), a.n, seed, so);
  emit(c, "sweep", {{"sweep", rep::to_json(sw)}});
  summary["sweep_closed_fraction"] = rep::number(sw.closed_fraction());
  note(c, "sweep: " + std::to_string(sw.closed_orbit) + "/" + std::to_string(sw.n) + " ClosedOrbit");

  const bool pass = cls.kind == OmegaKind::ClosedOrbit;
  summary["pass"] = pass;
  emit(c, "demo", summary);
  return pass ? kExitPass : kExitFail;
}

void add_common(CLI::App* sub, Common& c) {
  auto* b = sub->add_option("--builtin", c.builtin, "Builtin system (paper-4d, paper-3d-limit, circle)");
  auto* f = sub->add_option("--config", c.config, "Config file");
  b->excludes(f);
  sub->add_option("--eps", c.eps, "Singular-perturbation parameter (slow-fast systems)");
  sub->add_option("--seed", c.seed, "Random seed");
  sub->add_option("--out", c.out, "Output directory");
  sub->add_option("--threads", c.threads, "OpenMP threads (0 = runtime default)")->check(CLI::NonNegativeNumber);
  sub->add_flag("--no-timestamp", c.no_timestamp, "Omit generated_at from reports");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"coneflow: cone-cooperative and slow-fast dynamics toolkit"};
  app.require_subcommand(1);
  Common common;

  SimulateArgs sim;
  auto* s_sim = app.add_subcommand("simulate", "Integrate one initial condition, write a trajectory CSV");
  add_common(s_sim, common);
  s_sim->add_option("--ic", sim.ic, "Initial state, comma-separated");
  s_sim->add_option("--t", sim.t, "End time");
  s_sim->add_option("--dense", sim.dense, "Resample to N uniform times");

  CertifyArgs cer;
  auto* s_cer = app.add_subcommand("certify", "Cone-cooperativity certificates");
  add_common(s_cer, common);
  s_cer->add_option("--lambda", cer.lambda, "lambda expression or 'auto'");
  s_cer->add_option("--mode", cer.mode, "algebraic | dynamic | eventual | all");
  s_cer->add_option("--grid", cer.grid, "Algebraic grid resolution per axis");
  s_cer->add_option("--pairs", cer.pairs, "Dynamic: number of point pairs");
  s_cer->add_option("--directions", cer.directions, "Dynamic: boundary directions");
  s_cer->add_option("--t-grid", cer.t_grid, "Dynamic: comma-separated times");

  int man_grid = 9;
  auto* s_man = app.add_subcommand("manifold", "Critical and first-order slow manifold on a grid");
  add_common(s_man, common);
  s_man->add_option("--grid", man_grid, "Grid resolution per slow axis")->check(CLI::Range(2, 1000));

  ClassifyArgs cla;
  auto* s_cla = app.add_subcommand("classify", "Classify the omega-limit set of one initial condition");
  add_common(s_cla, common);
  s_cla->add_option("--ic", cla.ic, "Initial state, comma-separated");
  s_cla->add_option("--expect", cla.expect, "closed | equilibrium | any; mismatch exits 2");

  SweepArgs swa;
  auto* s_swp = app.add_subcommand("sweep", "Genericity sweep over random initial conditions");
  add_common(s_swp, common);
  s_swp->add_option("--n", swa.n, "Number of initial conditions");
  s_swp->add_option("--min-closed", swa.min_closed, "Exit 2 when the ClosedOrbit fraction is below this");

  DemoArgs demo;
  auto* s_demo = app.add_subcommand("demo-paper", "Full reproduction bundle for the four-dimensional example");
  add_common(s_demo, common);
  s_demo->add_option("--t", demo.t, "Time span of the figure trajectories");
  s_demo->add_option("--n", demo.n, "Sweep size");
  s_demo->add_option("--dense", demo.dense, "Samples in the figure CSVs");
  s_demo->add_option("--lambda", demo.lambda, "lambda for the algebraic certificate");

  std::string expr;
  auto* s_pc = app.add_subcommand("parse-check", "Parse and validate a system, print its canonical form");
  add_common(s_pc, common);
  s_pc->add_option("--expr", expr, "Also parse an expression over the system's names");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitPass : kExitError;
  }

  try {
    set_parallel_threads(common.threads);
    if (s_sim->parsed()) return cmd_simulate(common, sim);
    if (s_cer->parsed()) return cmd_certify(common, cer);
    if (s_man->parsed()) return cmd_manifold(common, man_grid);
    if (s_cla->parsed()) return cmd_classify(common, cla);
    if (s_swp->parsed()) return cmd_sweep(common, swa);
    if (s_demo->parsed()) return cmd_demo_paper(common, demo);
    if (s_pc->parsed()) return cmd_parse_check(common, expr);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}
