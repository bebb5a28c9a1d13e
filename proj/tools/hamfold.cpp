// hamfold: command-line front end.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hamfold/acceptance.hpp"
#include "hamfold/dirac.hpp"
#include "hamfold/library.hpp"
#include "hamfold/multitime.hpp"
#include "hamfold/report.hpp"

namespace fs = std::filesystem;
using hamfold::Error;
using hamfold::ErrorCode;
using hamfold::report::Json;

namespace {

struct Config {
  std::string command;
  std::string model;
  std::optional<std::size_t> np;
  std::uint64_t seed = 42;
  std::size_t samples = 100;
  std::optional<double> tol;
  double t1 = 10.0;
  double dt = 1e-3;
  std::string method = "rk4";
  std::string ic;
  std::string gauge;
  std::optional<std::string> out;
  std::string path;
  bool keep_going = false;
  std::vector<int> only;
};

[[noreturn]] void bad(const std::string& msg) { throw Error(ErrorCode::invalid_argument, "cli", msg); }

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else if (c != ' ') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

double parse_real(const std::string& s, const std::string& what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    bad("bad number '" + s + "' in " + what);
  }
  if (used != s.size() || !std::isfinite(v)) bad("bad number '" + s + "' in " + what);
  return v;
}

std::vector<double> parse_vector(const std::string& s, const std::string& what) {
  std::vector<double> out;
  if (s.empty()) return out;
  for (const std::string& item : split(s, ',')) out.push_back(parse_real(item, what));
  return out;
}

struct IcOverrides {
  std::optional<double> t;
  std::vector<std::pair<std::size_t, double>> q, qd, p;  // 0-based coordinate
};

IcOverrides parse_ic(const std::string& s) {
  IcOverrides o;
  if (s.empty()) return o;
  for (const std::string& item : split(s, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) bad("--ic entry '" + item + "' is not key=value");
    const std::string key = item.substr(0, eq);
    const double v = parse_real(item.substr(eq + 1), "--ic");
    if (key == "t") {
      o.t = v;
      continue;
    }
    std::size_t skip = 0;
    std::vector<std::pair<std::size_t, double>>* dest = nullptr;
    if (key.rfind("qd", 0) == 0) {
      skip = 2;
      dest = &o.qd;
    } else if (key.rfind("q", 0) == 0) {
      skip = 1;
      dest = &o.q;
    } else if (key.rfind("p", 0) == 0) {
      skip = 1;
      dest = &o.p;
    } else {
      bad("--ic key '" + key + "' is not t, q<k>, qd<k> or p<k>");
    }
    const std::string digits = key.substr(skip);
    if (digits.empty() || digits.find_first_not_of("0123456789") != std::string::npos || digits[0] == '0')
      bad("--ic key '" + key + "' has no valid index");
    dest->emplace_back(std::stoul(digits) - 1, v);
  }
  return o;
}

struct Setup {
  hamfold::LagrangianSystem sys;
  const hamfold::LibraryEntry* entry = nullptr;
};

Setup load(const Config& c) {
  if (c.model.empty()) bad(c.command + " needs a model name or file");
  Setup s{hamfold::resolve_model(c.model), hamfold::find_model(c.model)};
  if (c.np && *c.np > s.sys.n)
    bad("--np " + std::to_string(*c.np) + " exceeds n = " + std::to_string(s.sys.n));
  return s;
}

hamfold::Binding initial_binding(const Config& c, const Setup& s) {
  hamfold::Binding b;
  if (s.entry) {
    b = s.entry->ic;
  } else {
    b.q.assign(s.sys.n, 0.0);
    b.qd.assign(s.sys.n, 0.0);
  }
  const IcOverrides o = parse_ic(c.ic);
  for (const auto* list : {&o.q, &o.qd, &o.p})
    for (const auto& [k, v] : *list)
      if (k >= s.sys.n) bad("--ic index " + std::to_string(k + 1) + " exceeds n = " + std::to_string(s.sys.n));
  if (o.t) b.t = *o.t;
  for (const auto& [k, v] : o.q) b.q[k] = v;
  for (const auto& [k, v] : o.qd) b.qd[k] = v;
  return b;
}

/// Momentum overrides apply to canonical coordinates only.
void apply_momenta(const Config& c, const hamfold::HamiltonianBundle& b, hamfold::PhasePoint& x) {
  for (const auto& [k, v] : parse_ic(c.ic).p) {
    if (!b.partition().is_canonical(k))
      bad("--ic p" + std::to_string(k + 1) + ": coordinate carries no momentum at n_p = " +
          std::to_string(b.n_p()));
    x.p[b.partition().slot_of[k]] = v;
  }
}

hamfold::DynamicsOptions dynamics_options(const Config& c) {
  hamfold::DynamicsOptions o;
  o.gauge = parse_vector(c.gauge, "--gauge");
  return o;
}

fs::path out_dir(const Config& c) {
  const fs::path dir = c.out ? fs::path(*c.out) : fs::path(".");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::io_error, "cli", "cannot create '" + dir.string() + "': " + ec.message());
  return dir;
}

void write_json(const Config& c, const std::string& file, const Json& j) {
  hamfold::report::write_file((out_dir(c) / file).string(), hamfold::report::dump(j));
}

Json header(const Config& c) {
  Json j;
  j["command"] = c.command;
  j["model"] = c.model;
  j["seed"] = c.seed;
  return j;
}

std::string vec_text(const std::vector<double>& v) {
  std::string s = "(";
  for (std::size_t k = 0; k < v.size(); ++k) s += (k ? ", " : "") + hamfold::report::number(v[k]);
  return s + ")";
}

// ------------------------------------------------------------- commands

int cmd_analyze(const Config& c) {
  const Setup s = load(c);
  const hamfold::Dynamics d = hamfold::make_dynamics(s.sys, c.np, dynamics_options(c), {8, c.seed});
  const hamfold::HamiltonianBundle& b = d.bundle();
  const hamfold::Partition& part = b.partition();
  const hamfold::Classification& cls = d.classification();

  std::cout << "model " << s.sys.name << ": L = " << s.sys.source << "\n";
  std::cout << "n = " << s.sys.n << ", r_W = " << part.r_w << ", n_p = " << part.n_p << ", regime "
            << hamfold::regime_name(b.regime()) << "\n";
  std::cout << "canonical:";
  for (std::size_t i = 0; i < part.n_p; ++i) std::cout << " " << s.sys.labels[part.canonical(i)];
  std::cout << "\nnoncanonical:";
  for (std::size_t a = 0; a < part.n_nc(); ++a) std::cout << " " << s.sys.labels[part.noncanonical(a)];
  std::cout << "\nclassification " << hamfold::class_kind_name(cls.kind) << ", r_F = " << cls.r_F
            << ", gauge parameters = " << cls.gauge_parameters << "\n";

  Json j = header(c);
  j["lagrangian"] = s.sys.source;
  j["partition"] = hamfold::report::to_json(part, s.sys);
  j["regime"] = hamfold::regime_name(b.regime());
  j["classification"] = hamfold::report::to_json(cls);
  Json probes = Json::array();
  if (b.regime() == hamfold::Regime::nondynamical) {
    for (const hamfold::PhasePoint& x : hamfold::phase_probes(b, {3, c.seed})) {
      const hamfold::FGSystem fg = hamfold::build_FG(b, x);
      Json p;
      p["t"] = x.t;
      p["q"] = b.full_q(x);
      p["p"] = x.p;
      p["F"] = hamfold::report::to_json(fg.F);
      p["G"] = fg.G;
      probes.push_back(p);
      std::cout << "probe q = " << vec_text(b.full_q(x)) << " p = " << vec_text(x.p) << ": G = " << vec_text(fg.G)
                << "\n";
    }
  }
  j["probes"] = probes;

  bool ok = true;
  if (s.entry && !c.np) {
    const bool match = part.r_w == s.entry->expected_r_w && cls.kind == s.entry->expected_kind &&
                       cls.r_F == s.entry->expected_r_F;
    j["library_expectation"] = {{"r_W", s.entry->expected_r_w},
                                {"kind", hamfold::class_kind_name(s.entry->expected_kind)},
                                {"r_F", s.entry->expected_r_F},
                                {"match", match}};
    if (!match) std::cout << "FAIL analysis disagrees with the library record\n";
    ok = match;
  }
  if (c.out) write_json(c, "analyze.json", j);
  return ok ? 0 : 1;
}

int cmd_simulate(const Config& c) {
  const Setup s = load(c);
  const hamfold::Binding b0 = initial_binding(c, s);
  if (!(c.t1 > b0.t)) bad("--t1 must exceed the initial time " + hamfold::report::number(b0.t));
  const hamfold::Dynamics d = hamfold::make_dynamics(s.sys, c.np, dynamics_options(c), {8, c.seed});
  hamfold::PhasePoint x0 = d.bundle().phase_point_from_tangent(b0);
  apply_momenta(c, d.bundle(), x0);
  const hamfold::Method m = c.method == "rk45" ? hamfold::Method::rk45 : hamfold::Method::rk4;
  const hamfold::Trajectory tr = hamfold::integrate(d, x0, {c.t1, c.dt, m, 1e-10, 1e-10});

  Json j = header(c);
  j["partition"] = hamfold::report::to_json(d.bundle().partition(), s.sys);
  j["classification"] = hamfold::report::to_json(d.classification());
  j["t1"] = c.t1;
  j["dt"] = c.dt;
  j["gauge"] = d.options().gauge;
  j["trajectory"] = hamfold::report::trajectory_summary(tr);
  const bool conserved = !hamfold::explicitly_time_dependent(s.sys);
  j["H0_conservation"] = conserved ? Json("checked") : Json("skipped: L depends explicitly on t");
  if (tr.complete()) {
    try {
      j["second_order_residual"] = hamfold::second_order_residual(d.bundle(), tr).max;
    } catch (const Error& e) {
      j["second_order_residual"] = hamfold::report::to_json(e);
    }
  }
  const fs::path dir = out_dir(c);
  hamfold::report::write_file((dir / "trajectory.csv").string(), hamfold::report::trajectory_csv(tr));
  hamfold::report::write_file((dir / "simulate.json").string(), hamfold::report::dump(j));

  if (!tr.points.empty()) {
    const hamfold::TrajectoryPoint& e = tr.points.back();
    std::cout << "t = " << hamfold::report::number(e.t) << " q = " << vec_text(e.q) << " p = " << vec_text(e.p)
              << "\n";
  }
  if (tr.error) throw *tr.error;
  return 0;
}

int cmd_brackets(const Config& c) {
  const Setup s = load(c);
  const hamfold::Dynamics d = hamfold::make_dynamics(s.sys, c.np, dynamics_options(c), {8, c.seed});
  const double tol_leibniz = c.tol.value_or(1e-8);
  std::vector<hamfold::BracketKind> kinds{hamfold::BracketKind::poisson};
  if (d.bundle().regime() == hamfold::Regime::nondynamical && d.bundle().n_nc() > 0) {
    kinds.push_back(d.classification().kind == hamfold::ClassKind::nongauge ? hamfold::BracketKind::nongauge
                                                                              : hamfold::BracketKind::gauge);
  }
  Json j = header(c);
  Json reports = Json::array();
  bool ok = true;
  for (hamfold::BracketKind k : kinds) {
    hamfold::AxiomSettings st;
    st.points = c.samples;
    st.seed = c.seed;
    if (k == hamfold::BracketKind::gauge) st.alpha1 = d.classification().alpha1;
    const hamfold::AxiomReport r = hamfold::check_bracket_axioms(k, d.bundle(), st);
    const bool pass = r.antisymmetry <= 1e-12 && r.leibniz <= tol_leibniz && r.jacobi <= 1e-5;
    Json rj = hamfold::report::to_json(r);
    rj["pass"] = pass;
    reports.push_back(rj);
    ok = ok && pass;
    std::cout << (pass ? "PASS " : "FAIL ") << hamfold::bracket_kind_name(k) << ": antisymmetry "
              << r.antisymmetry << ", leibniz " << r.leibniz << ", jacobi " << r.jacobi << " (" << r.points
              << " points, " << r.skipped_points << " skipped)\n";
  }
  j["reports"] = reports;
  j["pass"] = ok;
  write_json(c, "brackets.json", j);
  return ok ? 0 : 1;
}

int cmd_dirac(const Config& c) {
  const Setup s = load(c);
  if (!(c.t1 > 0.0)) bad("--t1 must be positive");
  const double tol = c.tol.value_or(1e-9);
  Json j = header(c);
  bool ok = true;
  const hamfold::ConstraintSet cs(hamfold::make_dynamics(s.sys, c.np, dynamics_options(c), {8, c.seed}));
  Json constraints = Json::array();
  for (const std::string& d : cs.describe()) {
    constraints.push_back(d);
    std::cout << d << "\n";
  }
  j["constraints"] = constraints;
  const hamfold::EquivalenceReport r = hamfold::verify_equivalence(cs, c.samples, c.seed);
  j["equivalence"] = hamfold::report::to_json(r);
  const bool eq = r.f_gap <= tol && r.dh0_gap <= tol && (!r.dirac_vs_nongauge || *r.dirac_vs_nongauge <= 1e-8);
  ok = ok && eq;
  std::cout << (eq ? "PASS" : "FAIL") << " equivalence: |F - {Phi,Phi}| " << r.f_gap << ", |D H0 - {H0,Phi}| "
            << r.dh0_gap << " ({Phi,H0} order: " << r.dh0_gap_swapped << ")";
  if (r.dirac_vs_nongauge) std::cout << ", |Dirac - nongauge| " << *r.dirac_vs_nongauge;
  std::cout << "\n";

  hamfold::Binding b0 = initial_binding(c, s);
  hamfold::PhasePoint x0 = cs.bundle().phase_point_from_tangent(b0);
  apply_momenta(c, cs.bundle(), x0);
  const hamfold::ExtendedRun run =
      hamfold::evolve_total(cs, cs.lift(x0), c.t1, c.dt, cs.dynamics().options().gauge);
  Json ev;
  ev["t1"] = c.t1;
  ev["dt"] = c.dt;
  ev["points"] = run.trajectory.points.size();
  ev["complete"] = run.trajectory.complete();
  ev["error"] = run.trajectory.error ? hamfold::report::to_json(*run.trajectory.error) : Json(nullptr);
  ev["constraint_drift"] = run.drift;
  const bool drift_ok = run.trajectory.complete() && run.drift <= 1e-6;
  ev["pass"] = drift_ok;
  j["total_hamiltonian_run"] = ev;
  ok = ok && drift_ok;
  std::cout << (drift_ok ? "PASS" : "FAIL") << " H_total evolution: constraint drift " << run.drift << "\n";

  Json counts = Json::array();
  const std::size_t r_w = cs.bundle().partition().r_w;
  for (std::size_t np = r_w; np <= s.sys.n; ++np) {
    const hamfold::ConstraintCount cc = hamfold::count_primary_constraints(s.sys, np, {8, c.seed});
    counts.push_back(hamfold::report::to_json(cc));
    std::cout << "n_p = " << np << ": " << cc.count << " primary constraints\n";
  }
  j["constraint_counts"] = counts;
  j["pass"] = ok;
  write_json(c, "dirac.json", j);
  return ok ? 0 : 1;
}

int cmd_multitime(const Config& c) {
  const Setup s = load(c);
  if (c.path.empty()) bad("multitime needs --path FILE");
  const hamfold::Dynamics d = hamfold::make_dynamics(s.sys, c.np, dynamics_options(c), {8, c.seed});
  const hamfold::MultiTimeSystem mt = hamfold::MultiTimeSystem::from_model(d.bundle());
  const hamfold::TimePath path = hamfold::load_path_file(c.path, mt.m());
  hamfold::PhasePoint x0 = d.bundle().phase_point_from_tangent(initial_binding(c, s));
  apply_momenta(c, d.bundle(), x0);
  hamfold::MultiTimePoint ic = mt.make_point();
  ic.q = x0.q_c;
  ic.p = x0.p;
  const hamfold::PathResult r = hamfold::integrate_path(mt, ic, path, c.dt);
  const hamfold::IntegrabilityReport ir =
      hamfold::check_integrability(mt, hamfold::multitime_probes(mt, c.samples, c.seed));

  Json j = header(c);
  j["times"] = mt.tau_labels();
  j["waypoints"] = path.waypoints();
  j["path_length"] = path.length();
  j["samples"] = r.trace.size();
  j["max_residual_along_path"] = r.max_residual;
  j["integrability"] = hamfold::report::to_json(ir);
  j["q_end"] = r.end.q;
  j["p_end"] = r.end.p;
  const fs::path dir = out_dir(c);
  hamfold::report::write_file((dir / "path.csv").string(), hamfold::report::path_csv(mt, r));
  hamfold::report::write_file((dir / "multitime.json").string(), hamfold::report::dump(j));
  std::cout << "end tau = " << vec_text(r.end.tau) << " q = " << vec_text(r.end.q) << " p = " << vec_text(r.end.p)
            << "\nmax residual along path " << r.max_residual << ", at probes " << ir.max << "\n";
  return 0;
}

int cmd_selftest(const Config& c) {
  hamfold::acceptance::Settings st;
  st.seed = c.seed;
  st.keep_going = c.keep_going;
  st.only = c.only;
  for (int id : st.only)
    if (id < 1 || id > hamfold::acceptance::criterion_count) bad("--only " + std::to_string(id) + " out of range");
  const hamfold::acceptance::Report rep = hamfold::acceptance::run(st, [](const auto& r) {
    std::cout << hamfold::acceptance::line(r) << std::endl;
  });
  if (rep.stopped_at) std::cout << "stopped at criterion " << *rep.stopped_at << "\n";
  if (c.out) write_json(c, "selftest.json", hamfold::acceptance::to_json(rep));
  return rep.all_pass() ? 0 : 1;
}

std::uint64_t env_seed() {
  const char* s = std::getenv("HAMFOLD_SEED");
  if (!s || !*s) return 42;
  const std::string v = s;
  if (v.find_first_not_of("0123456789") != std::string::npos) bad("HAMFOLD_SEED '" + v + "' is not an integer");
  try {
    return std::stoull(v);
  } catch (const std::exception&) {
    bad("HAMFOLD_SEED '" + v + "' out of range");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hamfold: partial Hamiltonian formalism for degenerate Lagrangians"};
  app.require_subcommand(1);
  Config c;
  std::optional<std::uint64_t> seed;

  auto common = [&](CLI::App* sub, bool needs_model) {
    if (needs_model)
      sub->add_option("model", c.model, "library name or model file")->required();
    sub->add_option("--np", c.np, "number of coordinates carrying a momentum");
    sub->add_option("--seed", seed, "seed for every random choice (else HAMFOLD_SEED, else 42)");
    sub->add_option("--out", c.out, "output directory");
  };
  auto* analyze = app.add_subcommand("analyze", "Hessian rank, partition, classification, F and G at probes");
  common(analyze, true);
  auto* simulate = app.add_subcommand("simulate", "integrate and write trajectory.csv, simulate.json");
  common(simulate, true);
  auto* brackets = app.add_subcommand("brackets", "bracket axiom report");
  common(brackets, true);
  auto* dirac = app.add_subcommand("dirac", "constraint reconstruction report");
  common(dirac, true);
  auto* multitime = app.add_subcommand("multitime", "integrate along a path in the times");
  common(multitime, true);
  auto* selftest = app.add_subcommand("selftest", "run the acceptance suite");
  selftest->add_option("--seed", seed, "seed (else HAMFOLD_SEED, else 42)");
  selftest->add_option("--out", c.out, "directory for selftest.json");
  selftest->add_flag("--keep-going", c.keep_going, "run every criterion instead of stopping at the first failure");
  selftest->add_option("--only", c.only, "criterion ids")->delimiter(',');

  for (CLI::App* sub : {simulate, brackets, dirac, multitime})
    sub->add_option("--samples", c.samples, "random points");
  for (CLI::App* sub : {brackets, dirac}) sub->add_option("--tol", c.tol, "tolerance");
  for (CLI::App* sub : {simulate, dirac, multitime}) {
    sub->add_option("--dt", c.dt, "step");
    sub->add_option("--ic", c.ic, "initial data k=v,... over t, q<k>, qd<k>, p<k>");
    sub->add_option("--gauge", c.gauge, "constant gauge velocities v,...");
  }
  for (CLI::App* sub : {simulate, dirac}) sub->add_option("--t1", c.t1, "final time");
  simulate->add_option("--method", c.method, "rk4 or rk45")->check(CLI::IsMember({"rk4", "rk45"}));
  multitime->add_option("--path", c.path, "path file: lines of comma-separated times");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << Error(ErrorCode::invalid_argument, "cli", e.what()).record() << "\n";
    return hamfold::exit_code(ErrorCode::invalid_argument);
  }

  try {
    c.command = app.get_subcommands().front()->get_name();
    c.seed = seed ? *seed : env_seed();
    if (!(c.dt > 0.0)) bad("--dt must be positive");
    if (c.samples == 0) bad("--samples must be positive");
    if (c.tol && !(*c.tol > 0.0)) bad("--tol must be positive");
    if (c.command == "analyze") return cmd_analyze(c);
    if (c.command == "simulate") return cmd_simulate(c);
    if (c.command == "brackets") return cmd_brackets(c);
    if (c.command == "dirac") return cmd_dirac(c);
    if (c.command == "multitime") return cmd_multitime(c);
    return cmd_selftest(c);
  } catch (const Error& e) {
    std::cerr << e.record() << "\n";
    return hamfold::exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << Error(ErrorCode::io_error, "cli", e.what()).record() << "\n";
    return hamfold::exit_code(ErrorCode::io_error);
  }
}
