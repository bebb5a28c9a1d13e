#include "hamfold/acceptance.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "hamfold/dirac.hpp"
#include "hamfold/library.hpp"
#include "hamfold/multitime.hpp"
#include "hamfold/reference.hpp"

namespace hamfold::acceptance {

namespace {

using report::Json;

std::string brief(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

/// Collects measured quantities and the failures among them.
class Check {
 public:
  explicit Check(CriterionResult& r) : r_(r) { r_.data = Json::object(); }

  bool le(const std::string& key, double value, double tol) {
    const bool ok = std::isfinite(value) && value <= tol;
    record(key, value, "<=", tol, ok);
    ++numeric_;
    if (ok) worst_ = std::max(worst_, tol > 0 ? value / tol : 0.0);
    return ok;
  }

  bool gt(const std::string& key, double value, double bound) {
    const bool ok = std::isfinite(value) && value > bound;
    record(key, value, ">", bound, ok);
    ++checks_;
    return ok;
  }

  bool is(const std::string& key, bool ok, const std::string& note) {
    Json j;
    j["pass"] = ok;
    j["note"] = note;
    r_.data[key] = j;
    ++checks_;
    if (!ok) failures_.push_back(key + ": " + note);
    return ok;
  }

  void info(const std::string& key, Json value) { r_.data[key] = std::move(value); }

  void error(const std::string& key, const Error& e) {
    r_.data[key] = report::to_json(e);
    failures_.push_back(key + ": " + std::string(error_name(e.code())) + " (" + e.what() + ")");
  }

  void finish() {
    r_.pass = failures_.empty();
    if (r_.pass) {
      r_.summary = std::to_string(checks_ + numeric_) + " checks hold";
      if (numeric_) r_.summary += ", worst measured/tolerance ratio " + brief(worst_);
      return;
    }
    r_.summary.clear();
    for (std::size_t k = 0; k < failures_.size(); ++k) r_.summary += (k ? "; " : "") + failures_[k];
  }

 private:
  void record(const std::string& key, double value, const char* rel, double bound, bool ok) {
    Json j;
    j["value"] = std::isfinite(value) ? Json(value) : Json(report::number(value));
    j["bound"] = std::string(rel) + " " + brief(bound);
    j["pass"] = ok;
    r_.data[key] = j;
    if (!ok) failures_.push_back(key + " = " + brief(value) + " (need " + rel + " " + brief(bound) + ")");
  }

  CriterionResult& r_;
  std::vector<std::string> failures_;
  double worst_ = 0.0;
  int numeric_ = 0;
  int checks_ = 0;
};

IntegrateSettings rk4(double t1) { return {t1, 1e-3, Method::rk4, 1e-8, 1e-8}; }

Trajectory run_model(const LibraryEntry& e, std::optional<std::size_t> np, double t1 = 10.0) {
  const Dynamics d = make_dynamics(e.system(), np);
  return integrate(d, d.bundle().phase_point_from_tangent(e.ic), rk4(t1));
}

std::string tag(const std::string& model, std::size_t np) { return model + "/n_p=" + std::to_string(np); }

// -------------------------------------------------------------- criteria

void formalism_equivalence(Check& c) {
  for (const char* name : {"osc1", "osc2"}) {
    const LibraryEntry& e = *find_model(name);
    const Trajectory el = reference::euler_lagrange(e.system(), e.ic, 10.0, 1e-3);
    for (std::size_t np = 0; np <= e.n; ++np) {
      const Trajectory tr = run_model(e, np);
      if (!tr.complete()) {
        c.error(tag(name, np), *tr.error);
        continue;
      }
      c.le(tag(name, np) + " max|q - q_EL|", max_q_difference(tr, el), 1e-6);
    }
  }
}

void limit_cases(Check& c) {
  for (const char* name : {"osc1", "osc2"}) {
    const LibraryEntry& e = *find_model(name);
    const Dynamics d = make_dynamics(e.system(), e.n);
    const PhasePoint x0 = d.bundle().phase_point_from_tangent(e.ic);
    const Trajectory tr = integrate(d, x0, rk4(10.0));
    std::vector<double> p0(e.n);
    const Partition& part = d.bundle().partition();
    for (std::size_t i = 0; i < e.n; ++i) p0[part.canonical(i)] = x0.p[i];
    const Trajectory fh = reference::full_hamilton(e.system(), 0.0, e.ic.q, p0, 10.0, 1e-3);
    double dp = 0.0;
    for (std::size_t k = 0; k < tr.points.size(); ++k)
      for (std::size_t i = 0; i < e.n; ++i)
        dp = std::max(dp, std::abs(tr.points[k].p[i] - fh.points[k].p[part.canonical(i)]));
    c.le(tag(name, e.n) + " max|q - q_full|", max_q_difference(tr, fh), 1e-10);
    c.le(tag(name, e.n) + " max|p - p_full|", dp, 1e-10);
  }
  for (const char* name : {"osc1", "osc2", "forced"}) {
    const LibraryEntry& e = *find_model(name);
    const Dynamics d = make_dynamics(e.system(), 0);
    const Trajectory tr = integrate(d, d.bundle().phase_point_from_tangent(e.ic), rk4(10.0));
    const Trajectory el = reference::euler_lagrange(e.system(), e.ic, 10.0, 1e-3);
    c.le(tag(name, 0) + " max|q - q_EL|", max_q_difference(tr, el), 1e-6);
    // H0 + H_a qd^a = -L when no coordinate carries a momentum
    double id = 0.0;
    for (std::size_t k = 0; k < tr.points.size(); k += 50) {
      const TrajectoryPoint& p = tr.points[k];
      PhasePoint x = d.bundle().make_point(p.t);
      x.q_nc = p.q;
      x.qd_nc = p.qd;
      const HamiltonianEvaluation ev = d.bundle().evaluate(x);
      double s = ev.h0.value + e.system().L(p.t, p.q, p.qd, {});
      for (std::size_t a = 0; a < e.n; ++a) s += ev.h_alpha[a].value * p.qd[a];
      id = std::max(id, std::abs(s));
    }
    c.le(tag(name, 0) + " max|H0 + H_a qd^a + L|", id, 1e-10);
  }
  const LibraryEntry& f = *find_model("firstorder");
  const Trajectory tr = run_model(f, 0);
  c.le("firstorder/n_p=0 max|q - q_EL|", max_q_difference(tr, reference::reduced(f.system(), *f.oracle, f.ic, 10.0, 1e-3)),
       1e-6);
}

void singular_nongauge(Check& c) {
  const LibraryEntry& e = *find_model("firstorder");
  const Dynamics d = make_dynamics(e.system());
  const Classification& cls = d.classification();
  c.is("classification", cls.kind == ClassKind::nongauge && cls.r_F == 2,
       std::string(class_kind_name(cls.kind)) + ", r_F = " + std::to_string(cls.r_F));
  const HamiltonianBundle& b = d.bundle();
  const Partition& part = b.partition();
  const double E[2][2] = {{0.0, -1.0}, {1.0, 0.0}};
  double dF = 0.0, dG = 0.0;
  for (const PhasePoint& x : phase_probes(b)) {
    const FGSystem fg = build_FG(b, x);
    const std::vector<double> q = b.full_q(x);
    for (std::size_t a = 0; a < 2; ++a) {
      dG = std::max(dG, std::abs(fg.G[a] - q[part.noncanonical(a)]));
      for (std::size_t k = 0; k < 2; ++k)
        dF = std::max(dF, std::abs(fg.F(a, k) - E[part.noncanonical(a)][part.noncanonical(k)]));
    }
  }
  c.le("max|F - [[0,-1],[1,0]]|", dF, 1e-12);
  c.le("max|G - (q1,q2)|", dG, 1e-12);
  const Trajectory period = integrate(d, b.phase_point_from_tangent({0.0, {1.0, 0.0}, {0.0, 0.0}, {}}),
                                      rk4(2.0 * std::numbers::pi));
  const TrajectoryPoint& end = period.points.back();
  c.le("|q(2 pi) - (1,0)|", std::max(std::abs(end.q[0] - 1.0), std::abs(end.q[1])), 1e-5);
  c.le("H0 drift over t=10", h0_drift(run_model(e, std::nullopt)), 1e-8);
}

void singular_gauge(Check& c, std::uint64_t seed) {
  const LibraryEntry& e = *find_model("gauge1");
  const LagrangianSystem sys = e.system();
  const Dynamics d = make_dynamics(sys);
  const Classification& cls = d.classification();
  c.is("classification",
       cls.kind == ClassKind::abelian_limit && cls.max_abs_F <= d.bundle().pivot_tol(),
       std::string(class_kind_name(cls.kind)) + ", max|F| = " + brief(cls.max_abs_F));
  try {
    integrate(d, d.bundle().phase_point_from_tangent({0.0, {0.0, 0.5}, {0.8, 0.0}, {}}), rk4(1.0));
    c.is("p1 != 0 rejected", false, "integration accepted p1 = 0.3");
  } catch (const Error& err) {
    c.is("p1 != 0 rejected", err.code() == ErrorCode::initial_condition_inconsistent,
         std::string(error_name(err.code())));
  }
  const Trajectory tr = integrate(d, d.bundle().phase_point_from_tangent(e.ic), rk4(10.0));
  double lin = 0.0;
  for (const TrajectoryPoint& p : tr.points) lin = std::max(lin, std::abs(p.q[0] - (e.ic.q[0] + e.ic.q[1] * p.t)));
  c.le("max|q1(t) - q1(0) - q2(0) t|", lin, 1e-8);
  Rng rng(seed);
  double p1 = 0.0, spread = 0.0;
  for (int k = 0; k < 3; ++k) {
    DynamicsOptions o;
    const double g = rng.uniform(0.1, 1.0) * (k % 2 ? -1.0 : 1.0);
    o.gauge = {g};
    const Dynamics dg = make_dynamics(sys, std::nullopt, o);
    const Trajectory tg = integrate(dg, dg.bundle().phase_point_from_tangent(e.ic), rk4(10.0));
    for (const TrajectoryPoint& p : tg.points) p1 = std::max(p1, std::abs(p.p[0]));
    spread = std::max(spread, std::abs(tg.points.back().q[1] - tr.points.back().q[1]));
  }
  c.le("max|p1| under varied gauge", p1, 1e-10);
  c.gt("q2(10) change under varied gauge", spread, 1e-3);
}

void gauge_decomposition(Check& c, std::uint64_t seed) {
  Rng rng(seed);
  {
    const Dynamics d = make_dynamics(find_model("rotgauge")->system());
    const HamiltonianBundle& b = d.bundle();
    double rows = 0.0, gres = 0.0;
    for (int k = 0; k < 50; ++k) {
      PhasePoint x = b.make_point(rng.uniform(0, 1));
      const double s = rng.uniform(-1, 1);
      for (std::size_t i = 0; i < b.n_p(); ++i) {
        x.q_c[i] = rng.uniform(-1, 1);
        x.p[i] = s * x.q_c[i];  // zero angular momentum: consistent
      }
      x.q_nc[0] = rng.uniform(-1, 1);
      const GaugeDecomposition g = decompose(build_FG(b, x), b.pivot_tol(), d.classification().alpha1);
      rows = std::max(rows, g.row_residual);
      gres = std::max(gres, g.max_g_residual());
    }
    c.info("rotgauge split", {{"alpha1", d.classification().alpha1.size()}, {"alpha2", d.classification().alpha2.size()}});
    c.le("rotgauge max|F_a2b - lambda F_a1b|", rows, 1e-8);
    c.le("rotgauge max|G_a2 - lambda G_a1|", gres, 1e-8);
  }
  {
    // rank 2 of 3: lambda is a nontrivial 1x2 row
    const Dynamics d = make_dynamics(find_model("gauge3")->system());
    const HamiltonianBundle& b = d.bundle();
    double rows = 0.0, gres = 0.0;
    for (int k = 0; k < 50; ++k) {
      const GaugeDecomposition g =
          decompose(build_FG(b, random_phase_point(b, rng)), b.pivot_tol(), d.classification().alpha1);
      rows = std::max(rows, g.row_residual);
      gres = std::max(gres, g.max_g_residual());
    }
    c.le("gauge3 max|F_a2b - lambda F_a1b|", rows, 1e-8);
    c.le("gauge3 max|G_a2 - lambda G_a1|", gres, 1e-8);
  }
}

void bracket_axioms(Check& c, std::uint64_t seed) {
  struct Case {
    BracketKind kind;
    const char* model;
  };
  for (const Case& k : {Case{BracketKind::poisson, "osc2"}, Case{BracketKind::nongauge, "firstorder"},
                        Case{BracketKind::gauge, "rotgauge"}}) {
    const Dynamics d = make_dynamics(find_model(k.model)->system());
    AxiomSettings s;
    s.seed = seed;
    if (k.kind == BracketKind::gauge) s.alpha1 = d.classification().alpha1;
    const AxiomReport r = check_bracket_axioms(k.kind, d.bundle(), s);
    const std::string p = std::string(bracket_kind_name(k.kind)) + "/" + k.model;
    c.info(p, report::to_json(r));
    c.is(p + " points", r.points == 100 && r.skipped_points == 0,
         std::to_string(r.points) + " points, " + std::to_string(r.skipped_points) + " skipped");
    c.le(p + " antisymmetry", r.antisymmetry, 1e-12);
    c.le(p + " leibniz", r.leibniz, 1e-8);
    c.le(p + " jacobi", r.jacobi, 1e-5);
  }
}

void dirac_reconstruction(Check& c, std::uint64_t seed) {
  for (const char* name : {"firstorder", "gauge1"}) {
    const LibraryEntry& e = *find_model(name);
    const ConstraintSet cs = build_constraints(e.system());
    const EquivalenceReport r = verify_equivalence(cs, 100, seed);
    c.info(std::string(name) + " report", report::to_json(r));
    c.le(std::string(name) + " max|F - {Phi,Phi}|", r.f_gap, 1e-9);
    c.le(std::string(name) + " max|D H0 - {H0,Phi}|", r.dh0_gap, 1e-9);
    if (r.dirac_vs_nongauge) c.le(std::string(name) + " max|nongauge - Dirac|", *r.dirac_vs_nongauge, 1e-8);
    const ExtendedRun run = evolve_total(cs, cs.lift(cs.bundle().phase_point_from_tangent(e.ic)), 10.0, 1e-3);
    if (!run.trajectory.complete()) {
      c.error(std::string(name) + " H_total evolution", *run.trajectory.error);
    } else {
      c.le(std::string(name) + " constraint drift", run.drift, 1e-6);
    }
  }
  const LagrangianSystem rot = find_model("rotgauge")->system();
  const std::size_t r_w = find_model("rotgauge")->expected_r_w;
  for (std::size_t k : {1u, 2u}) {
    const std::string key = "rotgauge k=" + std::to_string(k);
    try {
      const ConstraintCount cc = count_primary_constraints(rot, r_w + k);
      c.info(key + " count", report::to_json(cc));
      c.is(key, cc.count == k, std::to_string(cc.count) + " primary constraints");
    } catch (const Error& err) {
      c.error(key, err);
    }
  }
}

void multi_time(Check& c) {
  // (a) residual <= 1e-10 along both paths => endpoints agree
  Json cases = Json::array();
  bool implication = true;
  std::string broken;
  for (const LibraryEntry& e : library()) {
    const LagrangianSystem sys = e.system();
    const Dynamics d = make_dynamics(sys);
    if (d.bundle().regime() != Regime::nondynamical || d.bundle().n_nc() == 0) continue;
    const MultiTimeSystem mt = MultiTimeSystem::from_model(d.bundle());
    const PhasePoint x0 = d.bundle().phase_point_from_tangent(e.ic);
    MultiTimePoint ic = mt.make_point();
    ic.q = x0.q_c;
    ic.p = x0.p;
    std::vector<double> start{0.0}, end{1.0}, corner_a{1.0}, corner_b{0.0};
    for (double v : x0.q_nc) {
      start.push_back(v);
      end.push_back(v + 0.5);
      corner_a.push_back(v);
      corner_b.push_back(v + 0.5);
    }
    const PathResult a = integrate_path(mt, ic, TimePath({start, corner_a, end}), 1e-3);
    const PathResult b = integrate_path(mt, ic, TimePath({start, corner_b, end}), 1e-3);
    const double res = std::max(a.max_residual, b.max_residual);
    const double diff = endpoint_difference(a.end, b.end);
    const bool premise = res <= 1e-10;
    const bool holds = !premise || diff <= 1e-6;
    Json j;
    j["model"] = e.name;
    j["max_residual_along_paths"] = res;
    j["endpoint_difference"] = diff;
    j["premise"] = premise;
    j["holds"] = holds;
    cases.push_back(j);
    if (!holds) {
      implication = false;
      broken += (broken.empty() ? "" : ", ") + e.name + " (residual " + brief(res) + ", endpoints differ by " +
                brief(diff) + ")";
    }
  }
  c.info("two-path cases", cases);
  c.is("residual <= 1e-10 implies endpoint agreement <= 1e-6", implication,
       implication ? "holds on every library system" : "violated by " + broken);

  // (b) constructed non-integrable pair
  const MultiTimeSystem loop = MultiTimeSystem::from_expressions("counterexample", 1, {"p1*q2", "q1"});
  const MultiTimePoint o = loop.make_point();
  const PathResult la = integrate_path(loop, o, TimePath({{0, 0}, {1, 0}, {1, 1}}), 1e-3);
  const PathResult lb = integrate_path(loop, o, TimePath({{0, 0}, {0, 1}, {1, 1}}), 1e-3);
  c.gt("counterexample unit-square mismatch", endpoint_difference(la.end, lb.end), 1e-3);

  // (c) tau^0-only paths against the dynamics module, gauge input zero
  double worst = 0.0;
  for (const LibraryEntry& e : library()) {
    const Dynamics d = make_dynamics(e.system());
    if (d.bundle().regime() != Regime::nondynamical || d.bundle().n_p() == 0) continue;
    const PhasePoint x0 = d.bundle().phase_point_from_tangent(e.ic);
    const Trajectory tr = integrate(d, x0, rk4(10.0));
    const MultiTimeSystem mt = MultiTimeSystem::from_model(d.bundle());
    MultiTimePoint ic = mt.make_point();
    ic.q = x0.q_c;
    ic.p = x0.p;
    std::vector<double> w0{0.0}, w1{10.0};
    for (double v : x0.q_nc) {
      w0.push_back(v);
      w1.push_back(v);
    }
    const PathResult r = integrate_path(mt, ic, TimePath({w0, w1}), 1e-3);
    if (r.trace.size() != tr.points.size()) {
      c.is(e.name + " tau0 grid", false, "sample counts differ");
      continue;
    }
    const Partition& part = d.bundle().partition();
    double diff = 0.0;
    for (std::size_t k = 0; k < tr.points.size(); ++k)
      for (std::size_t i = 0; i < part.n_p; ++i) {
        diff = std::max(diff, std::abs(r.trace[k].x.q[i] - tr.points[k].q[part.canonical(i)]));
        diff = std::max(diff, std::abs(r.trace[k].x.p[i] - tr.points[k].p[i]));
      }
    worst = std::max(worst, diff);
  }
  c.le("tau0-only path vs dynamics", worst, 1e-6);
}

void second_order(Check& c) {
  for (const LibraryEntry& e : library()) {
    const Dynamics d = make_dynamics(e.system());
    const Trajectory tr = integrate(d, d.bundle().phase_point_from_tangent(e.ic), rk4(10.0));
    c.le(tag(e.name, d.bundle().n_p()), second_order_residual(d.bundle(), tr).max, 1e-4);
  }
  // dynamical regime: regular models with fewer momenta than r_W
  struct Case {
    const char* model;
    std::size_t np;
  };
  for (const Case& k : {Case{"osc1", 0}, Case{"osc2", 0}, Case{"osc2", 1}, Case{"forced", 0}}) {
    const LibraryEntry& e = *find_model(k.model);
    const Dynamics d = make_dynamics(e.system(), k.np);
    const Trajectory tr = integrate(d, d.bundle().phase_point_from_tangent(e.ic), rk4(10.0));
    c.le(tag(k.model, k.np), second_order_residual(d.bundle(), tr).max, 1e-4);
  }
  const LibraryEntry& o = *find_model("osc2");
  const Trajectory el = reference::euler_lagrange(o.system(), o.ic, 10.0, 1e-3);
  const Dynamics d = make_dynamics(o.system(), 1);
  c.le("osc2/n_p=1 Euler-Lagrange trajectory", second_order_residual(d.bundle(), el).max, 1e-4);
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

Report run_range(const Settings& s, const std::vector<int>& ids) {
  Report r;
  r.seed = s.seed;
  for (int id : ids) r.results.push_back(run_criterion(id, s));
  return r;
}

std::vector<int> first_nine() { return {1, 2, 3, 4, 5, 6, 7, 8, 9}; }

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return {};
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void compare_dumps(Check& c, const std::string& a, const std::string& b, const std::string& what) {
  c.info("bytes", {a.size(), b.size()});
  c.info("fnv1a", {hex(fnv1a(a)), hex(fnv1a(b))});
  c.is(what, !a.empty() && a == b, a == b ? "identical" : "reports differ");
}

void determinism(Check& c, const Settings& s, const Report* previous) {
  if (s.cli) {
    namespace fs = std::filesystem;
    std::string dumps[2];
    for (int k = 0; k < 2; ++k) {
      const fs::path dir = fs::path(s.scratch_dir) / ("determinism_run" + std::to_string(k + 1));
      fs::create_directories(dir);
      const std::string cmd = "\"" + *s.cli + "\" selftest --seed " + std::to_string(s.seed) +
                              " --keep-going --out \"" + dir.string() + "\" > /dev/null 2>&1";
      const int rc = std::system(cmd.c_str());
      c.info("run " + std::to_string(k + 1) + " exit status", rc);
      dumps[k] = read_file((dir / "selftest.json").string());
    }
    compare_dumps(c, dumps[0], dumps[1], "two selftest runs, byte-identical selftest.json");
    return;
  }
  Settings inner = s;
  inner.keep_going = true;
  const std::string a = report::dump(to_json(previous ? *previous : run_range(inner, first_nine())));
  const std::string b = report::dump(to_json(run_range(inner, first_nine())));
  compare_dumps(c, a, b, "two in-process runs of criteria 1-9, byte-identical report");
}

CriterionResult run_with(int id, const Settings& s, const Report* previous) {
  CriterionResult r;
  r.id = id;
  r.name = criterion_name(id);
  Check c(r);
  try {
    switch (id) {
      case 1: formalism_equivalence(c); break;
      case 2: limit_cases(c); break;
      case 3: singular_nongauge(c); break;
      case 4: singular_gauge(c, s.seed); break;
      case 5: gauge_decomposition(c, s.seed + 5); break;
      case 6: bracket_axioms(c, s.seed); break;
      case 7: dirac_reconstruction(c, s.seed); break;
      case 8: multi_time(c); break;
      case 9: second_order(c); break;
      case 10: determinism(c, s, previous); break;
      default: throw Error(ErrorCode::invalid_argument, "cli", "no criterion " + std::to_string(id));
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::invalid_argument && e.module() == "cli") throw;
    c.error("unexpected error", e);
  }
  c.finish();
  return r;
}

}  // namespace

const char* criterion_name(int id) {
  switch (id) {
    case 1: return "formalism equivalence sweep";
    case 2: return "limit cases";
    case 3: return "singular nongauge";
    case 4: return "singular gauge";
    case 5: return "gauge decomposition identities";
    case 6: return "bracket axiom suite";
    case 7: return "Dirac reconstruction";
    case 8: return "multi-time";
    case 9: return "second-order residual";
    case 10: return "determinism";
    default: return "?";
  }
}

bool Report::all_pass() const {
  if (stopped_at) return false;
  for (const CriterionResult& r : results)
    if (!r.pass) return false;
  return true;
}

CriterionResult run_criterion(int id, const Settings& settings) { return run_with(id, settings, nullptr); }

Report run(const Settings& settings, const std::function<void(const CriterionResult&)>& on_result) {
  std::vector<int> ids = settings.only;
  if (ids.empty())
    for (int k = 1; k <= criterion_count; ++k) ids.push_back(k);
  Report rep;
  rep.seed = settings.seed;
  for (int id : ids) {
    const Report* previous = nullptr;
    Report first;
    if (id == 10) {
      // reuse this run's own results when they cover 1-9
      for (const CriterionResult& r : rep.results)
        if (r.id >= 1 && r.id <= 9) first.results.push_back(r);
      first.seed = settings.seed;
      if (first.results.size() == 9) previous = &first;
    }
    CriterionResult r = run_with(id, settings, previous);
    if (on_result) on_result(r);
    const bool failed = !r.pass;
    rep.results.push_back(std::move(r));
    if (failed && !settings.keep_going) {
      rep.stopped_at = id;
      break;
    }
  }
  return rep;
}

report::Json to_json(const Report& r) {
  Json j;
  j["command"] = "selftest";
  j["seed"] = r.seed;
  Json arr = Json::array();
  std::size_t passed = 0;
  for (const CriterionResult& c : r.results) {
    Json k;
    k["id"] = c.id;
    k["name"] = c.name;
    k["pass"] = c.pass;
    k["summary"] = c.summary;
    k["data"] = c.data;
    arr.push_back(k);
    if (c.pass) ++passed;
  }
  j["criteria"] = arr;
  j["passed"] = passed;
  j["failed"] = r.results.size() - passed;
  j["stopped_at"] = r.stopped_at ? Json(*r.stopped_at) : Json(nullptr);
  j["all_pass"] = r.all_pass();
  return j;
}

std::string line(const CriterionResult& r) {
  return std::string(r.pass ? "PASS" : "FAIL") + " criterion " + std::to_string(r.id) + " (" + r.name +
         "): " + r.summary;
}

}  // namespace hamfold::acceptance
