#include "hamfold/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "hamfold/ode.hpp"

namespace hamfold {

namespace {

[[noreturn]] void fail(ErrorCode code, const std::string& msg) { throw Error(code, "dynamics", msg); }

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

std::string join(const std::vector<double>& v) {
  std::string s = "(";
  for (std::size_t k = 0; k < v.size(); ++k) s += (k ? ", " : "") + fmt(v[k]);
  return s + ")";
}

bool skippable(const Error& e) {
  return e.code() == ErrorCode::domain_error || e.code() == ErrorCode::no_convergence ||
         e.code() == ErrorCode::singular_jacobian;
}

}  // namespace

const char* class_kind_name(ClassKind k) {
  switch (k) {
    case ClassKind::nongauge: return "nongauge";
    case ClassKind::gauge: return "gauge";
    case ClassKind::abelian_limit: return "abelian-limit";
    case ClassKind::dynamical: return "dynamical";
  }
  return "?";
}

const char* method_name(Method m) { return m == Method::rk4 ? "rk4" : "rk45"; }

std::vector<PhasePoint> phase_probes(const HamiltonianBundle& bundle, const ProbeSettings& settings) {
  std::vector<PhasePoint> out;
  for (const Binding& b : make_probes(bundle.n(), settings)) {
    try {
      out.push_back(bundle.phase_point_from_tangent(b));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::domain_error) throw;
    }
  }
  return out;
}

Classification classify(const HamiltonianBundle& bundle, const std::vector<PhasePoint>& probes, FGOptions opts) {
  if (bundle.regime() == Regime::overextended) {
    fail(ErrorCode::unsupported_regime, "n_p = " + std::to_string(bundle.n_p()) + " exceeds r_W = " +
                                            std::to_string(bundle.partition().r_w) +
                                            "; the extended momenta only yield constraints");
  }
  Classification cls;
  std::vector<FGSystem> fgs;
  for (const PhasePoint& x : probes) {
    try {
      if (bundle.regime() == Regime::nondynamical) bundle.require_nondynamical(x);
      fgs.push_back(build_FG(bundle.evaluate(x), bundle.pivot_tol(), opts));
    } catch (const Error& e) {
      if (!skippable(e)) throw;
    }
  }
  if (fgs.empty()) fail(ErrorCode::all_probes_degenerate, "no probe point could be evaluated");
  cls.probes_used = fgs.size();
  std::size_t best = 0;
  for (std::size_t k = 0; k < fgs.size(); ++k) {
    cls.probe_ranks.push_back(fgs[k].r_F);
    cls.max_abs_F = std::max(cls.max_abs_F, fgs[k].max_abs_F);
    if (fgs[k].r_F > fgs[best].r_F) best = k;
  }
  const auto [lo, hi] = std::minmax_element(cls.probe_ranks.begin(), cls.probe_ranks.end());
  if (*lo != *hi) {
    fail(ErrorCode::rank_variation, "rank of F varies across probes: " + std::to_string(*lo) + " at probe " +
                                        std::to_string(lo - cls.probe_ranks.begin()) + ", " +
                                        std::to_string(*hi) + " at probe " +
                                        std::to_string(hi - cls.probe_ranks.begin()));
  }
  const std::size_t m = bundle.n_nc();
  cls.r_F = *hi;
  const RankInfo& ri = fgs[best].rank_info;
  cls.alpha1.assign(ri.row_order.begin(), ri.row_order.begin() + cls.r_F);
  std::sort(cls.alpha1.begin(), cls.alpha1.end());
  for (std::size_t a = 0; a < m; ++a)
    if (!std::binary_search(cls.alpha1.begin(), cls.alpha1.end(), a)) cls.alpha2.push_back(a);
  if (bundle.regime() == Regime::dynamical) {
    cls.kind = ClassKind::dynamical;
    cls.gauge_parameters = 0;
    return cls;
  }
  cls.gauge_parameters = m - cls.r_F;
  if (cls.r_F == m) {
    cls.kind = ClassKind::nongauge;
  } else if (cls.r_F == 0 && cls.max_abs_F <= bundle.pivot_tol()) {
    cls.kind = ClassKind::abelian_limit;
  } else {
    cls.kind = ClassKind::gauge;
  }
  return cls;
}

std::vector<double> solve_velocities(const FGSystem& fg, const Classification& cls,
                                     std::span<const double> gauge_input, double pivot_tol,
                                     double consistency_tol) {
  const std::size_t m = fg.G.size();
  if (m == 0) return {};
  const std::size_t k2 = cls.alpha2.size();
  std::vector<double> g(k2, 0.0);
  if (!gauge_input.empty()) {
    if (gauge_input.size() != k2) {
      fail(ErrorCode::dimension_mismatch, "gauge input has " + std::to_string(gauge_input.size()) +
                                              " entries, the model has " + std::to_string(k2) +
                                              " gauge parameters");
    }
    std::copy(gauge_input.begin(), gauge_input.end(), g.begin());
  }
  const GaugeDecomposition d = decompose(fg, pivot_tol, cls.alpha1);
  if (d.max_g_residual() > consistency_tol) {
    fail(ErrorCode::inconsistent_system, "G_alpha2 - lambda G_alpha1 = " + join(d.g_residual) +
                                             " exceeds " + fmt(consistency_tol));
  }
  std::vector<double> qd(m, 0.0);
  const std::size_t k1 = d.alpha1.size();
  std::vector<double> rhs(k1);
  for (std::size_t r = 0; r < k1; ++r) {
    double s = fg.G[d.alpha1[r]];
    for (std::size_t c = 0; c < k2; ++c) s -= fg.F(d.alpha1[r], d.alpha2[c]) * g[c];
    rhs[r] = s;
  }
  for (std::size_t r = 0; r < k1; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < k1; ++c) s += d.F11bar(r, c) * rhs[c];
    qd[d.alpha1[r]] = s;
  }
  for (std::size_t c = 0; c < k2; ++c) qd[d.alpha2[c]] = g[c];
  return qd;
}

// ----------------------------------------------------------------- Dynamics

Dynamics::Dynamics(HamiltonianBundle bundle, Classification cls, DynamicsOptions opts)
    : bundle_(std::move(bundle)), cls_(std::move(cls)), opts_(std::move(opts)) {
  if (bundle_.regime() == Regime::overextended) {
    fail(ErrorCode::unsupported_regime, "cannot integrate with n_p > r_W");
  }
  gauge_ = opts_.gauge;
  if (gauge_.empty()) gauge_.assign(cls_.alpha2.size(), 0.0);
  if (!second_order() && gauge_.size() != cls_.alpha2.size()) {
    fail(ErrorCode::dimension_mismatch, "gauge vector has " + std::to_string(gauge_.size()) +
                                            " entries, the model has " + std::to_string(cls_.alpha2.size()) +
                                            " gauge parameters");
  }
}

std::size_t Dynamics::state_size() const {
  return 2 * bundle_.n_p() + bundle_.n_nc() * (second_order() ? 2 : 1);
}

std::vector<double> Dynamics::pack(const PhasePoint& x) const {
  std::vector<double> y;
  y.insert(y.end(), x.q_c.begin(), x.q_c.end());
  y.insert(y.end(), x.p.begin(), x.p.end());
  y.insert(y.end(), x.q_nc.begin(), x.q_nc.end());
  if (second_order()) y.insert(y.end(), x.qd_nc.begin(), x.qd_nc.end());
  return y;
}

PhasePoint Dynamics::unpack(double t, std::span<const double> y) const {
  const std::size_t np = bundle_.n_p(), m = bundle_.n_nc();
  PhasePoint x = bundle_.make_point(t);
  std::copy_n(y.begin(), np, x.q_c.begin());
  std::copy_n(y.begin() + static_cast<std::ptrdiff_t>(np), np, x.p.begin());
  std::copy_n(y.begin() + static_cast<std::ptrdiff_t>(2 * np), m, x.q_nc.begin());
  if (second_order()) std::copy_n(y.begin() + static_cast<std::ptrdiff_t>(2 * np + m), m, x.qd_nc.begin());
  return x;
}

RhsResult Dynamics::rhs(const PhasePoint& x, std::span<const double> guess) const {
  const std::size_t np = bundle_.n_p(), m = bundle_.n_nc();
  RhsResult r;
  r.ev = bundle_.evaluate(x, guess);
  r.fg = build_FG(r.ev, bundle_.pivot_tol(), opts_.fg);
  if (second_order()) {
    r.qd_nc = x.qd_nc;
    Matrix S(m, m);
    for (std::size_t a = 0; a < m; ++a)
      for (std::size_t b = 0; b < m; ++b) S(a, b) = r.ev.h_alpha[a].d_dqd_nc[b];
    std::vector<double> f(m);
    for (std::size_t a = 0; a < m; ++a) {
      double s = r.fg.G[a];
      for (std::size_t b = 0; b < m; ++b) s -= r.fg.F(a, b) * x.qd_nc[b];
      f[a] = s;
    }
    LU lu(S, bundle_.pivot_tol() * std::max(1.0, S.max_abs()));
    if (lu.singular()) {
      fail(ErrorCode::unsupported_regime,
           "dH_alpha/dqd_beta is singular; the second-order equations do not determine qdd");
    }
    r.qdd_nc = lu.solve(f);
    const std::vector<double> Sq = S * std::span<const double>(r.qdd_nc);
    for (std::size_t a = 0; a < m; ++a) r.residual = std::max(r.residual, std::abs(Sq[a] - f[a]));
  } else {
    r.qd_nc = solve_velocities(r.fg, cls_, gauge_, bundle_.pivot_tol(), opts_.consistency_tol);
    if (m > 0) {
      const GaugeDecomposition d = decompose(r.fg, bundle_.pivot_tol(), cls_.alpha1);
      r.consistency = d.max_g_residual();
    }
    for (std::size_t a = 0; a < m; ++a) {
      double s = -r.fg.G[a];
      for (std::size_t b = 0; b < m; ++b) s += r.fg.F(a, b) * r.qd_nc[b];
      r.residual = std::max(r.residual, std::abs(s));
    }
  }
  r.dy.assign(state_size(), 0.0);
  for (std::size_t i = 0; i < np; ++i) {
    double dq = r.ev.h0.d_dp[i];
    double dp = -r.ev.h0.d_dq_c[i];
    for (std::size_t b = 0; b < m; ++b) {
      dq += r.ev.h_alpha[b].d_dp[i] * r.qd_nc[b];
      dp -= r.ev.h_alpha[b].d_dq_c[i] * r.qd_nc[b];
    }
    r.dy[i] = dq;
    r.dy[np + i] = dp;
  }
  for (std::size_t a = 0; a < m; ++a) r.dy[2 * np + a] = r.qd_nc[a];
  if (second_order())
    for (std::size_t a = 0; a < m; ++a) r.dy[2 * np + m + a] = r.qdd_nc[a];
  return r;
}

Dynamics make_dynamics(const LagrangianSystem& sys, std::optional<std::size_t> n_p, DynamicsOptions opts,
                       const ProbeSettings& probes, double pivot_tol) {
  HessianAnalysis an = analyze_hessian(sys, make_probes(sys.n, probes), pivot_tol);
  Partition part = n_p ? an.partition.with_np(*n_p) : an.partition;
  HamiltonianBundle bundle(sys, part, pivot_tol);
  Classification cls = classify(bundle, phase_probes(bundle, probes), opts.fg);
  return Dynamics(std::move(bundle), std::move(cls), std::move(opts));
}

// --------------------------------------------------------------- integrate

Trajectory integrate(const Dynamics& dyn, const PhasePoint& ic, const IntegrateSettings& s) {
  if (!(s.dt > 0.0)) fail(ErrorCode::invalid_argument, "dt must be > 0");
  if (!(s.t1 > ic.t)) fail(ErrorCode::invalid_argument, "t1 must exceed the initial time");
  const HamiltonianBundle& bundle = dyn.bundle();
  const Partition& part = bundle.partition();
  Trajectory traj;
  traj.model = bundle.system().name;
  traj.method = method_name(s.method);
  traj.labels = bundle.system().labels;
  for (std::size_t i = 0; i < part.n_p; ++i) traj.canonical.push_back(part.canonical(i));

  // Consistency of the initial data is a precondition, not a runtime failure.
  RhsResult r0;
  try {
    if (bundle.regime() == Regime::nondynamical) bundle.require_nondynamical(ic);
    r0 = dyn.rhs(ic);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::inconsistent_system) {
      throw Error(ErrorCode::initial_condition_inconsistent, "dynamics", e.what());
    }
    throw;
  }

  std::vector<double> warm = r0.ev.v;
  auto f = [&](double t, std::span<const double> y, std::span<double> dy) {
    const RhsResult r = dyn.rhs(dyn.unpack(t, y), warm);
    warm = r.ev.v;
    std::copy(r.dy.begin(), r.dy.end(), dy.begin());
  };
  const std::size_t r_F = dyn.classification().r_F;
  auto record = [&](double t, std::span<const double> y, const RhsResult& r) {
    const PhasePoint x = dyn.unpack(t, y);
    TrajectoryPoint pt;
    pt.t = t;
    pt.q = bundle.full_q(x);
    PhasePoint xv = x;
    xv.qd_nc = r.qd_nc;
    pt.qd = bundle.full_qd(xv, r.ev.v);
    pt.p = x.p;
    pt.H0 = r.ev.h0.value;
    pt.residual = r.residual;
    pt.consistency = r.consistency;
    pt.r_F = r.fg.r_F;
    traj.points.push_back(std::move(pt));
  };
  auto observer = [&](double t, std::span<const double> y) {
    if (traj.points.empty()) {
      record(t, y, r0);
      return true;
    }
    const RhsResult r = dyn.rhs(dyn.unpack(t, y), warm);
    if (r.fg.r_F != r_F) {
      fail(ErrorCode::rank_variation, "rank of F changed from " + std::to_string(r_F) + " to " +
                                          std::to_string(r.fg.r_F) + " at step " +
                                          std::to_string(traj.points.size()) + " (t = " + fmt(t) + ")");
    }
    record(t, y, r);
    return true;
  };
  try {
    if (s.method == Method::rk4) {
      ode::integrate_rk4(f, ic.t, dyn.pack(ic), s.t1, s.dt, observer);
    } else {
      ode::Dopri5Settings ds;
      ds.rtol = s.rtol;
      ds.atol = s.atol;
      ds.h_init = s.dt;
      ode::integrate_dopri5(f, ic.t, dyn.pack(ic), s.t1, ds, observer);
    }
  } catch (const Error& e) {
    traj.error = e;
  }
  return traj;
}

// ------------------------------------------------------------- diagnostics

namespace {

// Three-point derivative weights on a nonuniform grid.
// Three-point derivatives on a nonuniform grid, written through the two
// difference quotients so that constant data gives exact zeros.
double first_derivative(double a, double b, double c, double h1, double h2) {
  const double s1 = (b - a) / h1, s2 = (c - b) / h2;
  return (s1 * h2 + s2 * h1) / (h1 + h2);
}

double second_derivative(double a, double b, double c, double h1, double h2) {
  return 2.0 * ((c - b) / h2 - (b - a) / h1) / (h1 + h2);
}

}  // namespace

SecondOrderResidual second_order_residual(const HamiltonianBundle& bundle, const Trajectory& traj, FGOptions opts) {
  const std::size_t N = traj.points.size();
  if (N < 3) {
    fail(ErrorCode::trajectory_too_short,
         "trajectory has " + std::to_string(N) + " points, the residual needs at least 3");
  }
  const Partition& part = bundle.partition();
  const std::size_t m = part.n_nc();
  std::vector<std::size_t> canonical;
  for (std::size_t i = 0; i < part.n_p; ++i) canonical.push_back(part.canonical(i));
  const bool stored_momenta = traj.canonical == canonical;

  // Interior points k = 1..N-2: velocities and accelerations of q^a by differences.
  const std::size_t K = N - 2;
  std::vector<PhasePoint> xs(K);
  std::vector<std::vector<double>> qdd(K, std::vector<double>(m));
  std::vector<std::vector<double>> T(K, std::vector<double>(m));
  std::vector<HamiltonianEvaluation> evs(K);
  for (std::size_t k = 1; k + 1 < N; ++k) {
    const TrajectoryPoint& a = traj.points[k - 1];
    const TrajectoryPoint& b = traj.points[k];
    const TrajectoryPoint& c = traj.points[k + 1];
    const double h1 = b.t - a.t, h2 = c.t - b.t;
    Binding tangent{b.t, b.q, b.qd, {}};
    PhasePoint x = stored_momenta ? bundle.make_point(b.t) : bundle.phase_point_from_tangent(tangent);
    if (stored_momenta) {
      for (std::size_t i = 0; i < part.n_p; ++i) {
        x.q_c[i] = b.q[part.canonical(i)];
        x.p[i] = b.p[i];
      }
      for (std::size_t al = 0; al < m; ++al) x.q_nc[al] = b.q[part.noncanonical(al)];
    }
    for (std::size_t al = 0; al < m; ++al) {
      const std::size_t A = part.noncanonical(al);
      x.qd_nc[al] = first_derivative(a.q[A], b.q[A], c.q[A], h1, h2);
      qdd[k - 1][al] = second_derivative(a.q[A], b.q[A], c.q[A], h1, h2);
    }
    HamiltonianEvaluation ev = bundle.evaluate(x);
    for (std::size_t al = 0; al < m; ++al) {
      double s = ev.h0.d_dqd_nc[al];
      for (std::size_t be = 0; be < m; ++be) s += ev.h_alpha[be].d_dqd_nc[al] * x.qd_nc[be];
      T[k - 1][al] = s;
    }
    xs[k - 1] = std::move(x);
    evs[k - 1] = std::move(ev);
  }

  SecondOrderResidual out;
  for (std::size_t j = 0; j < K; ++j) {
    const PhasePoint& x = xs[j];
    const HamiltonianEvaluation& ev = evs[j];
    const FGSystem fg = build_FG(ev, bundle.pivot_tol(), opts);
    double worst = 0.0;
    for (std::size_t al = 0; al < m; ++al) {
      double dT = 0.0;
      if (K >= 2) {
        if (j == 0) {
          dT = (T[1][al] - T[0][al]) / (xs[1].t - xs[0].t);
        } else if (j + 1 == K) {
          dT = (T[j][al] - T[j - 1][al]) / (xs[j].t - xs[j - 1].t);
        } else {
          dT = first_derivative(T[j - 1][al], T[j][al], T[j + 1][al], x.t - xs[j - 1].t, xs[j + 1].t - x.t);
        }
      }
      double lhs = dT;
      for (std::size_t be = 0; be < m; ++be) lhs += ev.h_alpha[al].d_dqd_nc[be] * qdd[j][be];
      double rhs = fg.G[al];
      for (std::size_t be = 0; be < m; ++be) rhs -= fg.F(al, be) * x.qd_nc[be];
      worst = std::max(worst, std::abs(lhs - rhs));
    }
    out.t.push_back(x.t);
    out.residual.push_back(worst);
    out.max = std::max(out.max, worst);
  }
  return out;
}

double max_q_difference(const Trajectory& a, const Trajectory& b) {
  if (a.points.size() != b.points.size()) {
    fail(ErrorCode::invalid_argument, "trajectories have " + std::to_string(a.points.size()) + " and " +
                                          std::to_string(b.points.size()) + " points");
  }
  double d = 0.0;
  for (std::size_t k = 0; k < a.points.size(); ++k) {
    const TrajectoryPoint& x = a.points[k];
    const TrajectoryPoint& y = b.points[k];
    if (std::abs(x.t - y.t) > 1e-12 * std::max(1.0, std::abs(x.t))) {
      fail(ErrorCode::invalid_argument, "time grids differ at point " + std::to_string(k));
    }
    if (x.q.size() != y.q.size()) fail(ErrorCode::dimension_mismatch, "trajectories of different models");
    for (std::size_t A = 0; A < x.q.size(); ++A) d = std::max(d, std::abs(x.q[A] - y.q[A]));
  }
  return d;
}

double h0_drift(const Trajectory& traj) {
  double d = 0.0;
  if (traj.points.empty()) return d;
  const double h = traj.points.front().H0;
  for (const TrajectoryPoint& pt : traj.points) d = std::max(d, std::abs(pt.H0 - h));
  return d;
}

bool explicitly_time_dependent(const LagrangianSystem& sys) {
  return symbols_of(sys.lagrangian).contains(Symbol::t());
}

}  // namespace hamfold
