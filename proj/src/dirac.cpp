#include "hamfold/dirac.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "hamfold/ode.hpp"

namespace hamfold {

namespace {

[[noreturn]] void fail(ErrorCode code, const std::string& msg) { throw Error(code, "dirac", msg); }

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

ExtendedGradient lift_gradient(const PhaseGradient& g, const Partition& part) {
  ExtendedGradient out;
  out.value = g.value;
  out.d_dt = g.d_dt;
  out.d_dq.assign(part.n, 0.0);
  out.d_dp.assign(part.n, 0.0);
  for (std::size_t i = 0; i < part.n_p; ++i) {
    out.d_dq[part.canonical(i)] = g.d_dq_c[i];
    out.d_dp[part.canonical(i)] = g.d_dp[i];
  }
  for (std::size_t a = 0; a < part.n_nc(); ++a) out.d_dq[part.noncanonical(a)] = g.d_dq_nc[a];
  return out;
}

FGSystem as_fg(Matrix F, std::vector<double> G, double pivot_tol) {
  FGSystem fg;
  fg.F = std::move(F);
  fg.G = std::move(G);
  fg.rank_info = rank_of_F(fg.F, pivot_tol);
  fg.r_F = fg.rank_info.rank;
  fg.max_abs_F = fg.F.max_abs();
  for (std::size_t a = 0; a < fg.F.rows(); ++a)
    for (std::size_t b = 0; b < fg.F.cols(); ++b)
      fg.antisymmetry = std::max(fg.antisymmetry, std::abs(fg.F(a, b) + fg.F(b, a)));
  return fg;
}

/// F_full and G_full from the full brackets at an evaluation.
FGSystem full_system(const ExtendedEvaluation& ev, double pivot_tol) {
  const std::size_t m = ev.phi.size();
  Matrix F(m, m);
  std::vector<double> G(m);
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = 0; b < m; ++b) F(a, b) = poisson_full(ev.phi[a], ev.phi[b]);
    G[a] = poisson_full(ev.h0, ev.phi[a]) - ev.phi[a].d_dt;
  }
  return as_fg(std::move(F), std::move(G), pivot_tol);
}

/// Relations G_a2 - lambda G_a1 that carry no v.
std::vector<double> relations(const FGSystem& fg, const Classification& cls, double pivot_tol) {
  if (cls.alpha2.empty()) return {};
  return decompose(fg, pivot_tol, cls.alpha1).g_residual;
}

struct Solved {
  ExtendedEvaluation ev;
  FGSystem fg;
  std::vector<double> v;
};

std::vector<double> velocities(const ExtendedGradient& H, std::size_t n) {
  std::vector<double> dy(2 * n);
  for (std::size_t A = 0; A < n; ++A) {
    dy[A] = H.d_dp[A];
    dy[n + A] = -H.d_dq[A];
  }
  return dy;
}

}  // namespace

ConstraintSet::ConstraintSet(Dynamics dyn) : dyn_(std::move(dyn)) {
  if (bundle().regime() != Regime::nondynamical) {
    fail(ErrorCode::unsupported_regime, std::string("constraints are built from the nondynamical partition; got ") +
                                            regime_name(bundle().regime()));
  }
}

bool ConstraintSet::first_class_like() const {
  const ClassKind k = dyn_.classification().kind;
  return k == ClassKind::gauge || k == ClassKind::abelian_limit;
}

std::vector<std::string> ConstraintSet::describe() const {
  std::vector<std::string> out;
  const Partition& part = bundle().partition();
  for (std::size_t a = 0; a < count(); ++a) {
    const std::string A = std::to_string(part.noncanonical(a) + 1);
    out.push_back("Phi" + A + " = p" + A + " + H" + A);
  }
  return out;
}

PhasePoint ConstraintSet::project(const ExtendedPoint& x) const {
  const Partition& part = bundle().partition();
  if (x.q.size() != part.n || x.p.size() != part.n) {
    fail(ErrorCode::dimension_mismatch, "extended point does not have " + std::to_string(part.n) + " coordinates");
  }
  PhasePoint y = bundle().make_point(x.t);
  for (std::size_t i = 0; i < part.n_p; ++i) {
    y.q_c[i] = x.q[part.canonical(i)];
    y.p[i] = x.p[part.canonical(i)];
  }
  for (std::size_t a = 0; a < part.n_nc(); ++a) y.q_nc[a] = x.q[part.noncanonical(a)];
  return y;
}

ExtendedPoint ConstraintSet::lift(const PhasePoint& x) const {
  const Partition& part = bundle().partition();
  ExtendedPoint e{x.t, bundle().full_q(x), std::vector<double>(part.n, 0.0)};
  for (std::size_t i = 0; i < part.n_p; ++i) e.p[part.canonical(i)] = x.p[i];
  const std::vector<double> H = bundle().eval_Halpha(x);
  for (std::size_t a = 0; a < part.n_nc(); ++a) e.p[part.noncanonical(a)] = -H[a];
  return e;
}

ExtendedEvaluation ConstraintSet::evaluate(const ExtendedPoint& x) const {
  const Partition& part = bundle().partition();
  const HamiltonianEvaluation ev = bundle().evaluate(project(x));
  ExtendedEvaluation out;
  out.h0 = lift_gradient(ev.h0, part);
  for (std::size_t a = 0; a < part.n_nc(); ++a) {
    ExtendedGradient h = lift_gradient(ev.h_alpha[a], part);
    ExtendedGradient phi = h;
    const std::size_t A = part.noncanonical(a);
    phi.value += x.p[A];
    phi.d_dp[A] += 1.0;
    out.h_alpha.push_back(std::move(h));
    out.phi.push_back(std::move(phi));
  }
  return out;
}

std::vector<double> ConstraintSet::values(const ExtendedPoint& x) const {
  std::vector<double> out;
  for (const ExtendedGradient& g : evaluate(x).phi) out.push_back(g.value);
  return out;
}

ConstraintSet build_constraints(const LagrangianSystem& sys, DynamicsOptions opts) {
  return ConstraintSet(make_dynamics(sys, std::nullopt, std::move(opts)));
}

ExtendedGradient total_hamiltonian(const ExtendedEvaluation& ev, const std::vector<double>& v) {
  ExtendedGradient H = ev.h0;
  for (std::size_t a = 0; a < ev.phi.size(); ++a) {
    const ExtendedGradient& f = ev.phi[a];
    H.value += v[a] * f.value;
    H.d_dt += v[a] * f.d_dt;
    for (std::size_t A = 0; A < H.d_dq.size(); ++A) {
      H.d_dq[A] += v[a] * f.d_dq[A];
      H.d_dp[A] += v[a] * f.d_dp[A];
    }
  }
  return H;
}

namespace {

Solved solve_at(const ConstraintSet& cs, const ExtendedPoint& x, std::span<const double> gauge) {
  Solved s;
  s.ev = cs.evaluate(x);
  s.fg = full_system(s.ev, cs.bundle().pivot_tol());
  const Dynamics& d = cs.dynamics();
  s.v = solve_velocities(s.fg, d.classification(), gauge, cs.bundle().pivot_tol(), d.options().consistency_tol);
  return s;
}

std::vector<double> gauge_or_default(const ConstraintSet& cs, std::span<const double> gauge) {
  if (!gauge.empty()) return {gauge.begin(), gauge.end()};
  return cs.dynamics().options().gauge;
}

}  // namespace

ConsistencySystem consistency_system(const ConstraintSet& cs, const ExtendedPoint& x,
                                     std::span<const double> gauge_input, double surface_tol) {
  ConsistencySystem out;
  const std::vector<double> phi = cs.values(x);
  out.max_phi = max_abs(phi);
  if (out.max_phi > surface_tol) {
    fail(ErrorCode::off_surface, "point is off the constraint surface: max |Phi| = " + fmt(out.max_phi) +
                                     " > " + fmt(surface_tol));
  }
  const std::vector<double> gauge = gauge_or_default(cs, gauge_input);
  const Solved s = solve_at(cs, x, gauge);
  const Classification& cls = cs.dynamics().classification();
  const double tol = cs.bundle().pivot_tol();
  out.F_full = s.fg.F;
  out.G_full = s.fg.G;
  out.v = s.v;
  out.free = cls.alpha2.size();
  const std::vector<double> R = relations(s.fg, cls, tol);
  out.consistency = max_abs(R);

  if (!R.empty()) {
    // The v-free relations hold here; they must also be carried along by the flow.
    const std::size_t n = x.q.size();
    const std::vector<double> dy = velocities(total_hamiltonian(s.ev, s.v), n);
    const double h = 1e-6;
    auto shifted = [&](double sign) {
      ExtendedPoint y = x;
      y.t += sign * h;
      for (std::size_t A = 0; A < n; ++A) {
        y.q[A] += sign * h * dy[A];
        y.p[A] += sign * h * dy[n + A];
      }
      return relations(full_system(cs.evaluate(y), tol), cls, tol);
    };
    const std::vector<double> Rp = shifted(1.0), Rm = shifted(-1.0);
    double rate = 0.0;
    for (std::size_t k = 0; k < R.size(); ++k) rate = std::max(rate, std::abs(Rp[k] - Rm[k]) / (2 * h));
    if (rate > cs.dynamics().options().consistency_tol) {
      fail(ErrorCode::higher_stage_constraint,
           "the relations G_a2 - lambda G_a1 = 0 are not preserved (rate " + fmt(rate) +
               "); a further constraint stage would be needed");
    }
  }
  return out;
}

double dirac_bracket(const ExtendedGradient& A, const ExtendedGradient& B, const ExtendedEvaluation& ev,
                     const Matrix& Fbar) {
  double s = poisson_full(A, B);
  const std::size_t m = ev.phi.size();
  for (std::size_t a = 0; a < m; ++a) {
    const double Aa = poisson_full(A, ev.phi[a]);
    if (Aa == 0.0) continue;
    for (std::size_t b = 0; b < m; ++b) s -= Aa * Fbar(a, b) * poisson_full(ev.phi[b], B);
  }
  return s;
}

EquivalenceReport verify_equivalence(const ConstraintSet& cs, std::size_t n_points, std::uint64_t seed,
                                     std::size_t pairs) {
  const HamiltonianBundle& b = cs.bundle();
  const double tol = b.pivot_tol();
  EquivalenceReport r;
  r.model = b.system().name;
  r.constraints = cs.count();
  r.classification = class_kind_name(cs.dynamics().classification().kind);
  const bool second_class = cs.count() > 0 && cs.dynamics().classification().kind == ClassKind::nongauge;
  if (second_class) r.dirac_vs_nongauge = 0.0;
  Rng rng(seed);
  std::size_t pair_budget = pairs;
  for (std::size_t k = 0; k < n_points; ++k) {
    const PhasePoint x = random_phase_point(b, rng);
    try {
      const HamiltonianEvaluation red = b.evaluate(x);
      const FGSystem fg = build_FG(red, tol);
      const ExtendedPoint e = cs.lift(x);
      const ExtendedEvaluation ev = cs.evaluate(e);
      const FGSystem full = full_system(ev, tol);
      const std::size_t m = cs.count();
      for (std::size_t a = 0; a < m; ++a) {
        r.max_phi = std::max(r.max_phi, std::abs(ev.phi[a].value));
        for (std::size_t c = 0; c < m; ++c) r.f_gap = std::max(r.f_gap, std::abs(fg.F(a, c) - full.F(a, c)));
        const double D = D_alpha(red.h0, a, red, false);
        r.dh0_gap = std::max(r.dh0_gap, std::abs(D - poisson_full(ev.h0, ev.phi[a])));
        r.dh0_gap_swapped = std::max(r.dh0_gap_swapped, std::abs(D - poisson_full(ev.phi[a], ev.h0)));
        r.g_identity = std::max(r.g_identity, std::abs(fg.G[a] - full.G[a]));
      }
      if (second_class && pair_budget > 0) {
        const BracketContext ctx = make_bracket_context(b, x, BracketKind::nongauge);
        const Matrix Fbar = invert_F(full, tol);
        const std::size_t per_point = (pair_budget + (n_points - k) - 1) / (n_points - k);
        for (std::size_t j = 0; j < per_point; ++j) {
          const Observable A = random_observable(b, rng), B = random_observable(b, rng);
          const double ng = bracket_nongauge(A.reduced(b, x), B.reduced(b, x), ctx);
          const double db = dirac_bracket(A.extended(e), B.extended(e), ev, Fbar);
          *r.dirac_vs_nongauge = std::max(*r.dirac_vs_nongauge, std::abs(ng - db));
          ++r.pairs;
          --pair_budget;
        }
      }
      ++r.points;
    } catch (const Error& err) {
      if (err.code() != ErrorCode::domain_error && err.code() != ErrorCode::no_convergence &&
          err.code() != ErrorCode::singular_jacobian && err.code() != ErrorCode::singular_f) {
        throw;
      }
      ++r.skipped_points;
    }
  }
  return r;
}

ExtendedRun evolve_total(const ConstraintSet& cs, const ExtendedPoint& ic, double t1, double dt,
                         std::span<const double> gauge_input) {
  if (!(dt > 0.0) || !(t1 >= ic.t)) fail(ErrorCode::invalid_argument, "need dt > 0 and t1 >= t0");
  const std::vector<double> gauge = gauge_or_default(cs, gauge_input);
  const Partition& part = cs.bundle().partition();
  const std::size_t n = part.n;
  consistency_system(cs, ic, gauge, 1e-8);

  ExtendedRun run;
  Trajectory& tr = run.trajectory;
  tr.model = cs.bundle().system().name;
  tr.method = "rk4";
  tr.labels = cs.bundle().system().labels;
  for (std::size_t i = 0; i < part.n_p; ++i) tr.canonical.push_back(part.canonical(i));

  ode::Rhs f = [&](double t, std::span<const double> y, std::span<double> dy) {
    const ExtendedPoint x{t, {y.begin(), y.begin() + static_cast<std::ptrdiff_t>(n)},
                          {y.begin() + static_cast<std::ptrdiff_t>(n), y.end()}};
    const Solved s = solve_at(cs, x, gauge);
    const std::vector<double> d = velocities(total_hamiltonian(s.ev, s.v), n);
    std::copy(d.begin(), d.end(), dy.begin());
  };
  ode::State y0(2 * n);
  std::copy(ic.q.begin(), ic.q.end(), y0.begin());
  std::copy(ic.p.begin(), ic.p.end(), y0.begin() + static_cast<std::ptrdiff_t>(n));
  try {
    ode::integrate_rk4(f, ic.t, y0, t1, dt, [&](double t, std::span<const double> y) {
      const ExtendedPoint x{t, {y.begin(), y.begin() + static_cast<std::ptrdiff_t>(n)},
                            {y.begin() + static_cast<std::ptrdiff_t>(n), y.end()}};
      const Solved s = solve_at(cs, x, gauge);
      const std::vector<double> d = velocities(total_hamiltonian(s.ev, s.v), n);
      TrajectoryPoint p;
      p.t = t;
      p.q = x.q;
      p.qd.assign(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(n));
      for (std::size_t i = 0; i < part.n_p; ++i) p.p.push_back(x.p[part.canonical(i)]);
      p.H0 = s.ev.h0.value;
      double res = 0.0;
      for (std::size_t a = 0; a < s.fg.G.size(); ++a) {
        double r = -s.fg.G[a];
        for (std::size_t b = 0; b < s.fg.G.size(); ++b) r += s.fg.F(a, b) * s.v[b];
        res = std::max(res, std::abs(r));
      }
      p.residual = res;
      p.consistency = max_abs(relations(s.fg, cs.dynamics().classification(), cs.bundle().pivot_tol()));
      p.r_F = s.fg.r_F;
      double phi = 0.0;
      for (const ExtendedGradient& g : s.ev.phi) phi = std::max(phi, std::abs(g.value));
      run.max_phi.push_back(phi);
      run.drift = std::max(run.drift, phi);
      run.p_full.push_back(x.p);
      tr.points.push_back(std::move(p));
      return true;
    });
  } catch (const Error& e) {
    tr.error = e;
  }
  return run;
}

ConstraintCount count_primary_constraints(const LagrangianSystem& sys, std::size_t n_p, const ProbeSettings& probes,
                                          double pivot_tol) {
  if (n_p > sys.n) {
    fail(ErrorCode::invalid_argument, "n_p = " + std::to_string(n_p) + " exceeds the number of coordinates n = " +
                                          std::to_string(sys.n));
  }
  const std::vector<Binding> pts = make_probes(sys.n, probes);
  const HessianAnalysis a = analyze_hessian(sys, pts, pivot_tol);
  ConstraintCount c;
  c.n_p = n_p;
  c.r_w = a.partition.r_w;
  const std::vector<std::size_t> block(a.partition.order.begin(),
                                       a.partition.order.begin() + static_cast<std::ptrdiff_t>(n_p));
  for (const Binding& b : pts) {
    try {
      const Matrix W = sys.hessian_at(b).submatrix(block, block);
      c.probe_ranks.push_back(rank_complete_pivoting(W, pivot_tol).rank);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::domain_error) throw;
    }
  }
  if (c.probe_ranks.empty()) throw Error(ErrorCode::all_probes_degenerate, "dirac", "no probe could be evaluated");
  const auto [lo, hi] = std::minmax_element(c.probe_ranks.begin(), c.probe_ranks.end());
  if (*lo != *hi) {
    throw Error(ErrorCode::rank_variation, "dirac",
                "rank of the canonical Hessian block varies across probes: " + std::to_string(*lo) + " vs " +
                    std::to_string(*hi));
  }
  c.block_rank = *hi;
  c.count = n_p - c.block_rank;
  return c;
}

}  // namespace hamfold
