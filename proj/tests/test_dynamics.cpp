#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "hamfold/dynamics.hpp"
#include "hamfold/library.hpp"
#include "hamfold/reference.hpp"

using namespace hamfold;

namespace {

Dynamics dyn_for(const std::string& name, std::optional<std::size_t> np = std::nullopt, DynamicsOptions o = {}) {
  return make_dynamics(find_model(name)->system(), np, std::move(o));
}

PhasePoint ic_for(const Dynamics& d, const Binding& b) { return d.bundle().phase_point_from_tangent(b); }

template <class F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error";
  return ErrorCode::io_error;
}

IntegrateSettings rk4(double t1, double dt = 1e-3) { return {t1, dt, Method::rk4, 1e-8, 1e-8}; }

}  // namespace

TEST(Dynamics, ClassifyExamples) {
  Classification c = dyn_for("firstorder").classification();
  EXPECT_EQ(c.kind, ClassKind::nongauge);
  EXPECT_EQ(c.r_F, 2u);
  c = dyn_for("gauge1").classification();
  EXPECT_EQ(c.kind, ClassKind::abelian_limit);
  EXPECT_EQ(c.r_F, 0u);
  EXPECT_EQ(c.gauge_parameters, 1u);
  c = dyn_for("osc2", 2).classification();
  EXPECT_EQ(c.kind, ClassKind::nongauge);
  EXPECT_EQ(c.r_F, 0u);
  EXPECT_EQ(c.gauge_parameters, 0u);
  EXPECT_EQ(dyn_for("osc2", 1).classification().kind, ClassKind::dynamical);
}

TEST(Dynamics, LibraryClassificationsMatchExpected) {
  for (const LibraryEntry& e : library()) {
    if (!e.oracle) continue;
    const Classification c = dyn_for(e.name).classification();
    EXPECT_EQ(c.kind, e.expected_kind) << e.name;
    EXPECT_EQ(c.r_F, e.expected_r_F) << e.name;
  }
}

TEST(Dynamics, SolveVelocitiesExamples) {
  const Dynamics f = dyn_for("firstorder");
  PhasePoint x = f.bundle().make_point();
  x.q_nc = {1.0, 2.0};
  auto v = solve_velocities(build_FG(f.bundle(), x), f.classification(), {}, 1e-9);
  EXPECT_NEAR(v[0], 2.0, 1e-12);
  EXPECT_NEAR(v[1], -1.0, 1e-12);

  const Dynamics g = dyn_for("gauge1");
  PhasePoint y = g.bundle().make_point();
  const std::vector<double> gauge{0.7};
  v = solve_velocities(build_FG(g.bundle(), y), g.classification(), gauge, 1e-9);
  EXPECT_EQ(v[0], 0.7);
  y.p = {0.3};
  EXPECT_EQ(code_of([&] { solve_velocities(build_FG(g.bundle(), y), g.classification(), {}, 1e-9); }),
            ErrorCode::inconsistent_system);
}

TEST(Dynamics, RhsExamples) {
  const Dynamics o = dyn_for("osc1");
  PhasePoint x = o.bundle().make_point();
  x.q_c = {0.3};
  x.p = {-0.6};
  RhsResult r = o.rhs(x);
  EXPECT_NEAR(r.dy[0], -0.6, 1e-12);
  EXPECT_NEAR(r.dy[1], -0.3, 1e-12);

  const Dynamics f = dyn_for("firstorder");
  PhasePoint y = f.bundle().make_point();
  y.q_nc = {0.4, 0.9};
  r = f.rhs(y);
  EXPECT_NEAR(r.dy[0], 0.9, 1e-12);
  EXPECT_NEAR(r.dy[1], -0.4, 1e-12);

  const Dynamics g = dyn_for("gauge1");
  PhasePoint z = g.bundle().make_point();
  z.q_c = {0.2};
  z.q_nc = {0.5};
  r = g.rhs(z);
  EXPECT_NEAR(r.dy[0], 0.5, 1e-12);  // q1
  EXPECT_NEAR(r.dy[1], 0.0, 1e-12);  // p1
  EXPECT_NEAR(r.dy[2], 0.0, 1e-12);  // q2
}

TEST(Dynamics, FirstorderReturnsAfterPeriod) {
  const Dynamics f = dyn_for("firstorder");
  const Trajectory tr = integrate(f, ic_for(f, {0.0, {1.0, 0.0}, {0.0, 0.0}, {}}), rk4(2 * std::numbers::pi));
  ASSERT_TRUE(tr.complete());
  EXPECT_NEAR(tr.points.back().q[0], 1.0, 1e-6);
  EXPECT_NEAR(tr.points.back().q[1], 0.0, 1e-6);
}

TEST(Dynamics, Osc1MatchesExactSolution) {
  const Dynamics o = dyn_for("osc1");
  const Trajectory tr = integrate(o, ic_for(o, {0.0, {1.0}, {0.0}, {}}), rk4(10.0));
  for (const TrajectoryPoint& p : tr.points) {
    EXPECT_NEAR(p.q[0], std::cos(p.t), 1e-6);
    EXPECT_NEAR(p.p[0], -std::sin(p.t), 1e-6);
  }
}

TEST(Dynamics, Gauge1LinearDrift) {
  const Dynamics g = dyn_for("gauge1");
  const Trajectory tr = integrate(g, ic_for(g, {0.0, {0.25, 0.5}, {0.5, 0.0}, {}}), rk4(10.0));
  ASSERT_TRUE(tr.complete());
  for (const TrajectoryPoint& p : tr.points) {
    EXPECT_NEAR(p.q[0], 0.25 + 0.5 * p.t, 1e-8);
    EXPECT_NEAR(p.p[0], 0.0, 1e-10);
  }
}

TEST(Dynamics, Gauge1RejectsInconsistentInitialData) {
  const Dynamics g = dyn_for("gauge1");
  EXPECT_EQ(code_of([&] { integrate(g, ic_for(g, {0.0, {0.0, 0.5}, {0.8, 0.0}, {}}), rk4(1.0)); }),
            ErrorCode::initial_condition_inconsistent);
}

TEST(DynamicsProperty, GaugeInputIndependence) {
  // q1(t) - integral of q2 dt is gauge invariant for gauge1.
  Rng rng(99);
  for (int k = 0; k < 5; ++k) {
    DynamicsOptions o;
    o.gauge = {rng.uniform(-1, 1)};
    const Dynamics g = dyn_for("gauge1", std::nullopt, o);
    const Trajectory tr = integrate(g, ic_for(g, {0.0, {0.1, 0.5}, {0.5, 0.0}, {}}), rk4(5.0));
    double integral = 0.0;
    for (std::size_t j = 1; j < tr.points.size(); ++j) {
      const auto& a = tr.points[j - 1];
      const auto& b = tr.points[j];
      integral += 0.5 * (a.q[1] + b.q[1]) * (b.t - a.t);
      EXPECT_NEAR(b.q[0] - integral, 0.1, 1e-6);
      EXPECT_NEAR(b.p[0], 0.0, 1e-10);
    }
    EXPECT_NEAR(tr.points.back().q[1], 0.5 + o.gauge[0] * 5.0, 1e-9);
  }
}

TEST(DynamicsProperty, FormalismEquivalenceSweep) {
  for (const char* name : {"osc1", "osc2"}) {
    const LibraryEntry& e = *find_model(name);
    const LagrangianSystem sys = e.system();
    const Trajectory el = reference::euler_lagrange(sys, e.ic, 10.0, 1e-3);
    for (std::size_t np = 0; np <= e.n; ++np) {
      const Dynamics d = dyn_for(name, np);
      const Trajectory tr = integrate(d, ic_for(d, e.ic), rk4(10.0));
      ASSERT_TRUE(tr.complete()) << name << " np=" << np;
      EXPECT_LE(max_q_difference(tr, el), 1e-6) << name << " np=" << np;
    }
  }
}

TEST(DynamicsProperty, FullLimitMatchesFullHamilton) {
  const LibraryEntry& e = *find_model("osc2");
  const Dynamics d = dyn_for("osc2", 2);
  const PhasePoint ic = ic_for(d, e.ic);
  const Trajectory tr = integrate(d, ic, rk4(10.0));
  std::vector<double> p0(2);
  for (std::size_t i = 0; i < 2; ++i) p0[d.bundle().partition().canonical(i)] = ic.p[i];
  const Trajectory fh = reference::full_hamilton(e.system(), 0.0, e.ic.q, p0, 10.0, 1e-3);
  EXPECT_LE(max_q_difference(tr, fh), 1e-10);
}

TEST(DynamicsProperty, ConservationWithoutExplicitTime) {
  for (const char* name : {"firstorder", "osc2", "osc1"}) {
    const LibraryEntry& e = *find_model(name);
    ASSERT_FALSE(explicitly_time_dependent(e.system()));
    const Dynamics d = dyn_for(name);
    EXPECT_LE(h0_drift(integrate(d, ic_for(d, e.ic), rk4(10.0))), 1e-8) << name;
  }
  EXPECT_TRUE(explicitly_time_dependent(find_model("forced")->system()));
}

TEST(DynamicsProperty, SingularModelsMatchReducedOracles) {
  for (const LibraryEntry& e : library()) {
    if (!e.oracle) continue;
    const Dynamics d = dyn_for(e.name);
    const Trajectory tr = integrate(d, ic_for(d, e.ic), rk4(10.0));
    ASSERT_TRUE(tr.complete()) << e.name;
    const Trajectory ref = reference::reduced(e.system(), *e.oracle, e.ic, 10.0, 1e-3);
    EXPECT_LE(max_q_difference(tr, ref), 1e-6) << e.name;
  }
}

TEST(DynamicsProperty, PermutationCovariance) {
  const std::string L = "0.5*qd1^2 + q3*qd2 - 0.5*q1^2 - 0.5*q2^2 - 0.5*q3^2 - 0.1*q1*q2";
  const LagrangianSystem a = load_model("name = p\ncoords = q1, q2, q3\nlagrangian = " + L);
  const LagrangianSystem b = load_model("name = p\ncoords = q3, q1, q2\nlagrangian = " + L);
  const Dynamics da = make_dynamics(a), db = make_dynamics(b);
  EXPECT_EQ(da.classification().kind, ClassKind::nongauge);
  // position k of b holds original coordinate perm[k]
  const std::size_t perm[] = {2, 0, 1};
  const std::vector<double> q{0.3, 0.6, -0.2}, qd{0.1, 0.0, 0.0};
  Binding ib{0.0, {0, 0, 0}, {0, 0, 0}, {}};
  for (std::size_t k = 0; k < 3; ++k) {
    ib.q[k] = q[perm[k]];
    ib.qd[k] = qd[perm[k]];
  }
  const Trajectory ta = integrate(da, da.bundle().phase_point_from_tangent({0.0, q, qd, {}}), rk4(3.0));
  const Trajectory tb = integrate(db, db.bundle().phase_point_from_tangent(ib), rk4(3.0));
  ASSERT_TRUE(ta.complete());
  ASSERT_EQ(ta.points.size(), tb.points.size());
  EXPECT_EQ(tb.labels, (std::vector<std::string>{"q3", "q1", "q2"}));
  for (std::size_t j = 0; j < ta.points.size(); ++j)
    for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(tb.points[j].q[k], ta.points[j].q[perm[k]], 1e-12);
}

TEST(Dynamics, AdaptiveMethodAgrees) {
  const Dynamics f = dyn_for("firstorder");
  IntegrateSettings s = rk4(2 * std::numbers::pi);
  s.method = Method::rk45;
  const Trajectory tr = integrate(f, ic_for(f, {0.0, {1.0, 0.0}, {0.0, 0.0}, {}}), s);
  EXPECT_EQ(tr.method, "rk45");
  EXPECT_NEAR(tr.points.back().t, 2 * std::numbers::pi, 1e-12);
  EXPECT_NEAR(tr.points.back().q[0], 1.0, 1e-6);
}

TEST(Dynamics, SecondOrderResidual) {
  for (const LibraryEntry& e : library()) {
    const Dynamics d = dyn_for(e.name);
    const Trajectory tr = integrate(d, ic_for(d, e.ic), rk4(10.0));
    EXPECT_LE(second_order_residual(d.bundle(), tr).max, 1e-4) << e.name;
  }
  const LibraryEntry& o = *find_model("osc2");
  const Trajectory el = reference::euler_lagrange(o.system(), o.ic, 10.0, 1e-3);
  EXPECT_LE(second_order_residual(dyn_for("osc2", 1).bundle(), el).max, 1e-4);

  const LagrangianSystem free = make_system("free", 1, "0.5*qd1^2");
  const HamiltonianBundle fb(free, Partition::identity(1, 1, 0));
  const Trajectory still = reference::euler_lagrange(free, {0.0, {0.4}, {0.0}, {}}, 1.0, 1e-2);
  EXPECT_EQ(second_order_residual(fb, still).max, 0.0);

  Trajectory two = still;
  two.points.resize(2);
  EXPECT_EQ(code_of([&] { second_order_residual(fb, two); }), ErrorCode::trajectory_too_short);
}

TEST(Dynamics, OracleUndefinedForSingularModel) {
  EXPECT_EQ(code_of([] { reference::euler_lagrange(find_model("gauge1")->system(), {0.0, {0, 0}, {0, 0}, {}}, 1.0, 1e-2); }),
            ErrorCode::oracle_undefined);
}
