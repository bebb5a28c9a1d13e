#include <gtest/gtest.h>

#include <cmath>

#include "hamfold/dirac.hpp"
#include "hamfold/library.hpp"

using namespace hamfold;

namespace {

ConstraintSet cs_for(const std::string& name) { return build_constraints(find_model(name)->system()); }

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

}  // namespace

TEST(Dirac, ConstraintExamples) {
  const ConstraintSet g = cs_for("gauge1");
  EXPECT_EQ(g.count(), 1u);
  EXPECT_TRUE(g.first_class_like());
  auto phi = g.values({0.0, {0.3, -0.4}, {0.2, 0.9}});
  EXPECT_NEAR(phi[0], 0.9, 1e-12);  // p2

  const ConstraintSet f = cs_for("firstorder");
  EXPECT_EQ(f.count(), 2u);
  EXPECT_FALSE(f.first_class_like());
  phi = f.values({0.0, {0.3, -0.4}, {0.2, 0.9}});
  EXPECT_NEAR(phi[0], 0.2 + 0.4, 1e-12);  // p1 - q2
  EXPECT_NEAR(phi[1], 0.9, 1e-12);        // p2
  EXPECT_EQ(f.describe().front(), "Phi1 = p1 + H1");

  EXPECT_EQ(cs_for("osc2").count(), 0u);
}

TEST(Dirac, TotalHamiltonianExamples) {
  const ConstraintSet f = cs_for("firstorder");
  const ExtendedPoint x{0.0, {0.3, -0.4}, {0.2, 0.9}};
  const ExtendedGradient h = total_hamiltonian(f.evaluate(x), {1.5, -2.0});
  EXPECT_NEAR(h.value, 0.5 * (0.09 + 0.16) + 1.5 * (0.2 + 0.4) - 2.0 * 0.9, 1e-12);
  EXPECT_NEAR(total_hamiltonian(f.evaluate(x), {0.0, 0.0}).value, 0.5 * (0.09 + 0.16), 1e-12);

  const ConstraintSet g = cs_for("gauge1");
  const ExtendedPoint y{0.0, {0.3, -0.4}, {0.2, 0.9}};
  EXPECT_NEAR(total_hamiltonian(g.evaluate(y), {0.7}).value, 0.5 * 0.04 + 0.2 * -0.4 + 0.7 * 0.9, 1e-12);
}

TEST(Dirac, ConsistencyExamples) {
  const ConstraintSet f = cs_for("firstorder");
  PhasePoint x = f.bundle().make_point();
  x.q_nc = {1.0, 2.0};
  const ConsistencySystem c = consistency_system(f, f.lift(x));
  EXPECT_NEAR(c.v[0], 2.0, 1e-12);
  EXPECT_NEAR(c.v[1], -1.0, 1e-12);
  EXPECT_EQ(c.free, 0u);
  EXPECT_NEAR(c.F_full(0, 1), -1.0, 1e-12);

  const ConstraintSet g = cs_for("gauge1");
  PhasePoint y = g.bundle().make_point();
  y.q_nc = {0.5};
  const std::vector<double> gauge{0.25};
  const ConsistencySystem d = consistency_system(g, g.lift(y), gauge);
  EXPECT_EQ(d.free, 1u);
  EXPECT_EQ(d.v[0], 0.25);
  y.p = {0.4};
  EXPECT_EQ(code_of([&] { consistency_system(g, g.lift(y)); }), ErrorCode::inconsistent_system);

  ExtendedPoint off = f.lift(x);
  off.p[1] += 1e-3;
  EXPECT_EQ(code_of([&] { consistency_system(f, off); }), ErrorCode::off_surface);
}

TEST(Dirac, HigherStageConstraintDetected) {
  const LagrangianSystem sys = make_system("secondary", 2, "0.5*qd1^2 + q1*qd2 - 0.5*q2^2 - 0.2*q1^2");
  const ConstraintSet cs = build_constraints(sys);
  // consistent point: G = q2 + p1 = 0
  PhasePoint x = cs.bundle().make_point();
  x.q_c = {0.5};
  x.p = {0.3};
  x.q_nc = {-0.3};
  EXPECT_EQ(code_of([&] { consistency_system(cs, cs.lift(x)); }), ErrorCode::higher_stage_constraint);
}

TEST(Dirac, EquivalenceFirstorder) {
  const EquivalenceReport r = verify_equivalence(cs_for("firstorder"), 100, 42);
  EXPECT_EQ(r.points, 100u);
  EXPECT_LE(r.max_phi, 1e-12);
  EXPECT_LE(r.f_gap, 1e-9);
  EXPECT_LE(r.dh0_gap, 1e-9);
  EXPECT_LE(r.g_identity, 1e-9);
  EXPECT_GT(r.dh0_gap_swapped, 1e-3);  // swapped operands flip the sign
  ASSERT_TRUE(r.dirac_vs_nongauge.has_value());
  EXPECT_LE(*r.dirac_vs_nongauge, 1e-8);
}

TEST(Dirac, EquivalenceGaugeAndRegular) {
  for (const char* name : {"gauge1", "rotgauge", "shiftgauge", "gauge3"}) {
    const EquivalenceReport r = verify_equivalence(cs_for(name), 100, 7);
    EXPECT_LE(r.f_gap, 1e-9) << name;
    EXPECT_LE(r.dh0_gap, 1e-9) << name;
    EXPECT_FALSE(r.dirac_vs_nongauge.has_value()) << name;
  }
  const EquivalenceReport o = verify_equivalence(cs_for("osc2"), 10, 7);
  EXPECT_EQ(o.constraints, 0u);
  EXPECT_EQ(o.f_gap, 0.0);
}

TEST(Dirac, TimeDependentGIdentity) {
  const LagrangianSystem sys = make_system("tdep", 3, "0.5*qd1^2 + sin(t)*q1*qd2 + q3*qd2 - 0.5*q1^2 - 0.5*q3^2");
  const EquivalenceReport r = verify_equivalence(build_constraints(sys), 30, 3);
  EXPECT_LE(r.f_gap, 1e-9);
  EXPECT_LE(r.g_identity, 1e-9);
}

TEST(Dirac, ConstraintDriftAndTrajectoryEquivalence) {
  for (const char* name : {"firstorder", "gauge1", "rotgauge", "gauge3"}) {
    const LibraryEntry& e = *find_model(name);
    const ConstraintSet cs = cs_for(name);
    const PhasePoint x0 = cs.bundle().phase_point_from_tangent(e.ic);
    const ExtendedRun run = evolve_total(cs, cs.lift(x0), 10.0, 1e-3);
    ASSERT_TRUE(run.trajectory.complete()) << name << ": " << run.trajectory.error->what();
    EXPECT_LE(run.drift, 1e-6) << name;
    const Trajectory tr = integrate(cs.dynamics(), x0, {10.0, 1e-3, Method::rk4, 1e-8, 1e-8});
    EXPECT_LE(max_q_difference(run.trajectory, tr), 1e-6) << name;
    for (std::size_t k = 0; k < tr.points.size(); k += 500)
      for (std::size_t i = 0; i < tr.points[k].p.size(); ++i)
        EXPECT_NEAR(run.trajectory.points[k].p[i], tr.points[k].p[i], 1e-6) << name;
  }
}

TEST(Dirac, ConstraintCounting) {
  const LagrangianSystem rot = find_model("rotgauge")->system();
  EXPECT_EQ(count_primary_constraints(rot, 2).count, 0u);
  const ConstraintCount one = count_primary_constraints(rot, 3);
  EXPECT_EQ(one.count, 1u);
  EXPECT_EQ(one.block_rank, 2u);
  EXPECT_EQ(code_of([&] { count_primary_constraints(rot, 4); }), ErrorCode::invalid_argument);
  const LagrangianSystem g3 = find_model("gauge3")->system();
  for (std::size_t k = 0; k <= 3; ++k) EXPECT_EQ(count_primary_constraints(g3, k).count, k);
  EXPECT_EQ(count_primary_constraints(find_model("osc2")->system(), 2).count, 0u);
}
