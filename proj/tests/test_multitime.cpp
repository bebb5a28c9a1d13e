#include <gtest/gtest.h>

#include <cmath>

#include "hamfold/dynamics.hpp"
#include "hamfold/library.hpp"
#include "hamfold/multitime.hpp"

using namespace hamfold;

namespace {

HamiltonianBundle bundle_for(const std::string& name, std::optional<std::size_t> np = std::nullopt) {
  const LagrangianSystem sys = find_model(name)->system();
  Partition part = analyze_hessian(sys, make_probes(sys.n)).partition;
  if (np) part = part.with_np(*np);
  return HamiltonianBundle(sys, part);
}

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

MultiTimeSystem counterexample() { return MultiTimeSystem::from_expressions("loop", 1, {"p1*q2", "q1"}); }

}  // namespace

TEST(MultiTime, Gauge1Hamiltonians) {
  const MultiTimeSystem s = MultiTimeSystem::from_model(bundle_for("gauge1"));
  EXPECT_EQ(s.m(), 1u);
  EXPECT_EQ(s.n_p(), 1u);
  MultiTimePoint x = s.make_point();
  x.tau = {0.2, 0.7};
  x.p = {0.4};
  const auto H = s.evaluate(x);
  EXPECT_NEAR(H[0].value, 0.5 * 0.16 + 0.4 * 0.7, 1e-12);
  EXPECT_NEAR(H[1].value, 0.0, 1e-12);
  EXPECT_NEAR(integrability_residual(H, 0, 1), 0.4, 1e-12);  // = p1
}

TEST(MultiTime, DegenerateAndSingleTime) {
  const MultiTimeSystem f = MultiTimeSystem::from_model(bundle_for("firstorder"));
  EXPECT_EQ(f.m(), 2u);
  EXPECT_TRUE(f.degenerate());
  const MultiTimeSystem o = MultiTimeSystem::from_model(bundle_for("osc2", 2));
  EXPECT_EQ(o.m(), 0u);
  EXPECT_EQ(check_integrability(o, multitime_probes(o, 5, 1)).max, 0.0);
  EXPECT_EQ(code_of([] { MultiTimeSystem::from_model(bundle_for("osc2", 1)); }), ErrorCode::regime_violation);
}

TEST(MultiTime, ConstantHamiltoniansIntegrable) {
  const MultiTimeSystem s = MultiTimeSystem::from_expressions("const", 1, {"2", "-0.5"});
  EXPECT_EQ(check_integrability(s, multitime_probes(s, 10, 3)).max, 0.0);
}

TEST(MultiTime, ShiftgaugeIntegrableEverywhere) {
  const MultiTimeSystem s = MultiTimeSystem::from_model(bundle_for("shiftgauge"));
  EXPECT_LE(check_integrability(s, multitime_probes(s, 50, 5)).max, 1e-12);
}

TEST(MultiTime, CounterexampleResidual) {
  const MultiTimeSystem s = counterexample();
  MultiTimePoint x = s.make_point();
  x.tau = {0.0, 0.25};
  x.q = {0.3};
  x.p = {1.0};
  EXPECT_NEAR(integrability_residual(s.evaluate(x), 0, 1), 0.75, 1e-12);  // p1 - tau1
}

TEST(MultiTime, Gauge1TimeFlow) {
  const MultiTimeSystem s = MultiTimeSystem::from_model(bundle_for("gauge1"));
  MultiTimePoint ic = s.make_point();
  ic.q = {0.1};
  const double c = 0.6;
  const PathResult r = integrate_path(s, ic, TimePath({{0.0, c}, {1.0, c}}), 1e-3);
  EXPECT_NEAR(r.end.q[0], 0.1 + c, 1e-12);
  EXPECT_NEAR(r.end.p[0], 0.0, 1e-15);
  EXPECT_NEAR(r.end.tau[0], 1.0, 1e-15);
}

TEST(MultiTime, ZeroLengthPath) {
  const MultiTimeSystem s = counterexample();
  MultiTimePoint ic = s.make_point();
  ic.q = {0.3};
  ic.p = {-0.2};
  const PathResult r = integrate_path(s, ic, TimePath({{0.5, 0.5}}), 1e-3);
  EXPECT_EQ(r.end.q, ic.q);
  EXPECT_EQ(r.end.p, ic.p);
}

TEST(MultiTime, CounterexampleLoopMismatch) {
  const MultiTimeSystem s = counterexample();
  MultiTimePoint ic = s.make_point();
  const PathResult a = integrate_path(s, ic, TimePath({{0, 0}, {1, 0}, {1, 1}}), 1e-3);
  const PathResult b = integrate_path(s, ic, TimePath({{0, 0}, {0, 1}, {1, 1}}), 1e-3);
  EXPECT_NEAR(endpoint_difference(a.end, b.end), 1.0, 1e-9);
}

TEST(MultiTime, ShiftgaugePathIndependence) {
  const MultiTimeSystem s = MultiTimeSystem::from_model(bundle_for("shiftgauge"));
  MultiTimePoint ic = s.make_point();
  ic.q = {1.0};
  ic.p = {0.3};
  ic.tau = {0.0, 0.2};
  const PathResult a = integrate_path(s, ic, TimePath({{0, 0.2}, {2, 0.2}, {2, 1.2}}), 1e-3);
  const PathResult b = integrate_path(s, ic, TimePath({{0, 0.2}, {0, 1.2}, {1, 0.5}, {2, 1.2}}), 1e-3);
  EXPECT_LE(a.max_residual, 1e-10);
  EXPECT_LE(b.max_residual, 1e-10);
  EXPECT_LE(endpoint_difference(a.end, b.end), 1e-6);
}

TEST(MultiTime, TimeOnlyPathMatchesDynamics) {
  for (const char* name : {"gauge1", "shiftgauge", "osc1", "rotgauge"}) {
    const LibraryEntry& e = *find_model(name);
    const Dynamics d = make_dynamics(e.system());
    const PhasePoint x0 = d.bundle().phase_point_from_tangent(e.ic);
    const Trajectory tr = integrate(d, x0, {3.0, 1e-3, Method::rk4, 1e-8, 1e-8});
    ASSERT_TRUE(tr.complete()) << name;
    const MultiTimeSystem s = MultiTimeSystem::from_model(d.bundle());
    MultiTimePoint ic = s.make_point();
    ic.q = x0.q_c;
    ic.p = x0.p;
    std::vector<double> w0{0.0}, w1{3.0};
    for (double v : x0.q_nc) {
      w0.push_back(v);
      w1.push_back(v);
    }
    const PathResult r = integrate_path(s, ic, TimePath({w0, w1}), 1e-3);
    ASSERT_EQ(r.trace.size(), tr.points.size()) << name;
    double diff = 0.0;
    const Partition& part = d.bundle().partition();
    for (std::size_t k = 0; k < tr.points.size(); ++k)
      for (std::size_t i = 0; i < part.n_p; ++i) {
        diff = std::max(diff, std::abs(r.trace[k].x.q[i] - tr.points[k].q[part.canonical(i)]));
        diff = std::max(diff, std::abs(r.trace[k].x.p[i] - tr.points[k].p[i]));
      }
    EXPECT_LE(diff, 1e-6) << name;
  }
}

TEST(MultiTime, PathValidationAndParsing) {
  EXPECT_EQ(code_of([] { TimePath({{0, 0}, {0, 0}}); }), ErrorCode::invalid_argument);
  EXPECT_EQ(code_of([] { TimePath({{1, 0}, {0, 0}}); }), ErrorCode::invalid_argument);
  EXPECT_EQ(code_of([] { TimePath({{0, 0}, {1}}); }), ErrorCode::invalid_argument);
  EXPECT_EQ(code_of([] { TimePath({}); }), ErrorCode::invalid_argument);
  const TimePath p = parse_path("# square\n0, 0\n1,0\n\n1, 1\n", 1);
  EXPECT_EQ(p.waypoints().size(), 3u);
  EXPECT_DOUBLE_EQ(p.length(), 2.0);
  EXPECT_EQ(code_of([] { parse_path("0, 0, 0\n", 1); }), ErrorCode::invalid_argument);
  EXPECT_EQ(code_of([] { parse_path("0, x\n", 1); }), ErrorCode::invalid_argument);
}

TEST(MultiTime, ExpressionBackendRejectsForeignMomenta) {
  EXPECT_EQ(code_of([] { MultiTimeSystem::from_expressions("bad", 1, {"p2", "0"}); }),
            ErrorCode::symbol_space_mismatch);
}
