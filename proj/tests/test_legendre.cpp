#include <gtest/gtest.h>

#include <cmath>

#include "hamfold/legendre.hpp"
#include "hamfold/library.hpp"
#include "hamfold/random.hpp"

using namespace hamfold;

namespace {

HamiltonianBundle bundle_for(const std::string& name, std::optional<std::size_t> np = std::nullopt) {
  const LagrangianSystem sys = find_model(name)->system();
  Partition part = analyze_hessian(sys, make_probes(sys.n)).partition;
  if (np) part = part.with_np(*np);
  return HamiltonianBundle(sys, part);
}

PhasePoint random_point(const HamiltonianBundle& b, Rng& rng) {
  PhasePoint x = b.make_point(rng.uniform(0, 1));
  for (auto* v : {&x.q_c, &x.p, &x.q_nc, &x.qd_nc})
    for (double& z : *v) z = rng.uniform(-1, 1);
  return x;
}

double& var(PhasePoint& x, int group, std::size_t k) {
  switch (group) {
    case 0: return x.q_c[k];
    case 1: return x.p[k];
    case 2: return x.q_nc[k];
    case 3: return x.qd_nc[k];
    default: return x.t;
  }
}

double grad_entry(const PhaseGradient& g, int group, std::size_t k) {
  switch (group) {
    case 0: return g.d_dq_c[k];
    case 1: return g.d_dp[k];
    case 2: return g.d_dq_nc[k];
    case 3: return g.d_dqd_nc[k];
    default: return g.d_dt;
  }
}

}  // namespace

TEST(Legendre, Osc1Velocity) {
  const HamiltonianBundle b = bundle_for("osc1");
  PhasePoint x = b.make_point();
  x.p = {0.7};
  EXPECT_NEAR(b.solve_canonical_velocities(x)[0], 0.7, 1e-12);
  x.q_c = {1.0};
  x.p = {1.0};
  EXPECT_NEAR(b.eval_H0(x), 1.0, 1e-12);
  x.p = {0.7};
  EXPECT_NEAR(b.grad_H(x, -1).d_dp[0], 0.7, 1e-12);
}

TEST(Legendre, Gauge1Examples) {
  const HamiltonianBundle b = bundle_for("gauge1");
  PhasePoint x = b.make_point();
  x.p = {0.5};
  x.q_nc = {0.2};
  EXPECT_NEAR(b.solve_canonical_velocities(x)[0], 0.7, 1e-12);
  EXPECT_NEAR(b.eval_H0(x), 0.225, 1e-12);
  EXPECT_NEAR(b.eval_Halpha(x)[0], 0.0, 1e-12);
  EXPECT_NEAR(b.grad_H(x, -1).d_dq_nc[0], 0.5, 1e-12);  // = p1
}

TEST(Legendre, FirstOrderExamples) {
  const HamiltonianBundle b = bundle_for("firstorder");
  PhasePoint x = b.make_point();
  x.q_nc = {1.0, 2.0};
  EXPECT_TRUE(b.solve_canonical_velocities(x).empty());
  EXPECT_NEAR(b.eval_H0(x), 2.5, 1e-12);
  const auto H = b.eval_Halpha(x);
  EXPECT_NEAR(H[0], -2.0, 1e-12);
  EXPECT_NEAR(H[1], 0.0, 1e-12);
  EXPECT_NEAR(b.grad_H(x, 0).d_dq_nc[1], -1.0, 1e-12);
}

TEST(Legendre, NewtonResidualWithinTolerance) {
  const LagrangianSystem sys = make_system("quartic", 1, "qd1^2/2 + qd1^4/4 - q1^2/2");
  const HamiltonianBundle b(sys, Partition::identity(1, 1, 1));
  Rng rng(1);
  for (int k = 0; k < 50; ++k) {
    PhasePoint x = random_point(b, rng);
    x.p[0] *= 5;
    const auto v = b.solve_canonical_velocities(x);
    const double r = sys.dL_dqd[0](x.t, x.q_c, v, {}) - x.p[0];
    EXPECT_LE(std::abs(r), 1e-12);
  }
}

TEST(Legendre, NoConvergenceAndSingularJacobian) {
  const LagrangianSystem sys = make_system("flat", 1, "sin(qd1)");
  HamiltonianBundle b(sys, Partition::identity(1, 1, 1));
  PhasePoint x = b.make_point();
  x.p = {2.0};  // |cos| <= 1: no solution
  try {
    b.solve_canonical_velocities(x);
    FAIL();
  } catch (const Error& e) {
    EXPECT_TRUE(e.code() == ErrorCode::no_convergence || e.code() == ErrorCode::singular_jacobian);
  }
  const LagrangianSystem cubic = make_system("cubic", 1, "qd1^3/3");
  HamiltonianBundle c(cubic, Partition::identity(1, 1, 1));
  x.p = {1.0};
  try {
    c.solve_canonical_velocities(x);  // W(0) = 0 at the zero start
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::singular_jacobian);
  }
}

TEST(LegendreProperty, GradientMatchesCentralDifference) {
  // Includes the dynamical regime (n_p < r_W) and explicit t dependence.
  const LagrangianSystem quartic =
      make_system("mix", 2, "0.5*qd1^2 + 0.1*qd1^4 + 0.3*qd1*qd2*q2 + 0.5*qd2^2 - q1*q2*sin(t) - 0.2*q1^2");
  std::vector<HamiltonianBundle> bundles = {bundle_for("osc2", 1), bundle_for("gauge1"), bundle_for("rotgauge"),
                                            bundle_for("forced"), bundle_for("osc1", 0)};
  bundles.emplace_back(quartic, Partition::identity(2, 2, 1));
  bundles.emplace_back(quartic, Partition::identity(2, 2, 2));
  Rng rng(17);
  for (const HamiltonianBundle& b : bundles) {
    for (int k = 0; k < 20; ++k) {
      const PhasePoint x = random_point(b, rng);
      const HamiltonianEvaluation ev = b.evaluate(x);
      for (int which = -1; which < static_cast<int>(b.n_nc()); ++which) {
        const PhaseGradient& g = which < 0 ? ev.h0 : ev.h_alpha[static_cast<std::size_t>(which)];
        for (int group = 0; group < 5; ++group) {
          const std::size_t len = group == 4 ? 1 : (group < 2 ? b.n_p() : b.n_nc());
          for (std::size_t j = 0; j < len; ++j) {
            PhasePoint xp = x, xm = x;
            const double h = 1e-6 * (1 + std::abs(var(xp, group, j)));
            var(xp, group, j) += h;
            var(xm, group, j) -= h;
            auto value = [&](const PhasePoint& y) {
              return which < 0 ? b.eval_H0(y) : b.eval_Halpha(y)[static_cast<std::size_t>(which)];
            };
            const double fd = (value(xp) - value(xm)) / (2 * h);
            EXPECT_NEAR(grad_entry(g, group, j), fd, 1e-6 * (1 + std::abs(fd)))
                << b.system().name << " which=" << which << " group=" << group << " j=" << j;
          }
        }
      }
    }
  }
}

TEST(LegendreProperty, EnvelopeIdentity) {
  // dH0/dp_i = v^i wherever the mixed Hessian block W_{a i} vanishes.
  Rng rng(23);
  for (const char* name : {"osc1", "osc2", "gauge1", "rotgauge", "forced"}) {
    const HamiltonianBundle b = bundle_for(name);
    for (int k = 0; k < 100; ++k) {
      const PhasePoint x = random_point(b, rng);
      const HamiltonianEvaluation ev = b.evaluate(x);
      for (std::size_t i = 0; i < b.n_p(); ++i) EXPECT_NEAR(ev.h0.d_dp[i], ev.v[i], 1e-8) << name;
    }
  }
}

TEST(LegendreProperty, EnvelopeIdentityWithMixedBlock) {
  // General form: dH0/dp_i + dH_b/dp_i qd^b = v^i.
  Rng rng(41);
  for (const char* name : {"shiftgauge", "osc2", "gauge1", "rotgauge"}) {
    const HamiltonianBundle b = bundle_for(name);
    for (int k = 0; k < 100; ++k) {
      const PhasePoint x = random_point(b, rng);
      const HamiltonianEvaluation ev = b.evaluate(x);
      for (std::size_t i = 0; i < b.n_p(); ++i) {
        double s = ev.h0.d_dp[i];
        for (std::size_t a = 0; a < b.n_nc(); ++a) s += ev.h_alpha[a].d_dp[i] * x.qd_nc[a];
        EXPECT_NEAR(s, ev.v[i], 1e-8) << name;
      }
    }
  }
}

TEST(LegendreProperty, FullLimitMatchesStandardHamiltonian) {
  const HamiltonianBundle b = bundle_for("osc2", 2);
  const LagrangianSystem& sys = b.system();
  Rng rng(29);
  for (int k = 0; k < 100; ++k) {
    const PhasePoint x = random_point(b, rng);
    const auto v = b.solve_canonical_velocities(x);
    const std::vector<double> q = b.full_q(x), qd = b.full_qd(x, v);
    std::vector<double> p(2);
    for (std::size_t i = 0; i < 2; ++i) p[b.partition().canonical(i)] = x.p[i];
    const double H = p[0] * qd[0] + p[1] * qd[1] - sys.L(x.t, q, qd, {});
    EXPECT_NEAR(b.eval_H0(x), H, 1e-10);
  }
}

TEST(LegendreProperty, EmptyCanonicalLimit) {
  Rng rng(31);
  for (const char* name : {"osc2", "osc1", "firstorder"}) {
    const HamiltonianBundle b = bundle_for(name, 0);
    for (int k = 0; k < 100; ++k) {
      const PhasePoint x = random_point(b, rng);
      const HamiltonianEvaluation ev = b.evaluate(x);
      double lhs = ev.h0.value;
      for (std::size_t a = 0; a < b.n_nc(); ++a) lhs += ev.h_alpha[a].value * x.qd_nc[a];
      const double L = b.system().L(x.t, b.full_q(x), b.full_qd(x, {}), {});
      EXPECT_NEAR(lhs, -L, 1e-10) << name;
    }
  }
}

TEST(Legendre, NondynamicalCheck) {
  Rng rng(37);
  for (const char* name : {"gauge1", "rotgauge", "firstorder", "shiftgauge", "gauge3"}) {
    const HamiltonianBundle b = bundle_for(name);
    EXPECT_EQ(b.regime(), Regime::nondynamical);
    for (int k = 0; k < 10; ++k) EXPECT_NO_THROW(b.require_nondynamical(random_point(b, rng))) << name;
  }
  const HamiltonianBundle d = bundle_for("osc2", 1);
  EXPECT_EQ(d.regime(), Regime::dynamical);
  try {
    d.require_nondynamical(random_point(d, rng));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::regime_violation);
  }
}

TEST(Legendre, TangentRoundTrip) {
  const HamiltonianBundle b = bundle_for("osc2");
  const Binding t{0.1, {0.3, -0.4}, {0.5, 0.25}, {}};
  const PhasePoint x = b.phase_point_from_tangent(t);
  const auto v = b.solve_canonical_velocities(x);
  const auto qd = b.full_qd(x, v);
  EXPECT_NEAR(qd[0], 0.5, 1e-12);
  EXPECT_NEAR(qd[1], 0.25, 1e-12);
}
