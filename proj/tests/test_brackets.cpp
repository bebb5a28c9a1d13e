#include <gtest/gtest.h>

#include <cmath>

#include "hamfold/brackets.hpp"
#include "hamfold/dynamics.hpp"
#include "hamfold/library.hpp"

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

}  // namespace

TEST(Brackets, ReducedPoissonExamples) {
  const HamiltonianBundle b = bundle_for("osc1");
  PhasePoint x = b.make_point();
  x.q_c = {0.4};
  x.p = {-0.3};
  const Observable q1("q1", 1), p1("p1", 1);
  EXPECT_EQ(poisson_reduced(q1.reduced(b, x), p1.reduced(b, x)), 1.0);
  EXPECT_EQ(poisson_reduced(q1.reduced(b, x), q1.reduced(b, x)), 0.0);

  const HamiltonianBundle f = bundle_for("firstorder");
  PhasePoint y = f.make_point();
  y.q_nc = {0.2, 0.7};
  const Observable A("q1*q2 + q1^2", 2), B("sin(q2)", 2);
  EXPECT_EQ(poisson_reduced(A.reduced(f, y), B.reduced(f, y)), 0.0);
}

TEST(Brackets, ObservableSymbolSpace) {
  const HamiltonianBundle g = bundle_for("gauge1");
  EXPECT_EQ(code_of([&] { Observable("p2", 2).reduced(g, g.make_point()); }), ErrorCode::symbol_space_mismatch);
  EXPECT_EQ(code_of([] { Observable("q3", 2); }), ErrorCode::symbol_space_mismatch);
  EXPECT_EQ(code_of([] { Observable("qd1", 2); }), ErrorCode::malformed_symbol);  // not in the phase grammar
  EXPECT_NO_THROW(Observable("p2", 2).extended({0.0, {0, 0}, {0, 0}}));
}

TEST(Brackets, DAlphaExamples) {
  const HamiltonianBundle f = bundle_for("firstorder");
  PhasePoint x = f.make_point();
  x.q_nc = {0.6, -0.1};
  HamiltonianEvaluation ev = f.evaluate(x);
  EXPECT_NEAR(D_alpha(ev.h0, 0, ev, true), 0.6, 1e-12);

  const HamiltonianBundle g = bundle_for("gauge1");
  PhasePoint y = g.make_point();
  y.p = {0.35};
  y.q_nc = {0.8};
  ev = g.evaluate(y);
  EXPECT_NEAR(D_alpha(ev.h0, 0, ev, true), 0.35, 1e-12);
  const Observable c("q1", 2);
  EXPECT_EQ(D_alpha(c.reduced(g, y), 0, ev), 0.0);  // H_2 = 0 and no q2
}

TEST(Brackets, BuildFGExamples) {
  const HamiltonianBundle f = bundle_for("firstorder");
  PhasePoint x = f.make_point();
  x.q_nc = {1.0, 2.0};
  FGSystem fg = build_FG(f, x);
  EXPECT_EQ(fg.r_F, 2u);
  EXPECT_NEAR(fg.F(0, 1), -1.0, 1e-12);
  EXPECT_NEAR(fg.F(1, 0), 1.0, 1e-12);
  EXPECT_NEAR(fg.G[0], 1.0, 1e-12);
  EXPECT_NEAR(fg.G[1], 2.0, 1e-12);

  const HamiltonianBundle g = bundle_for("gauge1");
  PhasePoint y = g.make_point();
  y.p = {0.3};
  fg = build_FG(g, y);
  EXPECT_EQ(fg.r_F, 0u);
  EXPECT_EQ(fg.F(0, 0), 0.0);
  EXPECT_NEAR(fg.G[0], 0.3, 1e-12);

  const HamiltonianBundle o = bundle_for("osc2", 2);
  fg = build_FG(o, o.make_point());
  EXPECT_EQ(fg.F.rows(), 0u);
  EXPECT_TRUE(fg.G.empty());

  EXPECT_EQ(code_of([] {
              const HamiltonianBundle d = bundle_for("osc2", 1);
              PhasePoint z = d.make_point();
              z.qd_nc = {0.5};
              build_FG(d, z);
            }),
            ErrorCode::regime_violation);
}

TEST(Brackets, TimeTermSwitch) {
  const LagrangianSystem sys = make_system("tdep", 2, "0.5*qd1^2 + sin(t)*q1*qd2");
  const HamiltonianBundle b(sys, Partition::identity(2, 1, 1));
  PhasePoint x = b.make_point(0.4);
  x.q_c = {0.7};
  const FGSystem with = build_FG(b, x);
  const FGSystem without = build_FG(b, x, {false});
  // H_2 = -sin(t) q1, dH_2/dt = -cos(t) q1
  EXPECT_NEAR(with.G[0] - without.G[0], std::cos(0.4) * 0.7, 1e-12);
}

TEST(BracketsProperty, FAntisymmetricAndGMatchesGradients) {
  Rng rng(5);
  for (const char* name : {"firstorder", "gauge1", "rotgauge", "shiftgauge", "gauge3"}) {
    const HamiltonianBundle b = bundle_for(name);
    for (int k = 0; k < 50; ++k) {
      const PhasePoint x = random_phase_point(b, rng);
      const FGSystem fg = build_FG(b, x);
      EXPECT_LE(fg.antisymmetry, 1e-12) << name;
      for (std::size_t a = 0; a < b.n_nc(); ++a) {
        // independent D_a H0 from single-Hamiltonian gradients
        const PhaseGradient h0 = b.grad_H(x, -1), ha = b.grad_H(x, static_cast<int>(a));
        const double d = h0.d_dq_nc[a] - ha.d_dt + poisson_reduced(h0, ha);
        EXPECT_NEAR(fg.G[a], d, 1e-10) << name;
      }
    }
  }
}

TEST(Brackets, NongaugeExamples) {
  const HamiltonianBundle f = bundle_for("firstorder");
  PhasePoint x = f.make_point();
  x.q_nc = {0.3, -0.8};
  const BracketContext ctx = make_bracket_context(f, x, BracketKind::nongauge);
  const Observable q1("q1", 2), q2("q2", 2), c("3.5", 2), A("q1^2*q2 + q2", 2);
  EXPECT_NEAR(bracket_nongauge(q1.reduced(f, x), q2.reduced(f, x), ctx), 1.0, 1e-12);
  EXPECT_EQ(bracket_nongauge(A.reduced(f, x), c.reduced(f, x), ctx), 0.0);
  EXPECT_EQ(bracket_nongauge(A.reduced(f, x), A.reduced(f, x), ctx), 0.0);

  const HamiltonianBundle g = bundle_for("gauge1");
  EXPECT_EQ(code_of([&] { make_bracket_context(g, g.make_point(), BracketKind::nongauge); }),
            ErrorCode::singular_f);
}

TEST(Brackets, NongaugeReducesToPoissonWithoutNoncanonicalSector) {
  const HamiltonianBundle b = bundle_for("osc2", 2);
  Rng rng(8);
  for (int k = 0; k < 20; ++k) {
    const PhasePoint x = random_phase_point(b, rng);
    const BracketContext ctx = make_bracket_context(b, x, BracketKind::nongauge);
    const PhaseGradient A = random_observable(b, rng).reduced(b, x), B = random_observable(b, rng).reduced(b, x);
    EXPECT_EQ(bracket_nongauge(A, B, ctx), poisson_reduced(A, B));
  }
}

TEST(Brackets, GaugeExamples) {
  const HamiltonianBundle g = bundle_for("gauge1");
  PhasePoint x = g.make_point();
  x.q_c = {0.1};
  x.q_nc = {0.4};
  const BracketContext ctx = make_bracket_context(g, x, BracketKind::gauge);
  const Observable q1("q1", 2), p1("p1", 2);
  EXPECT_NEAR(bracket_gauge(q1.reduced(g, x), p1.reduced(g, x), ctx), 1.0, 1e-12);
  Rng rng(3);
  for (int k = 0; k < 20; ++k) {
    const PhaseGradient A = random_observable(g, rng).reduced(g, x), B = random_observable(g, rng).reduced(g, x);
    EXPECT_EQ(bracket_gauge(A, B, ctx), poisson_reduced(A, B));
    EXPECT_EQ(bracket_gauge(A, A, ctx), 0.0);
  }
  const BracketContext plain = make_bracket_context(g, x, BracketKind::poisson);
  EXPECT_EQ(code_of([&] { bracket_gauge(q1.reduced(g, x), p1.reduced(g, x), plain); }),
            ErrorCode::missing_decomposition);
}

TEST(Brackets, DecompositionIdentitiesGauge3) {
  const HamiltonianBundle b = bundle_for("gauge3");
  Rng rng(12);
  for (int k = 0; k < 20; ++k) {
    const FGSystem fg = build_FG(b, random_phase_point(b, rng));
    EXPECT_EQ(fg.r_F, 2u);
    const GaugeDecomposition d = decompose(fg, 1e-9);
    EXPECT_EQ(d.alpha1.size(), 2u);
    EXPECT_LE(d.row_residual, 1e-12);
    EXPECT_LE(d.max_g_residual(), 1e-12);  // consistent everywhere
  }
}

TEST(Brackets, AxiomsPoissonOsc2) {
  const AxiomReport r = check_bracket_axioms(BracketKind::poisson, bundle_for("osc2"));
  EXPECT_EQ(r.skipped_points, 0u);
  EXPECT_LE(r.antisymmetry, 1e-12);
  EXPECT_LE(r.bilinearity, 1e-8);
  EXPECT_LE(r.leibniz, 1e-8);
  EXPECT_LE(r.jacobi, 1e-5);
}

TEST(Brackets, AxiomsNongaugeFirstorder) {
  const AxiomReport r = check_bracket_axioms(BracketKind::nongauge, bundle_for("firstorder"));
  EXPECT_EQ(r.points, 100u);
  EXPECT_LE(r.antisymmetry, 1e-12);
  EXPECT_LE(r.leibniz, 1e-8);
  EXPECT_LE(r.jacobi, 1e-5);
}

TEST(Brackets, AxiomsGaugeRotgauge) {
  AxiomSettings s;
  s.points = 30;
  s.triples = 20;
  const AxiomReport r = check_bracket_axioms(BracketKind::gauge, bundle_for("rotgauge"), s);
  EXPECT_LE(r.antisymmetry, 1e-12);
  EXPECT_LE(r.leibniz, 1e-8);
  EXPECT_LE(r.jacobi, 1e-5);
}

TEST(Brackets, AxiomReportDeterministic) {
  AxiomSettings s;
  s.points = 10;
  s.triples = 5;
  const AxiomReport a = check_bracket_axioms(BracketKind::nongauge, bundle_for("firstorder"), s);
  const AxiomReport b = check_bracket_axioms(BracketKind::nongauge, bundle_for("firstorder"), s);
  EXPECT_EQ(a.jacobi, b.jacobi);
  EXPECT_EQ(a.leibniz, b.leibniz);
}
