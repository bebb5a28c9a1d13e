#include <gtest/gtest.h>

#include <cmath>

#include "hamfold/library.hpp"
#include "hamfold/model.hpp"
#include "hamfold/random.hpp"

using namespace hamfold;

namespace {

HessianAnalysis analyze(const LagrangianSystem& sys) { return analyze_hessian(sys, make_probes(sys.n)); }

ErrorCode load_code(std::string_view text) {
  try {
    load_model(text);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error";
  return ErrorCode::io_error;
}

}  // namespace

TEST(Model, Osc1RankOne) {
  const HessianAnalysis a = analyze(find_model("osc1")->system());
  EXPECT_EQ(a.partition.r_w, 1u);
  EXPECT_EQ(a.partition.order, (std::vector<std::size_t>{0}));
}

TEST(Model, FirstOrderRankZero) {
  const HessianAnalysis a = analyze(find_model("firstorder")->system());
  EXPECT_EQ(a.partition.r_w, 0u);
  EXPECT_EQ(a.partition.n_nc(), 2u);
}

TEST(Model, Gauge1Split) {
  const HessianAnalysis a = analyze(find_model("gauge1")->system());
  EXPECT_EQ(a.partition.r_w, 1u);
  EXPECT_EQ(a.partition.canonical(0), 0u);
  EXPECT_EQ(a.partition.noncanonical(0), 1u);
}

TEST(Model, LibraryExpectedRanks) {
  EXPECT_GE(library().size(), 6u);
  for (const LibraryEntry& e : library()) {
    EXPECT_EQ(analyze(e.system()).partition.r_w, e.expected_r_w) << e.name;
  }
}

TEST(Model, HessianSymmetricAtRandomPoints) {
  Rng rng(3);
  for (const LibraryEntry& e : library()) {
    const LagrangianSystem sys = e.system();
    for (const Binding& b : make_probes(sys.n, {20, 77})) {
      const Matrix W = sys.hessian_at(b);
      for (std::size_t A = 0; A < sys.n; ++A)
        for (std::size_t B = 0; B < sys.n; ++B) EXPECT_LE(std::abs(W(A, B) - W(B, A)), 1e-12);
    }
  }
}

TEST(Model, LoadModelFile) {
  const LagrangianSystem s = load_model("# comment\nname = osc1\ncoords = q1\nlagrangian = qd1^2/2 - q1^2/2\n");
  EXPECT_EQ(s.name, "osc1");
  EXPECT_EQ(s.n, 1u);
  const LagrangianSystem f = load_model("name = firstorder\ncoords = q1, q2\nlagrangian = q2*qd1 - 0.5*(q1^2+q2^2)");
  EXPECT_EQ(f.n, 2u);
  EXPECT_EQ(to_string(f.dL_dqd[0].expr()), to_string(differentiate(f.lagrangian, Symbol::qd(1))));
}

TEST(Model, LoadModelErrors) {
  EXPECT_EQ(load_code("name = x\ncoords = q1, q2\nlagrangian = qd3^2"), ErrorCode::dimension_mismatch);
  EXPECT_EQ(load_code("name = x\ncoords = q1\n"), ErrorCode::model_format);
  EXPECT_EQ(load_code("name = x\nname = y\ncoords = q1\nlagrangian = qd1"), ErrorCode::model_format);
  EXPECT_EQ(load_code("name = x\ncoords = q1\nlagrangian = qd1\ncolor = red"), ErrorCode::model_format);
  EXPECT_EQ(load_code("name = x\ncoords = q1, q3\nlagrangian = qd1"), ErrorCode::dimension_mismatch);
  EXPECT_EQ(load_code("name = x\ncoords = q1\nlagrangian = qd1 +"), ErrorCode::parse_syntax);
}

TEST(Model, PermutedCoordsKeepLabels) {
  const LagrangianSystem s = load_model("name = g\ncoords = q2, q1\nlagrangian = 0.5*(qd1-q2)^2\n");
  EXPECT_EQ(s.labels, (std::vector<std::string>{"q2", "q1"}));
  // position 1 holds the original q2, which carries no velocity.
  const HessianAnalysis a = analyze(s);
  EXPECT_EQ(a.partition.canonical(0), 1u);
}

TEST(Model, RankVariationDetected) {
  const LagrangianSystem s = make_system("kink", 1, "q1*qd1^2");
  std::vector<Binding> probes = make_probes(1);
  probes[0].q = {0.0};
  try {
    analyze_hessian(s, probes);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::rank_variation);
  }
}

TEST(Model, AllProbesDegenerate) {
  const LagrangianSystem s = make_system("bad", 1, "log(q1-5)*qd1^2");
  try {
    analyze_hessian(s, make_probes(1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::all_probes_degenerate);
  }
}

TEST(Model, DegeneracyHoldsAfterAnalysis) {
  for (const LibraryEntry& e : library()) {
    const LagrangianSystem sys = e.system();
    const HessianAnalysis a = analyze(sys);
    EXPECT_LE(a.degeneracy_residual, 1e-9) << e.name;
    for (const Binding& b : make_probes(sys.n)) {
      const Matrix S = noncanonical_schur(sys, a.partition, b, 1e-9);
      EXPECT_LE(S.max_abs(), 1e-9) << e.name;
    }
  }
}

TEST(Model, RawNoncanonicalBlockVanishesWithoutMixing) {
  for (const char* name : {"firstorder", "gauge1", "rotgauge", "gauge3"}) {
    const LagrangianSystem sys = find_model(name)->system();
    const Partition p = analyze(sys).partition;
    for (const Binding& b : make_probes(sys.n))
      for (std::size_t x = 0; x < p.n_nc(); ++x)
        for (std::size_t y = 0; y < p.n_nc(); ++y)
          EXPECT_LE(std::abs(sys.hessian(p.noncanonical(x), p.noncanonical(y))(b)), 1e-9) << name;
  }
  // shiftgauge: W_22 = 1 but W_22 - W_21 W_11^-1 W_12 = 0.
  const LagrangianSystem s = find_model("shiftgauge")->system();
  const Partition p = analyze(s).partition;
  EXPECT_EQ(std::abs(s.hessian(p.noncanonical(0), p.noncanonical(0))(make_probes(2)[0])), 1.0);
}

TEST(Model, ProbesAreDeterministic) {
  const auto a = make_probes(3, {8, 42});
  const auto b = make_probes(3, {8, 42});
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_EQ(a[k].q, b[k].q);
    EXPECT_EQ(a[k].t, k % 2 ? 0.37 : 0.0);
  }
}
