#include <gtest/gtest.h>

#include <cmath>

#include "hamfold/expr.hpp"
#include "hamfold/random.hpp"

using namespace hamfold;

namespace {

Binding at(double t, std::vector<double> q, std::vector<double> qd) { return {t, std::move(q), std::move(qd), {}}; }

// Bounded random trees over t, q1, q2, qd1, qd2 whose values stay finite on [-1, 1].
Expr random_tree(Rng& rng, int depth) {
  const Symbol syms[] = {Symbol::t(), Symbol::q(1), Symbol::q(2), Symbol::qd(1), Symbol::qd(2)};
  if (depth == 0 || rng.unit() < 0.25) {
    if (rng.unit() < 0.3) return Expr::constant(std::round(rng.uniform(-3.0, 3.0) * 4.0) / 4.0);
    return Expr::symbol(syms[static_cast<int>(rng.unit() * 5.0)]);
  }
  const Expr a = random_tree(rng, depth - 1);
  const Expr b = random_tree(rng, depth - 1);
  const Expr two = Expr::constant(2.0);
  switch (static_cast<int>(rng.unit() * 9.0)) {
    case 0: return Expr::raw_sum(a, b);
    case 1: return Expr::raw_sum(a, Expr::raw_negation(b));
    case 2: return Expr::raw_product(a, b);
    case 3: return Expr::raw_quotient(a, Expr::raw_sum(two, Expr::raw_power(b, two)));
    case 4: return Expr::raw_power(a, Expr::constant(static_cast<int>(rng.unit() * 3.0) + 1.0));
    case 5: return Expr::raw_function(Func::sin, a);
    case 6: return Expr::raw_function(Func::cos, a);
    case 7: return Expr::raw_function(Func::log, Expr::raw_sum(two, Expr::raw_power(a, two)));
    default: return Expr::raw_function(Func::sqrt, Expr::raw_sum(Expr::constant(1.0), Expr::raw_power(a, two)));
  }
}

Binding random_binding(Rng& rng) {
  return at(rng.uniform(-1, 1), {rng.uniform(-1, 1), rng.uniform(-1, 1)}, {rng.uniform(-1, 1), rng.uniform(-1, 1)});
}

double& slot(Binding& b, Symbol s) {
  switch (s.kind) {
    case SymbolKind::time: return b.t;
    case SymbolKind::coord: return b.q[static_cast<std::size_t>(s.index - 1)];
    case SymbolKind::velocity: return b.qd[static_cast<std::size_t>(s.index - 1)];
    default: return b.p[static_cast<std::size_t>(s.index - 1)];
  }
}

ErrorCode parse_code(std::string_view s) {
  try {
    parse(s);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error for " << s;
  return ErrorCode::io_error;
}

}  // namespace

TEST(Expr, ParsesOscillator) {
  const Expr e = parse("qd1^2/2 - q1^2/2");
  EXPECT_EQ(e.kind(), NodeKind::sum);
  EXPECT_DOUBLE_EQ(evaluate(e, at(0, {1.0}, {2.0})), 1.5);
}

TEST(Expr, ParsesFirstOrder) {
  const Expr e = parse("q2*qd1 - 0.5*(q1^2+q2^2)");
  EXPECT_EQ(symbols_of(e), (std::set<Symbol>{Symbol::q(1), Symbol::q(2), Symbol::qd(1)}));
  EXPECT_DOUBLE_EQ(evaluate(parse("q2*qd1"), at(0, {0.0, 3.0}, {-2.0, 0.0})), -6.0);
}

TEST(Expr, RejectsMalformedSymbols) {
  EXPECT_EQ(parse_code("sin(qq1)"), ErrorCode::malformed_symbol);
  EXPECT_EQ(parse_code("q0"), ErrorCode::malformed_symbol);
  EXPECT_EQ(parse_code("qdx"), ErrorCode::malformed_symbol);
  EXPECT_EQ(parse_code("p1"), ErrorCode::malformed_symbol);
  EXPECT_EQ(parse_code("tan(q1)"), ErrorCode::unknown_function);
  EXPECT_EQ(parse_code("q1 +"), ErrorCode::parse_syntax);
  EXPECT_EQ(parse_code("(q1"), ErrorCode::parse_syntax);
  EXPECT_EQ(parse_code("q1 q2"), ErrorCode::parse_syntax);
}

TEST(Expr, SyntaxErrorCarriesOffsetAndExpectedSet) {
  try {
    parse("q1 + * q2");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), 5u);
    EXPECT_FALSE(e.expected().empty());
  }
}

TEST(Expr, PhaseGrammarAcceptsMomenta) {
  EXPECT_DOUBLE_EQ(evaluate(parse("p1*q2", Grammar::phase), Binding{0, {0, 3}, {}, {2}}), 6.0);
  EXPECT_THROW(parse("qd1", Grammar::phase), ParseError);
}

TEST(Expr, LeadingUnaryMinusBindsTighterThanPower) {
  EXPECT_DOUBLE_EQ(evaluate(parse("-q1^2"), at(0, {3.0}, {0.0})), 9.0);
  EXPECT_DOUBLE_EQ(evaluate(parse("0-q1^2"), at(0, {3.0}, {0.0})), -9.0);
}

TEST(Expr, DerivativeExamples) {
  EXPECT_EQ(to_string(differentiate(parse("qd1^2/2"), Symbol::qd(1))), "qd1");
  EXPECT_EQ(to_string(differentiate(parse("q2*qd1"), Symbol::q(2))), "qd1");
  EXPECT_EQ(to_string(differentiate(parse("q2*qd1"), Symbol::qd(2))), "0");
}

TEST(Expr, DomainErrors) {
  EXPECT_THROW(evaluate(parse("log(q1)"), at(0, {0.0}, {0.0})), Error);
  EXPECT_THROW(evaluate(parse("sqrt(q1)"), at(0, {-1.0}, {0.0})), Error);
  EXPECT_THROW(evaluate(parse("1/q1"), at(0, {0.0}, {0.0})), Error);
  EXPECT_THROW(evaluate(parse("q1^0.5"), at(0, {-2.0}, {0.0})), Error);
  try {
    evaluate(parse("qd1 + log(q1)"), at(0, {0.0}, {1.0}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::domain_error);
    EXPECT_NE(std::string(e.what()).find("log(q1)"), std::string::npos);
  }
  EXPECT_EQ(evaluate(parse("q1^2"), at(0, {-2.0}, {0.0})), 4.0);
}

TEST(Expr, SymbolOutsideBindingIsDimensionMismatch) {
  try {
    evaluate(parse("q3"), at(0, {1.0}, {0.0}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::dimension_mismatch);
  }
}

TEST(Expr, RoundTripPrint) {
  Rng rng(7);
  for (int k = 0; k < 200; ++k) {
    const Expr e = parse(to_string(random_tree(rng, 4)));
    EXPECT_EQ(parse(to_string(e)), e) << to_string(e);
  }
  for (const char* s : {"qd1^2/2 - q1^2/2", "-q1^2", "2^3^2", "sin(t)*exp(-q1)", "1.5e-3*qd2/(q1+2)"}) {
    const Expr e = parse(s);
    EXPECT_EQ(parse(to_string(e)), e) << s;
  }
}

TEST(Expr, CompiledMatchesInterpreterBitwise) {
  Rng rng(11);
  for (int k = 0; k < 200; ++k) {
    const Expr e = random_tree(rng, 4);
    const CompiledExpr c(e);
    const Binding b = random_binding(rng);
    EXPECT_EQ(c(b), evaluate(e, b)) << to_string(e);
  }
}

TEST(ExprProperty, DerivativeMatchesCentralDifference) {
  Rng rng(2024);
  const Symbol syms[] = {Symbol::t(), Symbol::q(1), Symbol::q(2), Symbol::qd(1), Symbol::qd(2)};
  int checked = 0;
  while (checked < 200) {
    const Expr e = random_tree(rng, 4);
    const Symbol x = syms[static_cast<int>(rng.unit() * 5.0)];
    Binding b = random_binding(rng);
    const double exact = evaluate(differentiate(e, x), b);
    const double h = 1e-6;
    Binding bp = b, bm = b;
    slot(bp, x) += h;
    slot(bm, x) -= h;
    const double fd = (evaluate(e, bp) - evaluate(e, bm)) / (2 * h);
    EXPECT_LE(std::abs(exact - fd), 1e-5 * (1 + std::abs(exact))) << to_string(e) << " d/d" << x.name();
    ++checked;
  }
}

TEST(ExprProperty, Linearity) {
  Rng rng(5);
  for (int k = 0; k < 50; ++k) {
    const Expr e1 = random_tree(rng, 3), e2 = random_tree(rng, 3);
    const double a = rng.uniform(-2, 2);
    const Symbol x = Symbol::q(1);
    const Expr lhs = differentiate(Expr::constant(a) * e1 + e2, x);
    const Expr rhs = Expr::constant(a) * differentiate(e1, x) + differentiate(e2, x);
    for (int j = 0; j < 20; ++j) {
      const Binding b = random_binding(rng);
      const double l = evaluate(lhs, b), r = evaluate(rhs, b);
      EXPECT_LE(std::abs(l - r), 1e-12 * std::max(1.0, std::abs(l)));
    }
  }
}

TEST(ExprProperty, ClairautSymmetry) {
  Rng rng(9);
  for (int k = 0; k < 50; ++k) {
    const Expr e = random_tree(rng, 4);
    const Expr xy = differentiate(differentiate(e, Symbol::q(1)), Symbol::qd(2));
    const Expr yx = differentiate(differentiate(e, Symbol::qd(2)), Symbol::q(1));
    for (int j = 0; j < 20; ++j) {
      const Binding b = random_binding(rng);
      const double l = evaluate(xy, b), r = evaluate(yx, b);
      EXPECT_LE(std::abs(l - r), 1e-12 * std::max(1.0, std::abs(l))) << to_string(e);
    }
  }
}

TEST(Expr, SimplifierFoldsAndAbsorbs) {
  const Expr q1 = Expr::symbol(Symbol::q(1));
  EXPECT_EQ(q1 * Expr::constant(1.0), q1);
  EXPECT_EQ(q1 + Expr::constant(0.0), q1);
  EXPECT_TRUE((q1 * Expr::constant(0.0)).is_constant(0.0));
  EXPECT_TRUE((Expr::constant(2.0) * Expr::constant(3.0)).is_constant(6.0));
}
