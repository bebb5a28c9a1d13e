#pragma once

// Bracket structures on the reduced phase space (q^i, p_i, q^a): the reduced
// Poisson bracket, the operator D_a, the tensor F and vector G, the nongauge
// and gauge brackets, the full Poisson bracket on the extended space, and a
// randomized axiom checker.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hamfold/expr.hpp"
#include "hamfold/legendre.hpp"
#include "hamfold/linalg.hpp"
#include "hamfold/random.hpp"

namespace hamfold {

/// Point of the extended phase space: every coordinate has a momentum.
/// Vectors are indexed by coordinate (model order), not by slot.
struct ExtendedPoint {
  double t = 0.0;
  std::vector<double> q;
  std::vector<double> p;
};

struct ExtendedGradient {
  double value = 0.0;
  double d_dt = 0.0;
  std::vector<double> d_dq;
  std::vector<double> d_dp;
};

/// Phase-space function given as an expression over t, q<A>, p<A>, with
/// A the coordinate index of the model. On the reduced space only momenta
/// of canonical coordinates may appear.
class Observable {
 public:
  Observable(std::string_view text, std::size_t n);
  Observable(Expr e, std::size_t n);

  const Expr& expr() const { return expr_; }
  std::string text() const { return to_string(expr_); }
  std::size_t n() const { return n_; }

  /// Throws symbol_space_mismatch if a momentum of a noncanonical coordinate appears.
  PhaseGradient reduced(const HamiltonianBundle& bundle, const PhasePoint& x) const;
  ExtendedGradient extended(const ExtendedPoint& x) const;

 private:
  Expr expr_;
  std::size_t n_;
  std::vector<int> momenta_;  // 0-based coordinates whose p appears
  CompiledExpr value_;
  CompiledExpr d_dt_;
  std::vector<CompiledExpr> d_dq_;
  std::vector<CompiledExpr> d_dp_;
};

// Algebra on gradients, exact to rounding.
PhaseGradient scaled_sum(double a, const PhaseGradient& A, double b, const PhaseGradient& B);
PhaseGradient product(const PhaseGradient& A, const PhaseGradient& B);

/// sum_i dA/dq^i dB/dp_i - dB/dq^i dA/dp_i over canonical pairs.
double poisson_reduced(const PhaseGradient& A, const PhaseGradient& B);

/// The same over all n pairs of the extended space.
double poisson_full(const ExtendedGradient& A, const ExtendedGradient& B);

/// D_a A = dA/dq^a + {A, H_a}, minus dH_a/dt when A is flagged as the
/// evolution generator.
double D_alpha(const PhaseGradient& A, std::size_t alpha, const HamiltonianEvaluation& ev,
               bool generator = false);

struct FGOptions {
  bool include_time_term = true;  // the -dH_a/dt term of G
};

struct FGSystem {
  Matrix F;
  std::vector<double> G;
  std::size_t r_F = 0;
  double max_abs_F = 0.0;
  double antisymmetry = 0.0;  // max |F + F^T|
  RankInfo rank_info;
};

/// Numeric rank with threshold pivot_tol * max(1, max|F|).
RankInfo rank_of_F(const Matrix& F, double pivot_tol);

/// F and G from an evaluation that is already at hand; no regime check.
FGSystem build_FG(const HamiltonianEvaluation& ev, double pivot_tol, FGOptions opts = {});

/// Checks the nondynamical condition at x, evaluates, builds F and G.
FGSystem build_FG(const HamiltonianBundle& bundle, const PhasePoint& x, FGOptions opts = {});

/// Split of the noncanonical slots into independent (alpha1) and dependent
/// (alpha2) rows of F, with lambda expressing alpha2 rows through alpha1 rows.
struct GaugeDecomposition {
  std::vector<std::size_t> alpha1;
  std::vector<std::size_t> alpha2;
  Matrix F11bar;  // inverse of F restricted to alpha1 x alpha1
  Matrix lambda;  // |alpha2| x |alpha1|, lambda = F_{alpha2 alpha1} F11bar
  double row_residual = 0.0;        // max |F_{alpha2 beta} - lambda F_{alpha1 beta}| over all beta
  std::vector<double> g_residual;   // G_{alpha2} - lambda G_{alpha1}
  double max_g_residual() const { return max_abs(g_residual); }
};

/// With `alpha1` empty-optional the pivot rows of complete pivoting are used.
/// Throws singular_f if the chosen block is singular.
GaugeDecomposition decompose(const FGSystem& fg, double pivot_tol,
                             const std::optional<std::vector<std::size_t>>& alpha1 = std::nullopt);

/// Inverse of a full-rank F, projected onto antisymmetric matrices.
Matrix invert_F(const FGSystem& fg, double pivot_tol);

enum class BracketKind { poisson, nongauge, gauge };
const char* bracket_kind_name(BracketKind k);

/// Everything a bracket needs at one phase point.
struct BracketContext {
  PhasePoint x;
  HamiltonianEvaluation ev;
  FGSystem fg;
  Matrix Fbar;                               // nongauge
  std::optional<GaugeDecomposition> gauge;   // gauge
};

BracketContext make_bracket_context(const HamiltonianBundle& bundle, const PhasePoint& x, BracketKind kind,
                                    const std::optional<std::vector<std::size_t>>& alpha1 = std::nullopt,
                                    FGOptions opts = {});

/// {A,B} + D_a A Fbar^{ab} D_b B. Throws singular_f when F is rank deficient.
double bracket_nongauge(const PhaseGradient& A, const PhaseGradient& B, const BracketContext& ctx);

/// {A,B} + D_a1 A Fbar^{a1 b1} D_b1 B. Throws missing_decomposition without a split.
double bracket_gauge(const PhaseGradient& A, const PhaseGradient& B, const BracketContext& ctx);

double bracket(BracketKind kind, const PhaseGradient& A, const PhaseGradient& B, const BracketContext& ctx);

struct AxiomSettings {
  std::size_t points = 100;
  std::size_t triples = 50;
  std::uint64_t seed = 42;
  double fd_scale = 1e-4;  // nested brackets: h = fd_scale * max(1, |x|)
  std::optional<std::vector<std::size_t>> alpha1;  // gauge split
};

struct AxiomReport {
  BracketKind kind = BracketKind::poisson;
  std::string model;
  std::size_t points = 0;
  std::size_t triples = 0;
  std::size_t skipped_points = 0;  // F singular or Newton failure
  double antisymmetry = 0.0;
  double bilinearity = 0.0;
  double leibniz = 0.0;
  double jacobi = 0.0;
};

/// Random polynomial observables of degree <= 2 in (q^i, p_i, q^a).
Observable random_observable(const HamiltonianBundle& bundle, Rng& rng);

/// Random phase point with q^i, p_i, q^a uniform in [-1, 1] and t in [0, 1].
PhasePoint random_phase_point(const HamiltonianBundle& bundle, Rng& rng);

AxiomReport check_bracket_axioms(BracketKind kind, const HamiltonianBundle& bundle,
                                 const AxiomSettings& settings = {});

}  // namespace hamfold
