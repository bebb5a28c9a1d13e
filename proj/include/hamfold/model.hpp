#pragma once

// A parsed Lagrangian L(t, q, qd) with all first and second partials
// precomputed, and the Hessian rank analysis that splits coordinates into a
// canonical sector (momenta introduced) and a noncanonical one.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "hamfold/expr.hpp"
#include "hamfold/linalg.hpp"

namespace hamfold {

struct LagrangianSystem {
  std::string name;
  std::size_t n = 0;
  std::string source;  // lagrangian text as given
  std::vector<std::string> labels;  // display name of coordinate A (coords order)
  Expr lagrangian;

  CompiledExpr L;
  CompiledExpr dL_dt;
  std::vector<CompiledExpr> dL_dq;        // [A]
  std::vector<CompiledExpr> dL_dqd;       // [A]
  std::vector<CompiledExpr> W;            // [A*n+B] = d2L/dqd^A dqd^B
  std::vector<CompiledExpr> d2L_dqd_dq;   // [A*n+B] = d2L/dqd^A dq^B
  std::vector<CompiledExpr> d2L_dqd_dt;   // [A]

  const CompiledExpr& hessian(std::size_t a, std::size_t b) const { return W[a * n + b]; }
  const CompiledExpr& mixed(std::size_t a, std::size_t b) const { return d2L_dqd_dq[a * n + b]; }

  /// Numeric Hessian at a point of (t, q, qd).
  Matrix hessian_at(const Binding& at) const;
};

/// Builds the system; every symbol index must be <= n.
LagrangianSystem make_system(std::string name, std::size_t n, std::string_view lagrangian);

/// Parses the line-oriented model format:
///   name = <identifier>
///   coords = q1, q2, ..., qn
///   lagrangian = <expression>
/// '#' starts a comment. The coords order defines the coordinate index.
LagrangianSystem load_model(std::string_view file_text);
LagrangianSystem load_model_file(const std::string& path);

/// Coordinate split. `order[s]` is the (0-based) coordinate sitting in slot s;
/// slots [0, n_p) are canonical, [n_p, n) noncanonical.
struct Partition {
  std::size_t n = 0;
  std::size_t r_w = 0;
  std::size_t n_p = 0;
  std::vector<std::size_t> order;
  std::vector<std::size_t> slot_of;  // inverse of order

  std::size_t n_nc() const { return n - n_p; }
  std::size_t canonical(std::size_t i) const { return order[i]; }
  std::size_t noncanonical(std::size_t a) const { return order[n_p + a]; }
  bool is_canonical(std::size_t coord) const { return slot_of[coord] < n_p; }

  /// Same permutation, different number of momenta. 0 <= n_p <= n.
  Partition with_np(std::size_t n_p) const;
  static Partition identity(std::size_t n, std::size_t r_w, std::size_t n_p);
};

struct ProbeSettings {
  std::size_t count = 8;
  std::uint64_t seed = 42;
};

/// q, qd uniform in [-1, 1]; t alternates between 0 and 0.37.
std::vector<Binding> make_probes(std::size_t n, const ProbeSettings& settings = {});

struct HessianAnalysis {
  Partition partition;             // n_p = r_W
  std::vector<std::size_t> probe_ranks;
  std::size_t probes_used = 0;     // probes that evaluated without a domain error
  double degeneracy_residual = 0;  // max |Schur complement| over probes
};

/// Numeric rank of W at every probe by complete pivoting with threshold
/// pivot_tol * max|W|. Throws rank_variation when probes disagree and
/// all_probes_degenerate when no probe can be evaluated.
HessianAnalysis analyze_hessian(const LagrangianSystem& sys, const std::vector<Binding>& probes,
                                double pivot_tol = 1e-9);

/// Schur complement W_nn - W_nc W_cc^-1 W_cn of the canonical block at a
/// point, in noncanonical slot order. Zero exactly when the remaining
/// velocities drop out of H0 and H_alpha.
Matrix noncanonical_schur(const LagrangianSystem& sys, const Partition& part, const Binding& at,
                          double pivot_tol);

}  // namespace hamfold
