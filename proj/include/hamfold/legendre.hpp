#pragma once

// Partial Legendre transform: momenta p_i = dL/dqd^i for the canonical slots
// only, the partial Hamiltonian H0 = p_i qd^i + (dL/dqd^a) qd^a - L and the
// additional Hamiltonians H_a = -dL/dqd^a, all evaluated on the reduced
// phase space (q^i, p_i, q^a) with canonical velocities recovered by Newton.

#include <optional>
#include <span>
#include <vector>

#include "hamfold/linalg.hpp"
#include "hamfold/model.hpp"

namespace hamfold {

/// Point of the reduced phase space. Vectors follow partition slot order.
/// qd_nc is ignored in the nondynamical regime but always sized n - n_p.
struct PhasePoint {
  double t = 0.0;
  std::vector<double> q_c;
  std::vector<double> p;
  std::vector<double> q_nc;
  std::vector<double> qd_nc;
};

/// Value and first partials of a scalar on the reduced space.
struct PhaseGradient {
  double value = 0.0;
  double d_dt = 0.0;
  std::vector<double> d_dq_c;
  std::vector<double> d_dp;
  std::vector<double> d_dq_nc;
  std::vector<double> d_dqd_nc;
};

struct NewtonSettings {
  double tol = 1e-12;  // infinity norm of dL/dqd^i - p_i
  int max_iter = 50;
};

/// How the noncanonical sector behaves for a given n_p.
enum class Regime {
  nondynamical,  // n_p = r_W: H0, H_a independent of qd_nc, algebraic velocities
  dynamical,     // n_p < r_W: second-order equations for q^a
  overextended,  // n_p > r_W: canonical block singular, constraints appear
};

const char* regime_name(Regime r);

/// Everything the brackets and dynamics need at one phase point.
struct HamiltonianEvaluation {
  std::vector<double> v;  // solved canonical velocities
  int newton_iterations = 0;
  PhaseGradient h0;
  std::vector<PhaseGradient> h_alpha;  // noncanonical slot order
};

class HamiltonianBundle {
 public:
  HamiltonianBundle(LagrangianSystem sys, Partition part, double pivot_tol = 1e-9,
                    NewtonSettings newton = {});

  const LagrangianSystem& system() const { return sys_; }
  const Partition& partition() const { return part_; }
  double pivot_tol() const { return pivot_tol_; }
  std::size_t n() const { return sys_.n; }
  std::size_t n_p() const { return part_.n_p; }
  std::size_t n_nc() const { return part_.n_nc(); }
  Regime regime() const;

  /// Newton on dL/dqd^i(t, q, v, qd_nc) = p_i. Empty guess means zeros.
  std::vector<double> solve_canonical_velocities(const PhasePoint& x,
                                                 std::span<const double> guess = {}) const;

  double eval_H0(const PhasePoint& x, std::span<const double> guess = {}) const;
  std::vector<double> eval_Halpha(const PhasePoint& x, std::span<const double> guess = {}) const;

  /// which = -1 selects H0, otherwise the noncanonical slot index of H_a.
  PhaseGradient grad_H(const PhasePoint& x, int which, std::span<const double> guess = {}) const;

  /// H0, every H_a, and all their partials in one Newton solve.
  HamiltonianEvaluation evaluate(const PhasePoint& x, std::span<const double> guess = {}) const;

  /// Evaluates H0 and H_a at two random qd_nc and returns the largest
  /// difference. Zero (to rounding) in the nondynamical regime.
  double qd_dependence(const PhasePoint& x, std::uint64_t seed) const;

  /// Throws regime_violation if qd_dependence exceeds 1e-9.
  void require_nondynamical(const PhasePoint& x, std::uint64_t seed = 7) const;

  // Conversions between the reduced space and the full (t, q, qd) tangent
  // space. Momenta come from p_i = dL/dqd^i.
  PhasePoint phase_point_from_tangent(const Binding& b) const;
  std::vector<double> full_q(const PhasePoint& x) const;
  std::vector<double> full_qd(const PhasePoint& x, std::span<const double> v) const;

  /// Zero-initialized point with the right vector sizes.
  PhasePoint make_point(double t = 0.0) const;

 private:
  LagrangianSystem sys_;
  Partition part_;
  double pivot_tol_;
  NewtonSettings newton_;
};

}  // namespace hamfold
