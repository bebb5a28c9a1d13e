#pragma once

// Extended phase space with a momentum for every coordinate. Momenta of the
// noncanonical coordinates are tied down by the primary constraints
// Phi_a = p_a + H_a, and evolution runs under H_total = H0 + v^a Phi_a with
// the full Poisson bracket.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hamfold/brackets.hpp"
#include "hamfold/dynamics.hpp"

namespace hamfold {

struct ExtendedEvaluation {
  ExtendedGradient h0;
  std::vector<ExtendedGradient> h_alpha;
  std::vector<ExtendedGradient> phi;
};

class ConstraintSet {
 public:
  /// Needs the nondynamical regime (n_p = r_W).
  explicit ConstraintSet(Dynamics dyn);

  const Dynamics& dynamics() const { return dyn_; }
  const HamiltonianBundle& bundle() const { return dyn_.bundle(); }
  std::size_t count() const { return bundle().n_nc(); }
  /// Gauge or abelian-limit classification: some constraints first-class-like.
  bool first_class_like() const;
  /// "Phi<A> = p<A> + H<A>" per constraint.
  std::vector<std::string> describe() const;

  ExtendedEvaluation evaluate(const ExtendedPoint& x) const;
  std::vector<double> values(const ExtendedPoint& x) const;

  /// q, p_i from the reduced point, p_a := -H_a.
  ExtendedPoint lift(const PhasePoint& x) const;
  PhasePoint project(const ExtendedPoint& x) const;

 private:
  Dynamics dyn_;
};

ConstraintSet build_constraints(const LagrangianSystem& sys, DynamicsOptions opts = {});

/// H0 + v^a Phi_a at x, v held fixed.
ExtendedGradient total_hamiltonian(const ExtendedEvaluation& ev, const std::vector<double>& v);

struct ConsistencySystem {
  Matrix F_full;              // {Phi_a, Phi_b}_full
  std::vector<double> G_full;  // {H0, Phi_a}_full - dPhi_a/dt, so that F_full v = G_full
  std::vector<double> v;       // solved velocities, gauge part from the input
  std::size_t free = 0;        // undetermined v components
  double max_phi = 0.0;
  double consistency = 0.0;    // |G_a2 - lambda G_a1|
};

/// Throws off_surface when max |Phi| > surface_tol, inconsistent_system as
/// solve_velocities, and higher_stage_constraint when the v-independent
/// relations hold at x but are not preserved by the flow.
ConsistencySystem consistency_system(const ConstraintSet& cs, const ExtendedPoint& x,
                                     std::span<const double> gauge_input = {}, double surface_tol = 1e-8);

struct EquivalenceReport {
  std::string model;
  std::size_t constraints = 0;
  std::string classification;
  std::size_t points = 0;
  std::size_t skipped_points = 0;
  double max_phi = 0.0;          // on the sampled surface points
  double f_gap = 0.0;             // max |F - {Phi, Phi}_full|
  double dh0_gap = 0.0;             // max |D_a H0 - {H0, Phi_a}_full|
  double dh0_gap_swapped = 0.0;     // max |D_a H0 - {Phi_a, H0}_full|, swapped operand order
  double g_identity = 0.0;       // max |G - ({H0, Phi}_full - dPhi/dt)|
  std::optional<double> dirac_vs_nongauge;  // second-class-like case only
  std::size_t pairs = 0;
};

/// Random reduced points lifted to the surface; in the nongauge case also
/// compares the Dirac bracket with the nongauge bracket on random observable
/// pairs (`pairs` of them).
EquivalenceReport verify_equivalence(const ConstraintSet& cs, std::size_t n_points, std::uint64_t seed,
                                     std::size_t pairs = 50);

/// {A,B}_full - {A,Phi_a} Fbar^{ab} {Phi_b,B}.
double dirac_bracket(const ExtendedGradient& A, const ExtendedGradient& B, const ExtendedEvaluation& ev,
                     const Matrix& Fbar);

struct ExtendedRun {
  Trajectory trajectory;           // q, qd in model order, p of the canonical coordinates
  std::vector<std::vector<double>> p_full;  // all momenta per point
  std::vector<double> max_phi;     // per point
  double drift = 0.0;              // max over the run
};

/// Full Hamilton equations of H_total with v from consistency_system at every
/// stage, RK4 on a uniform grid. Errors truncate the run and are attached.
ExtendedRun evolve_total(const ConstraintSet& cs, const ExtendedPoint& ic, double t1, double dt,
                         std::span<const double> gauge_input = {});

struct ConstraintCount {
  std::size_t n_p = 0;
  std::size_t r_w = 0;
  std::size_t block_rank = 0;  // rank of the canonical Hessian block
  std::size_t count = 0;       // n_p - block_rank
  std::vector<std::size_t> probe_ranks;
};

/// Primary constraints from the momentum definitions p_i = dL/dqd^i for the
/// first n_p slots of the Hessian ordering. Throws invalid_argument for
/// n_p > n and rank_variation when probes disagree.
ConstraintCount count_primary_constraints(const LagrangianSystem& sys, std::size_t n_p,
                                          const ProbeSettings& probes = {}, double pivot_tol = 1e-9);

}  // namespace hamfold
