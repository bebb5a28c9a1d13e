#pragma once

// Equations of motion of the partial formalism. Canonical pairs follow
//   qd^i = dH0/dp_i + dH_b/dp_i qd^b,   pd_i = -dH0/dq^i - dH_b/dq^i qd^b,
// and the noncanonical velocities solve F qd = G (nondynamical regime) or
// S qdd = G - F qd with S_ab = dH_a/dqd^b (dynamical regime).

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hamfold/brackets.hpp"
#include "hamfold/legendre.hpp"
#include "hamfold/model.hpp"

namespace hamfold {

enum class ClassKind { nongauge, gauge, abelian_limit, dynamical };
const char* class_kind_name(ClassKind k);

struct Classification {
  ClassKind kind = ClassKind::nongauge;
  std::size_t r_F = 0;
  std::size_t gauge_parameters = 0;  // n - n_p - r_F in the nondynamical regime
  std::vector<std::size_t> alpha1;   // independent rows of F (noncanonical slots)
  std::vector<std::size_t> alpha2;   // gauge directions
  double max_abs_F = 0.0;            // over probes
  std::vector<std::size_t> probe_ranks;
  std::size_t probes_used = 0;
};

/// Phase points made from the tangent-space probes (momenta p_i = dL/dqd^i).
std::vector<PhasePoint> phase_probes(const HamiltonianBundle& bundle, const ProbeSettings& settings = {});

/// Rank of F at every probe. Throws rank_variation when probes disagree and
/// regime_violation when n_p = r_W but H depends on qd_nc.
Classification classify(const HamiltonianBundle& bundle, const std::vector<PhasePoint>& probes,
                        FGOptions opts = {});

/// qd^{a1} = F11bar (G_{a1} - F_{a1 a2} g), qd^{a2} = g with the split of
/// `cls`. Throws inconsistent_system when |G_{a2} - lambda G_{a1}| > tol.
std::vector<double> solve_velocities(const FGSystem& fg, const Classification& cls,
                                     std::span<const double> gauge_input, double pivot_tol,
                                     double consistency_tol = 1e-6);

struct DynamicsOptions {
  FGOptions fg;
  std::vector<double> gauge;  // constant qd^{a2}; empty means zeros
  double consistency_tol = 1e-6;
};

struct RhsResult {
  std::vector<double> dy;
  HamiltonianEvaluation ev;
  FGSystem fg;
  std::vector<double> qd_nc;   // noncanonical velocities used
  std::vector<double> qdd_nc;  // dynamical regime only
  double residual = 0.0;       // max |F qd - G| (plus S qdd in the dynamical regime)
  double consistency = 0.0;    // max |G_{a2} - lambda G_{a1}|
};

/// State layout: q_c, p, q_nc, and qd_nc in the dynamical regime.
class Dynamics {
 public:
  Dynamics(HamiltonianBundle bundle, Classification cls, DynamicsOptions opts = {});

  const HamiltonianBundle& bundle() const { return bundle_; }
  const Classification& classification() const { return cls_; }
  const DynamicsOptions& options() const { return opts_; }
  bool second_order() const { return bundle_.regime() == Regime::dynamical; }

  std::size_t state_size() const;
  std::vector<double> pack(const PhasePoint& x) const;
  PhasePoint unpack(double t, std::span<const double> y) const;

  RhsResult rhs(const PhasePoint& x, std::span<const double> guess = {}) const;

 private:
  HamiltonianBundle bundle_;
  Classification cls_;
  DynamicsOptions opts_;
  std::vector<double> gauge_;
};

/// Convenience: analyze, build the bundle with the given n_p (default r_W),
/// classify at the default probes.
Dynamics make_dynamics(const LagrangianSystem& sys, std::optional<std::size_t> n_p = std::nullopt,
                       DynamicsOptions opts = {}, const ProbeSettings& probes = {}, double pivot_tol = 1e-9);

struct TrajectoryPoint {
  double t = 0.0;
  std::vector<double> q;   // model order
  std::vector<double> qd;  // model order
  std::vector<double> p;   // momenta of `Trajectory::canonical`
  double H0 = 0.0;
  double residual = 0.0;
  double consistency = 0.0;
  std::size_t r_F = 0;
};

struct Trajectory {
  std::string model;
  std::string method;
  std::vector<std::string> labels;     // coordinate labels, model order
  std::vector<std::size_t> canonical;  // coordinates carrying a momentum
  std::vector<TrajectoryPoint> points;
  std::optional<Error> error;          // set when integration stopped early

  bool complete() const { return !error.has_value(); }
};

enum class Method { rk4, rk45 };
const char* method_name(Method m);

struct IntegrateSettings {
  double t1 = 10.0;
  double dt = 1e-3;
  Method method = Method::rk4;
  double rtol = 1e-8;
  double atol = 1e-8;
};

/// Integrates from ic (t0 = ic.t). Throws initial_condition_inconsistent for
/// inconsistent gauge data; later failures truncate the trajectory and are
/// attached to it.
Trajectory integrate(const Dynamics& dyn, const PhasePoint& ic, const IntegrateSettings& settings);

struct SecondOrderResidual {
  std::vector<double> t;
  std::vector<double> residual;  // max over alpha of |LHS - RHS| at interior points
  double max = 0.0;
};

/// Evaluates the general noncanonical second-order equation along a
/// trajectory, with qd^a and qdd^a from central differences of q^a and the
/// total time derivative by differences. Accepts trajectories of any origin
/// that carry full (q, qd).
SecondOrderResidual second_order_residual(const HamiltonianBundle& bundle, const Trajectory& traj, FGOptions opts = {});

/// Max over matched points of the infinity norm of q differences. Throws
/// invalid_argument when the time grids differ.
double max_q_difference(const Trajectory& a, const Trajectory& b);

/// Max |H0(t) - H0(t0)|.
double h0_drift(const Trajectory& traj);

/// True when L contains no explicit t.
bool explicitly_time_dependent(const LagrangianSystem& sys);

}  // namespace hamfold
