#pragma once

// Independent oracle integrators. They use only the parsed Lagrangian and
// its symbolic derivatives; elimination, Newton and RK4 are local copies so
// no numerical code is shared with the partial formalism.

#include <functional>
#include <string>
#include <vector>

#include "hamfold/dynamics.hpp"
#include "hamfold/model.hpp"

namespace hamfold::reference {

/// Hand-derived reduced Euler-Lagrange system for a singular model.
/// order 1: f returns qd(t, q); order 2: f returns qdd(t, q, qd).
/// Coordinates fixed by the gauge condition get zero rates.
struct ReducedOracle {
  int order = 2;
  std::function<std::vector<double>(double t, const std::vector<double>& q, const std::vector<double>& qd)> f;
  std::string description;
};

/// W qdd = dL/dq - (d2L/dqd dq) qd - d2L/dqd dt, RK4 with the given step.
/// Throws oracle_undefined when W is singular along the way.
Trajectory euler_lagrange(const LagrangianSystem& sys, const Binding& ic, double t1, double dt);

/// dq = v(q, p), dp = dL/dq(q, v(q, p)) with v from a local Newton solve of
/// p = dL/dqd. Requires an invertible Hessian (r_W = n).
Trajectory full_hamilton(const LagrangianSystem& sys, double t0, const std::vector<double>& q0,
                         const std::vector<double>& p0, double t1, double dt);

/// Integrates a library reduced system. For order 1 only ic.q is used.
Trajectory reduced(const LagrangianSystem& sys, const ReducedOracle& oracle, const Binding& ic, double t1,
                   double dt);

}  // namespace hamfold::reference
