#pragma once

// Multi-time reading of the nondynamical regime: the noncanonical coordinates
// become extra times tau^1..tau^m next to tau^0 = t, each with its own
// Hamiltonian, and dq^i = {q^i, H_mu} dtau^mu, dp_i = {p_i, H_mu} dtau^mu.

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "hamfold/legendre.hpp"

namespace hamfold {

struct MultiTimePoint {
  std::vector<double> tau;  // length m + 1
  std::vector<double> q;    // length n_p
  std::vector<double> p;
};

struct MultiTimeGradient {
  double value = 0.0;
  std::vector<double> d_dtau;
  std::vector<double> d_dq;
  std::vector<double> d_dp;
};

class MultiTimeSystem {
 public:
  /// All m + 1 Hamiltonians with their partials at a point.
  using Evaluator = std::function<std::vector<MultiTimeGradient>(const MultiTimePoint&)>;

  MultiTimeSystem(std::string name, std::size_t n_p, std::size_t m, Evaluator eval,
                  std::vector<std::string> q_labels = {}, std::vector<std::string> tau_labels = {});

  /// tau^0 = t, tau^mu = noncanonical coordinate mu, H_mu = H_alpha. Throws
  /// regime_violation outside the nondynamical regime.
  static MultiTimeSystem from_model(const HamiltonianBundle& bundle);

  /// Hamiltonians as phase-grammar text over t (tau^0), q1..q<n_p>, p1..p<n_p>
  /// and q<n_p+mu> (tau^mu).
  static MultiTimeSystem from_expressions(std::string name, std::size_t n_p,
                                          const std::vector<std::string>& hamiltonians);

  const std::string& name() const { return name_; }
  std::size_t n_p() const { return n_p_; }
  std::size_t m() const { return m_; }
  /// No canonical pairs left: the flow is trivial.
  bool degenerate() const { return n_p_ == 0; }
  const std::vector<std::string>& q_labels() const { return q_labels_; }
  const std::vector<std::string>& tau_labels() const { return tau_labels_; }

  std::vector<MultiTimeGradient> evaluate(const MultiTimePoint& x) const { return eval_(x); }

  MultiTimePoint make_point() const;

 private:
  std::string name_;
  std::size_t n_p_;
  std::size_t m_;
  Evaluator eval_;
  std::vector<std::string> q_labels_;
  std::vector<std::string> tau_labels_;
};

/// dH_mu/dtau^nu - dH_nu/dtau^mu + {H_mu, H_nu}.
double integrability_residual(const std::vector<MultiTimeGradient>& H, std::size_t mu, std::size_t nu);

struct IntegrabilityReport {
  std::size_t probes = 0;
  double max = 0.0;
  std::size_t worst_mu = 0;
  std::size_t worst_nu = 0;
  std::vector<double> per_probe;
};

IntegrabilityReport check_integrability(const MultiTimeSystem& sys, const std::vector<MultiTimePoint>& probes);

/// tau^0 in [0, 1], everything else uniform in [-1, 1].
std::vector<MultiTimePoint> multitime_probes(const MultiTimeSystem& sys, std::size_t count, std::uint64_t seed);

/// Piecewise-linear path. Waypoints have length m + 1, consecutive ones
/// differ, tau^0 never decreases.
class TimePath {
 public:
  explicit TimePath(std::vector<std::vector<double>> waypoints);

  const std::vector<std::vector<double>>& waypoints() const { return w_; }
  std::size_t dimension() const { return w_.front().size(); }
  double length() const;

 private:
  std::vector<std::vector<double>> w_;
};

/// Lines of comma-separated reals; blank lines and '#' comments skipped.
TimePath parse_path(std::string_view text, std::size_t m);
TimePath load_path_file(const std::string& file, std::size_t m);

struct PathSample {
  double s = 0.0;  // arclength
  MultiTimePoint x;
  double residual = 0.0;  // max integrability residual at the sample
};

struct PathResult {
  MultiTimePoint end;
  std::vector<PathSample> trace;
  double max_residual = 0.0;
};

/// RK4 in arclength with step at most dt on every segment. `ic.tau` is
/// replaced by the first waypoint.
PathResult integrate_path(const MultiTimeSystem& sys, const MultiTimePoint& ic, const TimePath& path, double dt);

/// Max over q and p of |a - b|.
double endpoint_difference(const MultiTimePoint& a, const MultiTimePoint& b);

}  // namespace hamfold
