#pragma once

// Explicit Runge-Kutta integrators over std::vector<double> states: classical
// RK4 on a uniform grid and Dormand-Prince 5(4) with adaptive steps.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "hamfold/error.hpp"

namespace hamfold::ode {

using State = std::vector<double>;
using Rhs = std::function<void(double t, std::span<const double> y, std::span<double> dy)>;
/// Called after every accepted step (and once at t0). Return false to stop.
using Observer = std::function<bool(double t, std::span<const double> y)>;

/// Number of uniform steps covering [t0, t1] with step at most dt.
inline std::size_t uniform_steps(double t0, double t1, double dt) {
  const double ratio = (t1 - t0) / dt;
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(ratio * (1.0 - 1e-12))));
}

inline void rk4_step(const Rhs& f, double t, std::span<double> y, double h) {
  const std::size_t n = y.size();
  State k1(n), k2(n), k3(n), k4(n), tmp(n);
  f(t, y, k1);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
  f(t + 0.5 * h, tmp, k2);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
  f(t + 0.5 * h, tmp, k3);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * k3[i];
  f(t + h, tmp, k4);
  for (std::size_t i = 0; i < n; ++i) y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
}

/// Uniform grid t_k = t0 + k h, h = (t1 - t0) / N.
inline void integrate_rk4(const Rhs& f, double t0, State y, double t1, double dt, const Observer& obs) {
  if (!obs(t0, y)) return;
  if (t1 == t0) return;
  const std::size_t N = uniform_steps(t0, t1, dt);
  const double h = (t1 - t0) / static_cast<double>(N);
  for (std::size_t k = 0; k < N; ++k) {
    const double t = t0 + static_cast<double>(k) * h;
    rk4_step(f, t, y, h);
    const double tn = (k + 1 == N) ? t1 : t0 + static_cast<double>(k + 1) * h;
    if (!obs(tn, y)) return;
  }
}

struct Dopri5Settings {
  double rtol = 1e-8;
  double atol = 1e-8;
  double h_init = 1e-3;
  double h_min = 1e-14;
  std::size_t max_steps = 10'000'000;
};

/// Dormand-Prince 5(4), FSAL, standard PI-free step control.
inline void integrate_dopri5(const Rhs& f, double t0, State y, double t1, const Dopri5Settings& s,
                             const Observer& obs) {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                          a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                          b6 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                          e6 = 22.0 / 525, e7 = -1.0 / 40;

  if (!obs(t0, y)) return;
  if (t1 == t0) return;
  const std::size_t n = y.size();
  State k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), tmp(n), yn(n);
  double t = t0;
  double h = std::min(s.h_init, t1 - t0);
  f(t, y, k1);
  for (std::size_t step = 0; step < s.max_steps; ++step) {
    if (t + h > t1) h = t1 - t;
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * a21 * k1[i];
    f(t + c2 * h, tmp, k2);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
    f(t + c3 * h, tmp, k3);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
    f(t + c4 * h, tmp, k4);
    for (std::size_t i = 0; i < n; ++i)
      tmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
    f(t + c5 * h, tmp, k5);
    for (std::size_t i = 0; i < n; ++i)
      tmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
    f(t + h, tmp, k6);
    for (std::size_t i = 0; i < n; ++i)
      yn[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
    f(t + h, yn, k7);
    double err = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
      const double sc = s.atol + s.rtol * std::max(std::abs(y[i]), std::abs(yn[i]));
      err += (e / sc) * (e / sc);
    }
    err = n == 0 ? 0.0 : std::sqrt(err / static_cast<double>(n));
    if (err <= 1.0) {
      const bool last = (t + h >= t1);
      t = last ? t1 : t + h;
      y.swap(yn);
      k1.swap(k7);
      if (!obs(t, y) || last) return;
    }
    const double fac = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
    h *= fac;
    if (h < s.h_min) throw Error(ErrorCode::no_convergence, "dynamics", "adaptive step size underflow at t = " + std::to_string(t));
  }
  throw Error(ErrorCode::no_convergence, "dynamics", "adaptive step limit exceeded");
}

}  // namespace hamfold::ode
