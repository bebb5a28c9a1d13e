#include "hamfold/reference.hpp"

#include <cmath>
#include <limits>

namespace hamfold::reference {

namespace {

[[noreturn]] void undefined(const std::string& msg) { throw Error(ErrorCode::oracle_undefined, "reference", msg); }

// Gaussian elimination with partial pivoting on a copy; empty result if singular.
std::vector<double> gauss_solve(std::vector<std::vector<double>> a, std::vector<double> b) {
  const std::size_t n = b.size();
  double scale = 0.0;
  for (const auto& row : a)
    for (double x : row) scale = std::max(scale, std::abs(x));
  const double tol = 1e-12 * std::max(1.0, scale);
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    for (std::size_t r = k + 1; r < n; ++r)
      if (std::abs(a[r][k]) > std::abs(a[piv][k])) piv = r;
    if (std::abs(a[piv][k]) <= tol) return {};
    std::swap(a[k], a[piv]);
    std::swap(b[k], b[piv]);
    for (std::size_t r = k + 1; r < n; ++r) {
      const double f = a[r][k] / a[k][k];
      for (std::size_t c = k; c < n; ++c) a[r][c] -= f * a[k][c];
      b[r] -= f * b[k];
    }
  }
  std::vector<double> x(n);
  for (std::size_t k = n; k-- > 0;) {
    double s = b[k];
    for (std::size_t c = k + 1; c < n; ++c) s -= a[k][c] * x[c];
    x[k] = s / a[k][k];
  }
  return x;
}

using Field = std::function<std::vector<double>(double, const std::vector<double>&)>;

// Classical RK4 on t_k = t0 + k (t1 - t0) / N, N = ceil((t1 - t0) / dt).
template <class Record>
void rk4(const Field& f, double t0, std::vector<double> y, double t1, double dt, Record record) {
  const double ratio = (t1 - t0) / dt;
  const std::size_t N = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(ratio * (1.0 - 1e-12))));
  const double h = (t1 - t0) / static_cast<double>(N);
  record(t0, y);
  std::vector<double> tmp(y.size());
  for (std::size_t k = 0; k < N; ++k) {
    const double t = t0 + static_cast<double>(k) * h;
    const auto k1 = f(t, y);
    for (std::size_t i = 0; i < y.size(); ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
    const auto k2 = f(t + 0.5 * h, tmp);
    for (std::size_t i = 0; i < y.size(); ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
    const auto k3 = f(t + 0.5 * h, tmp);
    for (std::size_t i = 0; i < y.size(); ++i) tmp[i] = y[i] + h * k3[i];
    const auto k4 = f(t + h, tmp);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    record((k + 1 == N) ? t1 : t0 + static_cast<double>(k + 1) * h, y);
  }
}

Trajectory blank(const LagrangianSystem& sys, const std::string& method) {
  Trajectory tr;
  tr.model = sys.name;
  tr.method = method;
  tr.labels = sys.labels;
  return tr;
}

std::vector<double> el_accel(const LagrangianSystem& sys, double t, const std::vector<double>& q,
                             const std::vector<double>& qd) {
  const std::size_t n = sys.n;
  const std::vector<double> none;
  std::vector<std::vector<double>> W(n, std::vector<double>(n));
  std::vector<double> rhs(n);
  for (std::size_t A = 0; A < n; ++A) {
    double s = sys.dL_dq[A](t, q, qd, none) - sys.d2L_dqd_dt[A](t, q, qd, none);
    for (std::size_t B = 0; B < n; ++B) {
      W[A][B] = sys.hessian(A, B)(t, q, qd, none);
      s -= sys.mixed(A, B)(t, q, qd, none) * qd[B];
    }
    rhs[A] = s;
  }
  std::vector<double> a = gauss_solve(std::move(W), std::move(rhs));
  if (a.empty()) undefined("Hessian of '" + sys.name + "' is singular; Euler-Lagrange oracle undefined");
  return a;
}

std::vector<double> velocities(const LagrangianSystem& sys, double t, const std::vector<double>& q,
                               const std::vector<double>& p, std::vector<double> v) {
  const std::size_t n = sys.n;
  const std::vector<double> none;
  for (int it = 0; it < 60; ++it) {
    std::vector<double> r(n);
    double res = 0.0;
    for (std::size_t A = 0; A < n; ++A) {
      r[A] = sys.dL_dqd[A](t, q, v, none) - p[A];
      res = std::max(res, std::abs(r[A]));
    }
    if (res <= 1e-13) return v;
    std::vector<std::vector<double>> W(n, std::vector<double>(n));
    for (std::size_t A = 0; A < n; ++A)
      for (std::size_t B = 0; B < n; ++B) W[A][B] = sys.hessian(A, B)(t, q, v, none);
    std::vector<double> dv = gauss_solve(std::move(W), std::move(r));
    if (dv.empty()) undefined("Hessian of '" + sys.name + "' is singular; full Hamilton oracle undefined");
    for (std::size_t A = 0; A < n; ++A) v[A] -= dv[A];
  }
  undefined("momentum map inversion did not converge");
}

}  // namespace

Trajectory euler_lagrange(const LagrangianSystem& sys, const Binding& ic, double t1, double dt) {
  const std::size_t n = sys.n;
  if (ic.q.size() != n || ic.qd.size() != n) throw Error(ErrorCode::dimension_mismatch, "reference", "bad ic");
  Trajectory tr = blank(sys, "rk4");
  Field f = [&](double t, const std::vector<double>& y) {
    std::vector<double> q(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(n));
    std::vector<double> qd(y.begin() + static_cast<std::ptrdiff_t>(n), y.end());
    std::vector<double> a = el_accel(sys, t, q, qd);
    std::vector<double> dy(qd);
    dy.insert(dy.end(), a.begin(), a.end());
    return dy;
  };
  std::vector<double> y(ic.q);
  y.insert(y.end(), ic.qd.begin(), ic.qd.end());
  rk4(f, ic.t, y, t1, dt, [&](double t, const std::vector<double>& s) {
    TrajectoryPoint pt;
    pt.t = t;
    pt.q.assign(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(n));
    pt.qd.assign(s.begin() + static_cast<std::ptrdiff_t>(n), s.end());
    pt.H0 = std::numeric_limits<double>::quiet_NaN();
    tr.points.push_back(std::move(pt));
  });
  return tr;
}

Trajectory full_hamilton(const LagrangianSystem& sys, double t0, const std::vector<double>& q0,
                         const std::vector<double>& p0, double t1, double dt) {
  const std::size_t n = sys.n;
  if (q0.size() != n || p0.size() != n) throw Error(ErrorCode::dimension_mismatch, "reference", "bad ic");
  Trajectory tr = blank(sys, "rk4");
  for (std::size_t A = 0; A < n; ++A) tr.canonical.push_back(A);
  std::vector<double> guess(n, 0.0);
  const std::vector<double> none;
  Field f = [&](double t, const std::vector<double>& y) {
    std::vector<double> q(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(n));
    std::vector<double> p(y.begin() + static_cast<std::ptrdiff_t>(n), y.end());
    std::vector<double> v = velocities(sys, t, q, p, guess);
    guess = v;
    std::vector<double> dy(v);
    for (std::size_t A = 0; A < n; ++A) dy.push_back(sys.dL_dq[A](t, q, v, none));
    return dy;
  };
  std::vector<double> y(q0);
  y.insert(y.end(), p0.begin(), p0.end());
  rk4(f, t0, y, t1, dt, [&](double t, const std::vector<double>& s) {
    TrajectoryPoint pt;
    pt.t = t;
    pt.q.assign(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(n));
    pt.p.assign(s.begin() + static_cast<std::ptrdiff_t>(n), s.end());
    pt.qd = velocities(sys, t, pt.q, pt.p, guess);
    double H = -sys.L(t, pt.q, pt.qd, none);
    for (std::size_t A = 0; A < n; ++A) H += pt.p[A] * pt.qd[A];
    pt.H0 = H;
    tr.points.push_back(std::move(pt));
  });
  return tr;
}

Trajectory reduced(const LagrangianSystem& sys, const ReducedOracle& oracle, const Binding& ic, double t1,
                   double dt) {
  const std::size_t n = sys.n;
  if (ic.q.size() != n) throw Error(ErrorCode::dimension_mismatch, "reference", "bad ic");
  Trajectory tr = blank(sys, "rk4");
  const bool second = oracle.order == 2;
  Field f = [&](double t, const std::vector<double>& y) {
    std::vector<double> q(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(n));
    if (!second) return oracle.f(t, q, {});
    std::vector<double> qd(y.begin() + static_cast<std::ptrdiff_t>(n), y.end());
    std::vector<double> a = oracle.f(t, q, qd);
    std::vector<double> dy(qd);
    dy.insert(dy.end(), a.begin(), a.end());
    return dy;
  };
  std::vector<double> y(ic.q);
  if (second) {
    if (ic.qd.size() != n) throw Error(ErrorCode::dimension_mismatch, "reference", "bad ic");
    y.insert(y.end(), ic.qd.begin(), ic.qd.end());
  }
  rk4(f, ic.t, y, t1, dt, [&](double t, const std::vector<double>& s) {
    TrajectoryPoint pt;
    pt.t = t;
    pt.q.assign(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(n));
    pt.qd = second ? std::vector<double>(s.begin() + static_cast<std::ptrdiff_t>(n), s.end()) : oracle.f(t, pt.q, {});
    pt.H0 = std::numeric_limits<double>::quiet_NaN();
    tr.points.push_back(std::move(pt));
  });
  return tr;
}

}  // namespace hamfold::reference
