#include "hamfold/legendre.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "hamfold/random.hpp"

namespace hamfold {

namespace {

[[noreturn]] void fail(ErrorCode code, const std::string& msg) { throw Error(code, "legendre", msg); }

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

void check_size(const std::vector<double>& v, std::size_t want, const char* what) {
  if (v.size() != want) {
    fail(ErrorCode::dimension_mismatch, std::string(what) + " has length " + std::to_string(v.size()) +
                                            ", expected " + std::to_string(want));
  }
}

}  // namespace

const char* regime_name(Regime r) {
  switch (r) {
    case Regime::nondynamical: return "nondynamical";
    case Regime::dynamical: return "dynamical";
    case Regime::overextended: return "overextended";
  }
  return "?";
}

HamiltonianBundle::HamiltonianBundle(LagrangianSystem sys, Partition part, double pivot_tol,
                                     NewtonSettings newton)
    : sys_(std::move(sys)), part_(std::move(part)), pivot_tol_(pivot_tol), newton_(newton) {
  if (part_.n != sys_.n || part_.order.size() != sys_.n || part_.n_p > sys_.n) {
    fail(ErrorCode::dimension_mismatch, "partition does not match the " + std::to_string(sys_.n) +
                                            "-coordinate model '" + sys_.name + "'");
  }
}

Regime HamiltonianBundle::regime() const {
  if (part_.n_p == part_.r_w) return Regime::nondynamical;
  return part_.n_p < part_.r_w ? Regime::dynamical : Regime::overextended;
}

PhasePoint HamiltonianBundle::make_point(double t) const {
  PhasePoint x;
  x.t = t;
  x.q_c.assign(n_p(), 0.0);
  x.p.assign(n_p(), 0.0);
  x.q_nc.assign(n_nc(), 0.0);
  x.qd_nc.assign(n_nc(), 0.0);
  return x;
}

std::vector<double> HamiltonianBundle::full_q(const PhasePoint& x) const {
  std::vector<double> q(n());
  for (std::size_t i = 0; i < n_p(); ++i) q[part_.canonical(i)] = x.q_c[i];
  for (std::size_t a = 0; a < n_nc(); ++a) q[part_.noncanonical(a)] = x.q_nc[a];
  return q;
}

std::vector<double> HamiltonianBundle::full_qd(const PhasePoint& x, std::span<const double> v) const {
  std::vector<double> qd(n());
  for (std::size_t i = 0; i < n_p(); ++i) qd[part_.canonical(i)] = v[i];
  for (std::size_t a = 0; a < n_nc(); ++a) qd[part_.noncanonical(a)] = x.qd_nc[a];
  return qd;
}

PhasePoint HamiltonianBundle::phase_point_from_tangent(const Binding& b) const {
  if (b.q.size() != n() || b.qd.size() != n()) {
    fail(ErrorCode::dimension_mismatch, "tangent point does not have " + std::to_string(n()) + " coordinates");
  }
  PhasePoint x = make_point(b.t);
  for (std::size_t i = 0; i < n_p(); ++i) {
    x.q_c[i] = b.q[part_.canonical(i)];
    x.p[i] = sys_.dL_dqd[part_.canonical(i)](b);
  }
  for (std::size_t a = 0; a < n_nc(); ++a) {
    x.q_nc[a] = b.q[part_.noncanonical(a)];
    x.qd_nc[a] = b.qd[part_.noncanonical(a)];
  }
  return x;
}

std::vector<double> HamiltonianBundle::solve_canonical_velocities(const PhasePoint& x,
                                                                  std::span<const double> guess) const {
  check_size(x.q_c, n_p(), "q_c");
  check_size(x.p, n_p(), "p");
  check_size(x.q_nc, n_nc(), "q_nc");
  check_size(x.qd_nc, n_nc(), "qd_nc");
  const std::size_t np = n_p();
  std::vector<double> v(np, 0.0);
  if (np == 0) return v;
  if (!guess.empty()) {
    if (guess.size() != np) fail(ErrorCode::dimension_mismatch, "Newton guess has the wrong length");
    std::copy(guess.begin(), guess.end(), v.begin());
  }
  const std::vector<double> q = full_q(x);
  std::vector<double> qd = full_qd(x, v);
  std::vector<double> r(np);
  double res = 0.0;
  for (int it = 0;; ++it) {
    for (std::size_t i = 0; i < np; ++i) qd[part_.canonical(i)] = v[i];
    res = 0.0;
    for (std::size_t i = 0; i < np; ++i) {
      r[i] = sys_.dL_dqd[part_.canonical(i)](x.t, q, qd, {}) - x.p[i];
      res = std::max(res, std::abs(r[i]));
    }
    if (res <= newton_.tol) return v;
    if (it == newton_.max_iter) break;
    Matrix J(np, np);
    for (std::size_t i = 0; i < np; ++i)
      for (std::size_t j = 0; j < np; ++j)
        J(i, j) = sys_.hessian(part_.canonical(i), part_.canonical(j))(x.t, q, qd, {});
    LU lu(J, pivot_tol_);
    if (lu.singular()) {
      fail(ErrorCode::singular_jacobian, "canonical Hessian block singular at Newton iteration " +
                                             std::to_string(it) + " (min pivot " + fmt(lu.min_pivot()) + ")");
    }
    const std::vector<double> dv = lu.solve(r);
    for (std::size_t i = 0; i < np; ++i) v[i] -= dv[i];
    if (!std::all_of(v.begin(), v.end(), [](double z) { return std::isfinite(z); })) break;
  }
  fail(ErrorCode::no_convergence, "Newton did not converge in " + std::to_string(newton_.max_iter) +
                                      " iterations (last residual " + fmt(res) + ")");
}

HamiltonianEvaluation HamiltonianBundle::evaluate(const PhasePoint& x, std::span<const double> guess) const {
  HamiltonianEvaluation out;
  out.v = solve_canonical_velocities(x, guess);
  const std::size_t N = n(), np = n_p(), m = n_nc();
  const std::vector<double> q = full_q(x);
  const std::vector<double> qd = full_qd(x, out.v);
  const std::span<const double> none;
  auto at = [&](const CompiledExpr& e) { return e(x.t, q, qd, none); };

  std::vector<double> Lq(N), Lqd(N), Lqdt(N);
  Matrix W(N, N), M(N, N);  // M(A,B) = d2L/dqd^A dq^B
  for (std::size_t A = 0; A < N; ++A) {
    Lq[A] = at(sys_.dL_dq[A]);
    Lqd[A] = at(sys_.dL_dqd[A]);
    Lqdt[A] = at(sys_.d2L_dqd_dt[A]);
    for (std::size_t B = 0; B < N; ++B) {
      W(A, B) = at(sys_.hessian(A, B));
      M(A, B) = at(sys_.mixed(A, B));
    }
  }
  const double L = at(sys_.L);
  const double Lt = at(sys_.dL_dt);
  auto c = [&](std::size_t i) { return part_.canonical(i); };
  auto nc = [&](std::size_t a) { return part_.noncanonical(a); };
  auto coord_of_qc = c;

  // Explicit partials at fixed v, then chain through dv = -J^-1 dF.
  struct Explicit {
    PhaseGradient g;
    std::vector<double> d_dv;
  };
  auto blank = [&]() {
    Explicit e;
    e.g.d_dq_c.assign(np, 0.0);
    e.g.d_dp.assign(np, 0.0);
    e.g.d_dq_nc.assign(m, 0.0);
    e.g.d_dqd_nc.assign(m, 0.0);
    e.d_dv.assign(np, 0.0);
    return e;
  };

  std::vector<Explicit> hs;
  {
    Explicit e = blank();
    double val = -L;
    for (std::size_t i = 0; i < np; ++i) val += x.p[i] * out.v[i];
    for (std::size_t a = 0; a < m; ++a) val += Lqd[nc(a)] * x.qd_nc[a];
    e.g.value = val;
    auto dq = [&](std::size_t A) {
      double s = -Lq[A];
      for (std::size_t a = 0; a < m; ++a) s += M(nc(a), A) * x.qd_nc[a];
      return s;
    };
    for (std::size_t i = 0; i < np; ++i) e.g.d_dq_c[i] = dq(coord_of_qc(i));
    for (std::size_t b = 0; b < m; ++b) e.g.d_dq_nc[b] = dq(nc(b));
    for (std::size_t i = 0; i < np; ++i) e.g.d_dp[i] = out.v[i];
    for (std::size_t b = 0; b < m; ++b) {
      double s = 0.0;
      for (std::size_t a = 0; a < m; ++a) s += W(nc(a), nc(b)) * x.qd_nc[a];
      e.g.d_dqd_nc[b] = s;
    }
    double st = -Lt;
    for (std::size_t a = 0; a < m; ++a) st += Lqdt[nc(a)] * x.qd_nc[a];
    e.g.d_dt = st;
    for (std::size_t i = 0; i < np; ++i) {
      double s = x.p[i] - Lqd[c(i)];
      for (std::size_t a = 0; a < m; ++a) s += W(nc(a), c(i)) * x.qd_nc[a];
      e.d_dv[i] = s;
    }
    hs.push_back(std::move(e));
  }
  for (std::size_t a = 0; a < m; ++a) {
    Explicit e = blank();
    const std::size_t A = nc(a);
    e.g.value = -Lqd[A];
    for (std::size_t i = 0; i < np; ++i) e.g.d_dq_c[i] = -M(A, c(i));
    for (std::size_t b = 0; b < m; ++b) e.g.d_dq_nc[b] = -M(A, nc(b));
    for (std::size_t b = 0; b < m; ++b) e.g.d_dqd_nc[b] = -W(A, nc(b));
    e.g.d_dt = -Lqdt[A];
    for (std::size_t i = 0; i < np; ++i) e.d_dv[i] = -W(A, c(i));
    hs.push_back(std::move(e));
  }

  if (np > 0) {
    Matrix J(np, np);
    for (std::size_t i = 0; i < np; ++i)
      for (std::size_t j = 0; j < np; ++j) J(i, j) = W(c(i), c(j));
    LU lu(J.transposed(), pivot_tol_);
    if (lu.singular()) {
      fail(ErrorCode::singular_jacobian,
           "canonical Hessian block singular at the solution (min pivot " + fmt(lu.min_pivot()) + ")");
    }
    for (Explicit& e : hs) {
      // dH/dx = explicit - y . dF/dx with J^T y = dH/dv.
      const std::vector<double> y = lu.solve(e.d_dv);
      for (std::size_t i = 0; i < np; ++i) {
        const double yi = y[i];
        if (yi == 0.0) continue;
        const std::size_t Ci = c(i);
        for (std::size_t j = 0; j < np; ++j) e.g.d_dq_c[j] -= yi * M(Ci, c(j));
        for (std::size_t b = 0; b < m; ++b) e.g.d_dq_nc[b] -= yi * M(Ci, nc(b));
        e.g.d_dp[i] += yi;
        for (std::size_t b = 0; b < m; ++b) e.g.d_dqd_nc[b] -= yi * W(Ci, nc(b));
        e.g.d_dt -= yi * Lqdt[Ci];
      }
    }
  }

  out.h0 = std::move(hs[0].g);
  for (std::size_t a = 0; a < m; ++a) out.h_alpha.push_back(std::move(hs[a + 1].g));
  return out;
}

double HamiltonianBundle::eval_H0(const PhasePoint& x, std::span<const double> guess) const {
  return evaluate(x, guess).h0.value;
}

std::vector<double> HamiltonianBundle::eval_Halpha(const PhasePoint& x, std::span<const double> guess) const {
  HamiltonianEvaluation ev = evaluate(x, guess);
  std::vector<double> out;
  for (const PhaseGradient& g : ev.h_alpha) out.push_back(g.value);
  return out;
}

PhaseGradient HamiltonianBundle::grad_H(const PhasePoint& x, int which, std::span<const double> guess) const {
  if (which < -1 || which >= static_cast<int>(n_nc())) {
    fail(ErrorCode::invalid_argument, "no additional Hamiltonian with slot index " + std::to_string(which));
  }
  HamiltonianEvaluation ev = evaluate(x, guess);
  return which < 0 ? std::move(ev.h0) : std::move(ev.h_alpha[static_cast<std::size_t>(which)]);
}

double HamiltonianBundle::qd_dependence(const PhasePoint& x, std::uint64_t seed) const {
  if (n_nc() == 0) return 0.0;
  Rng rng(seed);
  PhasePoint a = x, b = x;
  for (auto& z : a.qd_nc) z = rng.uniform(-1.0, 1.0);
  for (auto& z : b.qd_nc) z = rng.uniform(-1.0, 1.0);
  const HamiltonianEvaluation ea = evaluate(a);
  const HamiltonianEvaluation eb = evaluate(b);
  double d = std::abs(ea.h0.value - eb.h0.value);
  for (std::size_t k = 0; k < n_nc(); ++k) d = std::max(d, std::abs(ea.h_alpha[k].value - eb.h_alpha[k].value));
  return d;
}

void HamiltonianBundle::require_nondynamical(const PhasePoint& x, std::uint64_t seed) const {
  const double d = qd_dependence(x, seed);
  if (d > 1e-9) {
    fail(ErrorCode::regime_violation,
         "H0/H_alpha depend on noncanonical velocities (two-point difference " + fmt(d) + ")");
  }
}

}  // namespace hamfold
