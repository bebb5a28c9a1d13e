#include "hamfold/multitime.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "hamfold/brackets.hpp"
#include "hamfold/ode.hpp"
#include "hamfold/random.hpp"

namespace hamfold {

namespace {

[[noreturn]] void fail(ErrorCode code, const std::string& msg) { throw Error(code, "multitime", msg); }

std::vector<std::string> numbered(const char* prefix, std::size_t from, std::size_t count) {
  std::vector<std::string> out;
  for (std::size_t k = 0; k < count; ++k) out.push_back(prefix + std::to_string(from + k));
  return out;
}

double pair_bracket(const MultiTimeGradient& A, const MultiTimeGradient& B) {
  double s = 0.0;
  for (std::size_t i = 0; i < A.d_dq.size(); ++i) s += A.d_dq[i] * B.d_dp[i] - B.d_dq[i] * A.d_dp[i];
  return s;
}

}  // namespace

MultiTimeSystem::MultiTimeSystem(std::string name, std::size_t n_p, std::size_t m, Evaluator eval,
                                 std::vector<std::string> q_labels, std::vector<std::string> tau_labels)
    : name_(std::move(name)),
      n_p_(n_p),
      m_(m),
      eval_(std::move(eval)),
      q_labels_(std::move(q_labels)),
      tau_labels_(std::move(tau_labels)) {
  if (q_labels_.empty()) q_labels_ = numbered("q", 1, n_p_);
  if (tau_labels_.empty()) tau_labels_ = numbered("tau", 0, m_ + 1);
}

MultiTimeSystem MultiTimeSystem::from_model(const HamiltonianBundle& bundle) {
  if (bundle.regime() != Regime::nondynamical) {
    throw Error(ErrorCode::regime_violation, "multitime",
                std::string("multi-time form needs the nondynamical regime, n_p = r_W; this partition is ") +
                    regime_name(bundle.regime()));
  }
  const Partition& part = bundle.partition();
  const std::vector<PhasePoint> probes = [&] {
    std::vector<PhasePoint> out;
    for (const Binding& b : make_probes(bundle.n())) out.push_back(bundle.phase_point_from_tangent(b));
    return out;
  }();
  for (const PhasePoint& x : probes) bundle.require_nondynamical(x);

  const std::size_t n_p = part.n_p, m = part.n_nc();
  std::vector<std::string> q_labels, tau_labels{"t"};
  for (std::size_t i = 0; i < n_p; ++i) q_labels.push_back(bundle.system().labels[part.canonical(i)]);
  for (std::size_t a = 0; a < m; ++a) tau_labels.push_back(bundle.system().labels[part.noncanonical(a)]);

  auto eval = [bundle, m](const MultiTimePoint& x) {
    PhasePoint y = bundle.make_point(x.tau[0]);
    y.q_c = x.q;
    y.p = x.p;
    for (std::size_t a = 0; a < m; ++a) y.q_nc[a] = x.tau[a + 1];
    const HamiltonianEvaluation ev = bundle.evaluate(y);
    auto convert = [&](const PhaseGradient& g) {
      MultiTimeGradient out;
      out.value = g.value;
      out.d_dtau.resize(m + 1);
      out.d_dtau[0] = g.d_dt;
      for (std::size_t a = 0; a < m; ++a) out.d_dtau[a + 1] = g.d_dq_nc[a];
      out.d_dq = g.d_dq_c;
      out.d_dp = g.d_dp;
      return out;
    };
    std::vector<MultiTimeGradient> H;
    H.push_back(convert(ev.h0));
    for (const PhaseGradient& g : ev.h_alpha) H.push_back(convert(g));
    return H;
  };
  return MultiTimeSystem(bundle.system().name, n_p, m, std::move(eval), std::move(q_labels), std::move(tau_labels));
}

MultiTimeSystem MultiTimeSystem::from_expressions(std::string name, std::size_t n_p,
                                                  const std::vector<std::string>& hamiltonians) {
  if (hamiltonians.empty()) fail(ErrorCode::invalid_argument, "at least one Hamiltonian (for tau^0) is required");
  const std::size_t m = hamiltonians.size() - 1;
  const std::size_t n = n_p + m;
  std::vector<Observable> obs;
  for (const std::string& h : hamiltonians) {
    Observable o(h, n);
    for (const Symbol& s : symbols_of(o.expr())) {
      if (s.kind == SymbolKind::momentum && static_cast<std::size_t>(s.index) > n_p) {
        fail(ErrorCode::symbol_space_mismatch,
             "'" + h + "' uses " + s.name() + " but only p1..p" + std::to_string(n_p) + " exist");
      }
    }
    obs.push_back(std::move(o));
  }
  auto eval = [obs, n_p, m](const MultiTimePoint& x) {
    ExtendedPoint e{x.tau[0], std::vector<double>(n_p + m), std::vector<double>(n_p + m, 0.0)};
    for (std::size_t i = 0; i < n_p; ++i) {
      e.q[i] = x.q[i];
      e.p[i] = x.p[i];
    }
    for (std::size_t a = 0; a < m; ++a) e.q[n_p + a] = x.tau[a + 1];
    std::vector<MultiTimeGradient> H;
    for (const Observable& o : obs) {
      const ExtendedGradient g = o.extended(e);
      MultiTimeGradient out;
      out.value = g.value;
      out.d_dtau.resize(m + 1);
      out.d_dtau[0] = g.d_dt;
      for (std::size_t a = 0; a < m; ++a) out.d_dtau[a + 1] = g.d_dq[n_p + a];
      out.d_dq.assign(g.d_dq.begin(), g.d_dq.begin() + static_cast<std::ptrdiff_t>(n_p));
      out.d_dp.assign(g.d_dp.begin(), g.d_dp.begin() + static_cast<std::ptrdiff_t>(n_p));
      H.push_back(std::move(out));
    }
    return H;
  };
  return MultiTimeSystem(std::move(name), n_p, m, std::move(eval));
}

MultiTimePoint MultiTimeSystem::make_point() const {
  return {std::vector<double>(m_ + 1, 0.0), std::vector<double>(n_p_, 0.0), std::vector<double>(n_p_, 0.0)};
}

double integrability_residual(const std::vector<MultiTimeGradient>& H, std::size_t mu, std::size_t nu) {
  return H[mu].d_dtau[nu] - H[nu].d_dtau[mu] + pair_bracket(H[mu], H[nu]);
}

namespace {

double max_residual(const std::vector<MultiTimeGradient>& H, std::size_t* wmu = nullptr, std::size_t* wnu = nullptr) {
  double worst = 0.0;
  for (std::size_t mu = 0; mu < H.size(); ++mu)
    for (std::size_t nu = mu + 1; nu < H.size(); ++nu) {
      const double r = std::abs(integrability_residual(H, mu, nu));
      if (r > worst) {
        worst = r;
        if (wmu) *wmu = mu;
        if (wnu) *wnu = nu;
      }
    }
  return worst;
}

}  // namespace

IntegrabilityReport check_integrability(const MultiTimeSystem& sys, const std::vector<MultiTimePoint>& probes) {
  IntegrabilityReport r;
  r.probes = probes.size();
  for (const MultiTimePoint& x : probes) {
    std::size_t mu = 0, nu = 0;
    const double v = max_residual(sys.evaluate(x), &mu, &nu);
    r.per_probe.push_back(v);
    if (v > r.max) {
      r.max = v;
      r.worst_mu = mu;
      r.worst_nu = nu;
    }
  }
  return r;
}

std::vector<MultiTimePoint> multitime_probes(const MultiTimeSystem& sys, std::size_t count, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<MultiTimePoint> out;
  for (std::size_t k = 0; k < count; ++k) {
    MultiTimePoint x = sys.make_point();
    x.tau[0] = rng.uniform(0.0, 1.0);
    for (std::size_t a = 1; a < x.tau.size(); ++a) x.tau[a] = rng.uniform(-1.0, 1.0);
    for (double& v : x.q) v = rng.uniform(-1.0, 1.0);
    for (double& v : x.p) v = rng.uniform(-1.0, 1.0);
    out.push_back(std::move(x));
  }
  return out;
}

TimePath::TimePath(std::vector<std::vector<double>> waypoints) : w_(std::move(waypoints)) {
  if (w_.empty()) fail(ErrorCode::invalid_argument, "path has no waypoints");
  const std::size_t d = w_.front().size();
  if (d == 0) fail(ErrorCode::invalid_argument, "waypoints need at least tau^0");
  for (std::size_t k = 0; k < w_.size(); ++k) {
    const auto& w = w_[k];
    if (w.size() != d) {
      fail(ErrorCode::invalid_argument, "waypoint " + std::to_string(k) + " has " + std::to_string(w.size()) +
                                            " entries, expected " + std::to_string(d));
    }
    for (double v : w)
      if (!std::isfinite(v)) fail(ErrorCode::invalid_argument, "waypoint " + std::to_string(k) + " is not finite");
    if (k == 0) continue;
    if (w == w_[k - 1]) fail(ErrorCode::invalid_argument, "waypoints " + std::to_string(k - 1) + " and " +
                                                               std::to_string(k) + " coincide");
    if (w[0] < w_[k - 1][0]) fail(ErrorCode::invalid_argument, "tau^0 decreases at waypoint " + std::to_string(k));
  }
}

double TimePath::length() const {
  double L = 0.0;
  for (std::size_t k = 1; k < w_.size(); ++k) {
    double s = 0.0;
    for (std::size_t j = 0; j < w_[k].size(); ++j) s += (w_[k][j] - w_[k - 1][j]) * (w_[k][j] - w_[k - 1][j]);
    L += std::sqrt(s);
  }
  return L;
}

TimePath parse_path(std::string_view text, std::size_t m) {
  std::vector<std::vector<double>> w;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<double> row;
    std::istringstream cells(line);
    std::string cell;
    while (std::getline(cells, cell, ',')) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(cell, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || cell.find_first_not_of(" \t\r", cell.find_first_not_of(" \t\r") + used) != std::string::npos) {
        fail(ErrorCode::invalid_argument, "path line " + std::to_string(lineno) + ": '" + cell + "' is not a number");
      }
      row.push_back(v);
    }
    if (row.size() != m + 1) {
      fail(ErrorCode::invalid_argument, "path line " + std::to_string(lineno) + " has " + std::to_string(row.size()) +
                                            " values, expected " + std::to_string(m + 1));
    }
    w.push_back(std::move(row));
  }
  return TimePath(std::move(w));
}

TimePath load_path_file(const std::string& file, std::size_t m) {
  std::ifstream in(file);
  if (!in) throw Error(ErrorCode::io_error, "multitime", "cannot read path file '" + file + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_path(ss.str(), m);
}

PathResult integrate_path(const MultiTimeSystem& sys, const MultiTimePoint& ic, const TimePath& path, double dt) {
  if (path.dimension() != sys.m() + 1) {
    fail(ErrorCode::dimension_mismatch, "path has " + std::to_string(path.dimension()) + " times, system has " +
                                            std::to_string(sys.m() + 1));
  }
  if (!(dt > 0.0)) fail(ErrorCode::invalid_argument, "dt must be positive");
  const std::size_t np = sys.n_p();
  for (double v : ic.q)
    if (!std::isfinite(v)) fail(ErrorCode::invalid_argument, "initial q not finite");
  for (double v : ic.p)
    if (!std::isfinite(v)) fail(ErrorCode::invalid_argument, "initial p not finite");

  PathResult out;
  MultiTimePoint x = ic;
  x.tau = path.waypoints().front();
  double s0 = 0.0;

  auto record = [&](double s, const MultiTimePoint& y) {
    const double r = max_residual(sys.evaluate(y));
    out.max_residual = std::max(out.max_residual, r);
    out.trace.push_back({s, y, r});
  };
  record(0.0, x);

  const auto& w = path.waypoints();
  for (std::size_t k = 1; k < w.size(); ++k) {
    std::vector<double> u(w[k].size());
    double L = 0.0;
    for (std::size_t j = 0; j < u.size(); ++j) {
      u[j] = w[k][j] - w[k - 1][j];
      L += u[j] * u[j];
    }
    L = std::sqrt(L);
    for (double& c : u) c /= L;
    const std::vector<double> start = w[k - 1], stop = w[k];

    auto tau_at = [&](double s) {
      std::vector<double> tau(start.size());
      // exact endpoint at s = L
      for (std::size_t j = 0; j < tau.size(); ++j) tau[j] = s == L ? stop[j] : start[j] + s * u[j];
      return tau;
    };
    ode::Rhs f = [&](double s, std::span<const double> y, std::span<double> dy) {
      MultiTimePoint z{tau_at(s), {y.begin(), y.begin() + static_cast<std::ptrdiff_t>(np)},
                       {y.begin() + static_cast<std::ptrdiff_t>(np), y.end()}};
      const auto H = sys.evaluate(z);
      for (std::size_t i = 0; i < np; ++i) {
        double dq = 0.0, dp = 0.0;
        for (std::size_t mu = 0; mu < H.size(); ++mu) {
          dq += H[mu].d_dp[i] * u[mu];
          dp -= H[mu].d_dq[i] * u[mu];
        }
        dy[i] = dq;
        dy[np + i] = dp;
      }
    };
    ode::State y(2 * np);
    for (std::size_t i = 0; i < np; ++i) {
      y[i] = x.q[i];
      y[np + i] = x.p[i];
    }
    ode::integrate_rk4(f, 0.0, y, L, dt, [&](double s, std::span<const double> yy) {
      if (s == 0.0) return true;
      x.tau = tau_at(s);
      x.q.assign(yy.begin(), yy.begin() + static_cast<std::ptrdiff_t>(np));
      x.p.assign(yy.begin() + static_cast<std::ptrdiff_t>(np), yy.end());
      record(s0 + s, x);
      return true;
    });
    s0 += L;
  }
  out.end = x;
  return out;
}

double endpoint_difference(const MultiTimePoint& a, const MultiTimePoint& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.q.size(); ++i) d = std::max(d, std::abs(a.q[i] - b.q[i]));
  for (std::size_t i = 0; i < a.p.size(); ++i) d = std::max(d, std::abs(a.p[i] - b.p[i]));
  return d;
}

}  // namespace hamfold
