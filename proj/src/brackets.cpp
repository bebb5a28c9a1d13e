#include "hamfold/brackets.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

namespace hamfold {

namespace {

[[noreturn]] void fail(ErrorCode code, const std::string& msg) { throw Error(code, "brackets", msg); }

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

PhaseGradient zero_gradient(std::size_t np, std::size_t m) {
  PhaseGradient g;
  g.d_dq_c.assign(np, 0.0);
  g.d_dp.assign(np, 0.0);
  g.d_dq_nc.assign(m, 0.0);
  g.d_dqd_nc.assign(m, 0.0);
  return g;
}

}  // namespace

// ---------------------------------------------------------------- Observable

Observable::Observable(std::string_view text, std::size_t n) : Observable(parse(text, Grammar::phase), n) {}

Observable::Observable(Expr e, std::size_t n) : expr_(std::move(e)), n_(n) {
  for (const Symbol& s : symbols_of(expr_)) {
    if (s.kind == SymbolKind::velocity) {
      fail(ErrorCode::symbol_space_mismatch, "observable may not contain velocity " + s.name());
    }
    if (s.kind != SymbolKind::time && static_cast<std::size_t>(s.index) > n) {
      fail(ErrorCode::symbol_space_mismatch,
           "symbol " + s.name() + " outside the " + std::to_string(n) + "-coordinate phase space");
    }
    if (s.kind == SymbolKind::momentum) momenta_.push_back(s.index - 1);
  }
  value_ = CompiledExpr(expr_);
  d_dt_ = CompiledExpr(differentiate(expr_, Symbol::t()));
  for (std::size_t A = 0; A < n; ++A) {
    const int k = static_cast<int>(A + 1);
    d_dq_.emplace_back(differentiate(expr_, Symbol::q(k)));
    d_dp_.emplace_back(differentiate(expr_, Symbol::p(k)));
  }
}

PhaseGradient Observable::reduced(const HamiltonianBundle& bundle, const PhasePoint& x) const {
  const Partition& part = bundle.partition();
  if (n_ != bundle.n()) fail(ErrorCode::symbol_space_mismatch, "observable built for a different model size");
  for (int A : momenta_) {
    if (!part.is_canonical(static_cast<std::size_t>(A))) {
      fail(ErrorCode::symbol_space_mismatch,
           "p" + std::to_string(A + 1) + " is not a coordinate of the reduced phase space");
    }
  }
  const std::size_t np = part.n_p, m = part.n_nc();
  const std::vector<double> q = bundle.full_q(x);
  std::vector<double> p(n_, 0.0);
  for (std::size_t i = 0; i < np; ++i) p[part.canonical(i)] = x.p[i];
  const std::span<const double> none;
  PhaseGradient g = zero_gradient(np, m);
  g.value = value_(x.t, q, none, p);
  g.d_dt = d_dt_(x.t, q, none, p);
  for (std::size_t i = 0; i < np; ++i) {
    g.d_dq_c[i] = d_dq_[part.canonical(i)](x.t, q, none, p);
    g.d_dp[i] = d_dp_[part.canonical(i)](x.t, q, none, p);
  }
  for (std::size_t a = 0; a < m; ++a) g.d_dq_nc[a] = d_dq_[part.noncanonical(a)](x.t, q, none, p);
  return g;
}

ExtendedGradient Observable::extended(const ExtendedPoint& x) const {
  if (x.q.size() != n_ || x.p.size() != n_) {
    fail(ErrorCode::dimension_mismatch, "extended point does not have " + std::to_string(n_) + " coordinates");
  }
  const std::span<const double> none;
  ExtendedGradient g;
  g.value = value_(x.t, x.q, none, x.p);
  g.d_dt = d_dt_(x.t, x.q, none, x.p);
  g.d_dq.resize(n_);
  g.d_dp.resize(n_);
  for (std::size_t A = 0; A < n_; ++A) {
    g.d_dq[A] = d_dq_[A](x.t, x.q, none, x.p);
    g.d_dp[A] = d_dp_[A](x.t, x.q, none, x.p);
  }
  return g;
}

// ------------------------------------------------------------ gradient algebra

PhaseGradient scaled_sum(double a, const PhaseGradient& A, double b, const PhaseGradient& B) {
  PhaseGradient g = A;
  g.value = a * A.value + b * B.value;
  g.d_dt = a * A.d_dt + b * B.d_dt;
  auto mix = [&](std::vector<double>& out, const std::vector<double>& x, const std::vector<double>& y) {
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = a * x[k] + b * y[k];
  };
  mix(g.d_dq_c, A.d_dq_c, B.d_dq_c);
  mix(g.d_dp, A.d_dp, B.d_dp);
  mix(g.d_dq_nc, A.d_dq_nc, B.d_dq_nc);
  mix(g.d_dqd_nc, A.d_dqd_nc, B.d_dqd_nc);
  return g;
}

PhaseGradient product(const PhaseGradient& A, const PhaseGradient& B) {
  PhaseGradient g = A;
  g.value = A.value * B.value;
  g.d_dt = A.d_dt * B.value + A.value * B.d_dt;
  auto mix = [&](std::vector<double>& out, const std::vector<double>& x, const std::vector<double>& y) {
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = x[k] * B.value + A.value * y[k];
  };
  mix(g.d_dq_c, A.d_dq_c, B.d_dq_c);
  mix(g.d_dp, A.d_dp, B.d_dp);
  mix(g.d_dq_nc, A.d_dq_nc, B.d_dq_nc);
  mix(g.d_dqd_nc, A.d_dqd_nc, B.d_dqd_nc);
  return g;
}

// ------------------------------------------------------------------ brackets

double poisson_reduced(const PhaseGradient& A, const PhaseGradient& B) {
  if (A.d_dq_c.size() != B.d_dq_c.size()) fail(ErrorCode::symbol_space_mismatch, "gradients of different spaces");
  double s = 0.0;
  for (std::size_t i = 0; i < A.d_dq_c.size(); ++i) s += A.d_dq_c[i] * B.d_dp[i] - B.d_dq_c[i] * A.d_dp[i];
  return s;
}

double poisson_full(const ExtendedGradient& A, const ExtendedGradient& B) {
  if (A.d_dq.size() != B.d_dq.size()) fail(ErrorCode::symbol_space_mismatch, "gradients of different spaces");
  double s = 0.0;
  for (std::size_t k = 0; k < A.d_dq.size(); ++k) s += A.d_dq[k] * B.d_dp[k] - B.d_dq[k] * A.d_dp[k];
  return s;
}

double D_alpha(const PhaseGradient& A, std::size_t alpha, const HamiltonianEvaluation& ev, bool generator) {
  if (alpha >= ev.h_alpha.size()) fail(ErrorCode::invalid_argument, "D_alpha: slot out of range");
  const PhaseGradient& Ha = ev.h_alpha[alpha];
  double d = A.d_dq_nc[alpha] + poisson_reduced(A, Ha);
  if (generator) d -= Ha.d_dt;
  return d;
}

RankInfo rank_of_F(const Matrix& F, double pivot_tol) {
  const double mx = F.max_abs();
  if (mx <= pivot_tol) {
    RankInfo info = rank_complete_pivoting(Matrix(F.rows(), F.cols()), pivot_tol);
    info.max_entry = mx;
    return info;
  }
  return rank_complete_pivoting(F, mx < 1.0 ? pivot_tol / mx : pivot_tol);
}

FGSystem build_FG(const HamiltonianEvaluation& ev, double pivot_tol, FGOptions opts) {
  const std::size_t m = ev.h_alpha.size();
  FGSystem fg;
  fg.F = Matrix(m, m);
  fg.G.assign(m, 0.0);
  for (std::size_t a = 0; a < m; ++a) {
    const PhaseGradient& Ha = ev.h_alpha[a];
    for (std::size_t b = 0; b < m; ++b) {
      const PhaseGradient& Hb = ev.h_alpha[b];
      fg.F(a, b) = (Ha.d_dq_nc[b] - Hb.d_dq_nc[a]) + poisson_reduced(Ha, Hb);
    }
    fg.G[a] = D_alpha(ev.h0, a, ev, opts.include_time_term);
  }
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = 0; b < m; ++b) fg.antisymmetry = std::max(fg.antisymmetry, std::abs(fg.F(a, b) + fg.F(b, a)));
  fg.max_abs_F = fg.F.max_abs();
  fg.rank_info = rank_of_F(fg.F, pivot_tol);
  fg.r_F = fg.rank_info.rank;
  return fg;
}

FGSystem build_FG(const HamiltonianBundle& bundle, const PhasePoint& x, FGOptions opts) {
  bundle.require_nondynamical(x);
  return build_FG(bundle.evaluate(x), bundle.pivot_tol(), opts);
}

Matrix invert_F(const FGSystem& fg, double pivot_tol) {
  const std::size_t m = fg.F.rows();
  if (fg.r_F < m) {
    fail(ErrorCode::singular_f, "F has rank " + std::to_string(fg.r_F) + " < " + std::to_string(m));
  }
  LU lu(fg.F, pivot_tol * std::max(1.0, fg.max_abs_F));
  if (lu.singular()) fail(ErrorCode::singular_f, "F is singular (min pivot " + fmt(lu.min_pivot()) + ")");
  Matrix inv = lu.inverse();
  Matrix out(m, m);
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = 0; b < m; ++b) out(a, b) = 0.5 * (inv(a, b) - inv(b, a));
  return out;
}

GaugeDecomposition decompose(const FGSystem& fg, double pivot_tol,
                             const std::optional<std::vector<std::size_t>>& alpha1) {
  const std::size_t m = fg.F.rows();
  GaugeDecomposition d;
  if (alpha1) {
    d.alpha1 = *alpha1;
  } else {
    d.alpha1.assign(fg.rank_info.row_order.begin(), fg.rank_info.row_order.begin() + fg.r_F);
  }
  std::vector<bool> in1(m, false);
  for (std::size_t a : d.alpha1) {
    if (a >= m || in1[a]) fail(ErrorCode::invalid_argument, "invalid independent index set for F");
    in1[a] = true;
  }
  for (std::size_t a = 0; a < m; ++a)
    if (!in1[a]) d.alpha2.push_back(a);
  const std::size_t k = d.alpha1.size();

  FGSystem sub;
  sub.F = fg.F.submatrix(d.alpha1, d.alpha1);
  sub.max_abs_F = sub.F.max_abs();
  sub.r_F = k;
  d.F11bar = k == 0 ? Matrix() : invert_F(sub, pivot_tol);

  d.lambda = Matrix(d.alpha2.size(), k);
  for (std::size_t r = 0; r < d.alpha2.size(); ++r)
    for (std::size_t c = 0; c < k; ++c) {
      double s = 0.0;
      for (std::size_t j = 0; j < k; ++j) s += fg.F(d.alpha2[r], d.alpha1[j]) * d.F11bar(j, c);
      d.lambda(r, c) = s;
    }
  for (std::size_t r = 0; r < d.alpha2.size(); ++r) {
    for (std::size_t b = 0; b < m; ++b) {
      double s = fg.F(d.alpha2[r], b);
      for (std::size_t c = 0; c < k; ++c) s -= d.lambda(r, c) * fg.F(d.alpha1[c], b);
      d.row_residual = std::max(d.row_residual, std::abs(s));
    }
    double g = fg.G[d.alpha2[r]];
    for (std::size_t c = 0; c < k; ++c) g -= d.lambda(r, c) * fg.G[d.alpha1[c]];
    d.g_residual.push_back(g);
  }
  return d;
}

const char* bracket_kind_name(BracketKind k) {
  switch (k) {
    case BracketKind::poisson: return "poisson";
    case BracketKind::nongauge: return "nongauge";
    case BracketKind::gauge: return "gauge";
  }
  return "?";
}

BracketContext make_bracket_context(const HamiltonianBundle& bundle, const PhasePoint& x, BracketKind kind,
                                    const std::optional<std::vector<std::size_t>>& alpha1, FGOptions opts) {
  BracketContext ctx;
  ctx.x = x;
  ctx.ev = bundle.evaluate(x);
  if (kind == BracketKind::poisson) return ctx;
  ctx.fg = build_FG(ctx.ev, bundle.pivot_tol(), opts);
  if (kind == BracketKind::nongauge) {
    ctx.Fbar = invert_F(ctx.fg, bundle.pivot_tol());
  } else {
    ctx.gauge = decompose(ctx.fg, bundle.pivot_tol(), alpha1);
  }
  return ctx;
}

double bracket_nongauge(const PhaseGradient& A, const PhaseGradient& B, const BracketContext& ctx) {
  const std::size_t m = ctx.ev.h_alpha.size();
  if (ctx.Fbar.rows() != m) {
    fail(ErrorCode::singular_f, "nongauge bracket needs an invertible F (rank " + std::to_string(ctx.fg.r_F) +
                                    " of " + std::to_string(m) + ")");
  }
  double s = poisson_reduced(A, B);
  if (m == 0) return s;
  std::vector<double> DA(m), DB(m);
  for (std::size_t a = 0; a < m; ++a) {
    DA[a] = D_alpha(A, a, ctx.ev);
    DB[a] = D_alpha(B, a, ctx.ev);
  }
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = 0; b < m; ++b) s += DA[a] * ctx.Fbar(a, b) * DB[b];
  return s;
}

double bracket_gauge(const PhaseGradient& A, const PhaseGradient& B, const BracketContext& ctx) {
  if (!ctx.gauge) fail(ErrorCode::missing_decomposition, "gauge bracket needs a block decomposition of F");
  const GaugeDecomposition& d = *ctx.gauge;
  double s = poisson_reduced(A, B);
  const std::size_t k = d.alpha1.size();
  if (k == 0) return s;
  std::vector<double> DA(k), DB(k);
  for (std::size_t j = 0; j < k; ++j) {
    DA[j] = D_alpha(A, d.alpha1[j], ctx.ev);
    DB[j] = D_alpha(B, d.alpha1[j], ctx.ev);
  }
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = 0; b < k; ++b) s += DA[a] * d.F11bar(a, b) * DB[b];
  return s;
}

double bracket(BracketKind kind, const PhaseGradient& A, const PhaseGradient& B, const BracketContext& ctx) {
  switch (kind) {
    case BracketKind::poisson: return poisson_reduced(A, B);
    case BracketKind::nongauge: return bracket_nongauge(A, B, ctx);
    case BracketKind::gauge: return bracket_gauge(A, B, ctx);
  }
  return 0.0;
}

// -------------------------------------------------------------- axiom suite

PhasePoint random_phase_point(const HamiltonianBundle& bundle, Rng& rng) {
  PhasePoint x = bundle.make_point(rng.uniform(0.0, 1.0));
  for (auto& z : x.q_c) z = rng.uniform(-1.0, 1.0);
  for (auto& z : x.p) z = rng.uniform(-1.0, 1.0);
  for (auto& z : x.q_nc) z = rng.uniform(-1.0, 1.0);
  return x;
}

Observable random_observable(const HamiltonianBundle& bundle, Rng& rng) {
  const Partition& part = bundle.partition();
  std::vector<Expr> vars;
  for (std::size_t i = 0; i < part.n_p; ++i) {
    const int k = static_cast<int>(part.canonical(i) + 1);
    vars.push_back(Expr::symbol(Symbol::q(k)));
    vars.push_back(Expr::symbol(Symbol::p(k)));
  }
  for (std::size_t a = 0; a < part.n_nc(); ++a)
    vars.push_back(Expr::symbol(Symbol::q(static_cast<int>(part.noncanonical(a) + 1))));
  Expr e = Expr::constant(rng.uniform(-1.0, 1.0));
  for (std::size_t k = 0; k < vars.size(); ++k) e = e + Expr::constant(rng.uniform(-1.0, 1.0)) * vars[k];
  for (std::size_t k = 0; k < vars.size(); ++k)
    for (std::size_t l = k; l < vars.size(); ++l)
      e = e + Expr::constant(rng.uniform(-1.0, 1.0)) * vars[k] * vars[l];
  return Observable(e, bundle.n());
}

namespace {

// Phase variables in the order q_c, p, q_nc.
std::size_t phase_dim(const PhasePoint& x) { return x.q_c.size() + x.p.size() + x.q_nc.size(); }

double& phase_var(PhasePoint& x, std::size_t k) {
  if (k < x.q_c.size()) return x.q_c[k];
  k -= x.q_c.size();
  if (k < x.p.size()) return x.p[k];
  return x.q_nc[k - x.p.size()];
}

void set_grad(PhaseGradient& g, std::size_t k, double v) {
  if (k < g.d_dq_c.size()) {
    g.d_dq_c[k] = v;
    return;
  }
  k -= g.d_dq_c.size();
  if (k < g.d_dp.size()) {
    g.d_dp[k] = v;
    return;
  }
  g.d_dq_nc[k - g.d_dp.size()] = v;
}

}  // namespace

AxiomReport check_bracket_axioms(BracketKind kind, const HamiltonianBundle& bundle, const AxiomSettings& s) {
  AxiomReport rep;
  rep.kind = kind;
  rep.model = bundle.system().name;
  rep.triples = s.triples;
  Rng rng(s.seed);
  std::vector<Observable> obs;
  for (std::size_t k = 0; k < 3 * s.triples; ++k) obs.push_back(random_observable(bundle, rng));
  std::vector<std::pair<double, double>> coeff;
  for (std::size_t k = 0; k < s.triples; ++k) coeff.emplace_back(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));

  const std::size_t np = bundle.n_p(), m = bundle.n_nc();
  for (std::size_t pt = 0; pt < s.points; ++pt) {
    const PhasePoint x0 = random_phase_point(bundle, rng);
    const std::size_t dim = phase_dim(x0);
    // Contexts at x0 and at x0 +- h e_k, shared by every triple.
    std::vector<BracketContext> ctx;
    std::vector<double> h(dim);
    try {
      ctx.push_back(make_bracket_context(bundle, x0, kind, s.alpha1));
      for (std::size_t k = 0; k < dim; ++k) {
        PhasePoint xp = x0, xm = x0;
        h[k] = s.fd_scale * std::max(1.0, std::abs(phase_var(xp, k)));
        phase_var(xp, k) += h[k];
        phase_var(xm, k) -= h[k];
        ctx.push_back(make_bracket_context(bundle, xp, kind, s.alpha1));
        ctx.push_back(make_bracket_context(bundle, xm, kind, s.alpha1));
      }
    } catch (const Error& e) {
      if (e.code() == ErrorCode::singular_f || e.code() == ErrorCode::no_convergence ||
          e.code() == ErrorCode::singular_jacobian || e.code() == ErrorCode::domain_error) {
        ++rep.skipped_points;
        continue;
      }
      throw;
    }
    ++rep.points;
    const BracketContext& c0 = ctx[0];
    auto br = [&](const PhaseGradient& a, const PhaseGradient& b, const BracketContext& c) {
      return bracket(kind, a, b, c);
    };
    // Gradient of x -> {X, Y}(x) by central differences over the cached contexts.
    auto nested = [&](const Observable& X, const Observable& Y) {
      PhaseGradient g = zero_gradient(np, m);
      g.value = br(X.reduced(bundle, x0), Y.reduced(bundle, x0), c0);
      for (std::size_t k = 0; k < dim; ++k) {
        const BracketContext& cp = ctx[1 + 2 * k];
        const BracketContext& cm = ctx[2 + 2 * k];
        const double fp = br(X.reduced(bundle, cp.x), Y.reduced(bundle, cp.x), cp);
        const double fm = br(X.reduced(bundle, cm.x), Y.reduced(bundle, cm.x), cm);
        set_grad(g, k, (fp - fm) / (2.0 * h[k]));
      }
      return g;
    };

    for (std::size_t tr = 0; tr < s.triples; ++tr) {
      const Observable& A = obs[3 * tr];
      const Observable& B = obs[3 * tr + 1];
      const Observable& C = obs[3 * tr + 2];
      const PhaseGradient a = A.reduced(bundle, x0);
      const PhaseGradient b = B.reduced(bundle, x0);
      const PhaseGradient c = C.reduced(bundle, x0);
      const auto [ca, cb] = coeff[tr];

      rep.antisymmetry = std::max(rep.antisymmetry, std::abs(br(a, b, c0) + br(b, a, c0)));
      rep.antisymmetry = std::max(rep.antisymmetry, std::abs(br(a, a, c0)));
      const double lin = br(scaled_sum(ca, a, cb, b), c, c0) - ca * br(a, c, c0) - cb * br(b, c, c0);
      rep.bilinearity = std::max(rep.bilinearity, std::abs(lin));
      const double leib = br(a, product(b, c), c0) - b.value * br(a, c, c0) - br(a, b, c0) * c.value;
      rep.leibniz = std::max(rep.leibniz, std::abs(leib));
      const double jac = br(a, nested(B, C), c0) + br(b, nested(C, A), c0) + br(c, nested(A, B), c0);
      rep.jacobi = std::max(rep.jacobi, std::abs(jac));
    }
  }
  return rep;
}

}  // namespace hamfold
