#include "hamfold/model.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "hamfold/random.hpp"

namespace hamfold {

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

[[noreturn]] void format_error(const std::string& msg) {
  throw Error(ErrorCode::model_format, "model", msg);
}

}  // namespace

Matrix LagrangianSystem::hessian_at(const Binding& at) const {
  Matrix m(n, n);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b) m(a, b) = hessian(a, b)(at);
  return m;
}

LagrangianSystem make_system(std::string name, std::size_t n, std::string_view lagrangian) {
  if (n == 0) format_error("model needs at least one coordinate");
  LagrangianSystem sys;
  sys.name = std::move(name);
  sys.n = n;
  sys.source = std::string(lagrangian);
  for (std::size_t a = 0; a < n; ++a) sys.labels.push_back("q" + std::to_string(a + 1));
  sys.lagrangian = parse(lagrangian, Grammar::lagrangian);
  for (const Symbol& s : symbols_of(sys.lagrangian)) {
    if (s.kind != SymbolKind::time && static_cast<std::size_t>(s.index) > n) {
      throw Error(ErrorCode::dimension_mismatch, "model",
                  "symbol " + s.name() + " exceeds the " + std::to_string(n) +
                      "-coordinate model '" + sys.name + "'");
    }
  }
  const Expr& L = sys.lagrangian;
  sys.L = CompiledExpr(L);
  sys.dL_dt = CompiledExpr(differentiate(L, Symbol::t()));
  std::vector<Expr> first_qd(n);
  for (std::size_t a = 0; a < n; ++a) {
    const int k = static_cast<int>(a + 1);
    sys.dL_dq.emplace_back(differentiate(L, Symbol::q(k)));
    first_qd[a] = differentiate(L, Symbol::qd(k));
    sys.dL_dqd.emplace_back(first_qd[a]);
    sys.d2L_dqd_dt.emplace_back(differentiate(first_qd[a], Symbol::t()));
  }
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      const int k = static_cast<int>(b + 1);
      sys.W.emplace_back(differentiate(first_qd[a], Symbol::qd(k)));
      sys.d2L_dqd_dq.emplace_back(differentiate(first_qd[a], Symbol::q(k)));
    }
  }
  return sys;
}

LagrangianSystem load_model(std::string_view file_text) {
  std::map<std::string, std::string> fields;
  std::istringstream in{std::string(file_text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::string text = trim(line);
    if (text.empty()) continue;
    auto eq = text.find('=');
    if (eq == std::string::npos) format_error("line " + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(std::string_view(text).substr(0, eq));
    std::string value = trim(std::string_view(text).substr(eq + 1));
    if (key != "name" && key != "coords" && key != "lagrangian") {
      format_error("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
    if (!fields.emplace(key, value).second) {
      format_error("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    }
  }
  for (const char* key : {"name", "coords", "lagrangian"}) {
    if (!fields.contains(key)) format_error(std::string("missing key '") + key + "'");
  }
  const std::string& name = fields["name"];
  if (name.empty() || !(std::isalpha(static_cast<unsigned char>(name[0])) || name[0] == '_') ||
      !std::all_of(name.begin(), name.end(),
                   [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; })) {
    format_error("name '" + name + "' is not an identifier");
  }

  // coords: a permutation of q1..qn; position defines the coordinate index.
  std::vector<int> labels;
  std::istringstream cs(fields["coords"]);
  std::string item;
  while (std::getline(cs, item, ',')) {
    std::string c = trim(item);
    Expr e;
    try {
      e = parse(c, Grammar::lagrangian);
    } catch (const ParseError&) {
      format_error("coords entry '" + c + "' is not a coordinate symbol");
    }
    if (e.kind() != NodeKind::symbol || e.symbol_value().kind != SymbolKind::coord) {
      format_error("coords entry '" + c + "' is not a coordinate symbol");
    }
    labels.push_back(e.symbol_value().index);
  }
  const std::size_t n = labels.size();
  if (n == 0) format_error("coords is empty");
  std::vector<int> sorted = labels;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < n; ++i) {
    if (sorted[i] != static_cast<int>(i + 1)) {
      throw Error(ErrorCode::dimension_mismatch, "model",
                  "coords must list q1..q" + std::to_string(n) + " exactly once");
    }
  }

  const std::string& text = fields["lagrangian"];
  LagrangianSystem probe = make_system(name, n, text);  // validates symbols
  const bool identity = std::is_sorted(labels.begin(), labels.end());
  if (identity) return probe;

  std::vector<int> position(n + 1);
  for (std::size_t i = 0; i < n; ++i) position[static_cast<std::size_t>(labels[i])] = static_cast<int>(i + 1);
  Expr renamed = relabel(probe.lagrangian, [&](Symbol s) {
    if (s.kind == SymbolKind::time) return s;
    return Symbol{s.kind, position[static_cast<std::size_t>(s.index)]};
  });
  LagrangianSystem sys = make_system(name, n, to_string(renamed));
  sys.source = text;
  for (std::size_t i = 0; i < n; ++i) sys.labels[i] = "q" + std::to_string(labels[i]);
  return sys;
}

LagrangianSystem load_model_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorCode::io_error, "model", "cannot open model file '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return load_model(ss.str());
}

Partition Partition::with_np(std::size_t new_np) const {
  if (new_np > n) {
    throw Error(ErrorCode::invalid_argument, "model",
                "n_p = " + std::to_string(new_np) + " exceeds n = " + std::to_string(n));
  }
  Partition p = *this;
  p.n_p = new_np;
  return p;
}

Partition Partition::identity(std::size_t n, std::size_t r_w, std::size_t n_p) {
  Partition p;
  p.n = n;
  p.r_w = r_w;
  p.n_p = n_p;
  p.order.resize(n);
  std::iota(p.order.begin(), p.order.end(), 0);
  p.slot_of = p.order;
  return p;
}

std::vector<Binding> make_probes(std::size_t n, const ProbeSettings& settings) {
  Rng rng(settings.seed);
  std::vector<Binding> probes(settings.count);
  for (std::size_t k = 0; k < settings.count; ++k) {
    Binding& b = probes[k];
    b.t = (k % 2 == 0) ? 0.0 : 0.37;
    b.q.resize(n);
    b.qd.resize(n);
    for (auto& x : b.q) x = rng.uniform(-1.0, 1.0);
    for (auto& x : b.qd) x = rng.uniform(-1.0, 1.0);
  }
  return probes;
}

Matrix noncanonical_schur(const LagrangianSystem& sys, const Partition& part, const Binding& at,
                          double pivot_tol) {
  const std::size_t np = part.n_p;
  const std::size_t m = part.n_nc();
  Matrix S(m, m);
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = 0; b < m; ++b)
      S(a, b) = sys.hessian(part.noncanonical(a), part.noncanonical(b))(at);
  if (np == 0 || m == 0) return S;
  Matrix Wcc(np, np);
  for (std::size_t i = 0; i < np; ++i)
    for (std::size_t j = 0; j < np; ++j)
      Wcc(i, j) = sys.hessian(part.canonical(i), part.canonical(j))(at);
  LU lu(Wcc, pivot_tol);
  if (lu.singular()) {
    throw Error(ErrorCode::singular_jacobian, "model",
                "canonical Hessian block is singular (min pivot " + std::to_string(lu.min_pivot()) + ")");
  }
  std::vector<double> col(np);
  for (std::size_t b = 0; b < m; ++b) {
    for (std::size_t i = 0; i < np; ++i) col[i] = sys.hessian(part.canonical(i), part.noncanonical(b))(at);
    auto x = lu.solve(col);  // W_cc^-1 W_cb
    for (std::size_t a = 0; a < m; ++a) {
      double s = 0.0;
      for (std::size_t i = 0; i < np; ++i) s += sys.hessian(part.noncanonical(a), part.canonical(i))(at) * x[i];
      S(a, b) -= s;
    }
  }
  return S;
}

HessianAnalysis analyze_hessian(const LagrangianSystem& sys, const std::vector<Binding>& probes,
                                double pivot_tol) {
  if (probes.empty()) throw Error(ErrorCode::invalid_argument, "model", "no probe states given");
  if (!(pivot_tol > 0.0)) throw Error(ErrorCode::invalid_argument, "model", "pivot_tol must be > 0");
  HessianAnalysis out;
  std::vector<RankInfo> infos;
  std::vector<std::size_t> used;
  for (std::size_t k = 0; k < probes.size(); ++k) {
    Matrix W;
    try {
      W = sys.hessian_at(probes[k]);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::domain_error) continue;
      throw;
    }
    infos.push_back(rank_complete_pivoting(W, pivot_tol));
    used.push_back(k);
    out.probe_ranks.push_back(infos.back().rank);
  }
  if (infos.empty()) {
    throw Error(ErrorCode::all_probes_degenerate, "model",
                "Hessian of '" + sys.name + "' hit a domain error at every probe");
  }
  out.probes_used = infos.size();
  const auto [lo, hi] = std::minmax_element(out.probe_ranks.begin(), out.probe_ranks.end());
  if (*lo != *hi) {
    const std::size_t ilo = static_cast<std::size_t>(lo - out.probe_ranks.begin());
    const std::size_t ihi = static_cast<std::size_t>(hi - out.probe_ranks.begin());
    throw Error(ErrorCode::rank_variation, "model",
                "Hessian rank varies across probes: rank " + std::to_string(*lo) + " at probe " +
                    std::to_string(used[ilo]) + ", rank " + std::to_string(*hi) + " at probe " +
                    std::to_string(used[ihi]));
  }
  const RankInfo& best = infos[static_cast<std::size_t>(hi - out.probe_ranks.begin())];

  Partition& part = out.partition;
  part.n = sys.n;
  part.r_w = best.rank;
  part.n_p = best.rank;
  part.order = best.row_order;
  part.slot_of.resize(sys.n);
  for (std::size_t s = 0; s < sys.n; ++s) part.slot_of[part.order[s]] = s;

  for (std::size_t k : used) {
    Matrix S = noncanonical_schur(sys, part, probes[k], pivot_tol);
    out.degeneracy_residual = std::max(out.degeneracy_residual, S.max_abs());
  }
  if (out.degeneracy_residual > pivot_tol * std::max(1.0, best.max_entry)) {
    throw Error(ErrorCode::regime_violation, "model",
                "noncanonical velocities do not drop out at n_p = r_W (max |Schur| = " +
                    std::to_string(out.degeneracy_residual) + ")");
  }
  return out;
}

}  // namespace hamfold
