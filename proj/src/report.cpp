#include "hamfold/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace hamfold::report {

namespace {

Json finite_or_string(double x) {
  if (std::isfinite(x)) return x;
  return number(x);
}

Json vec(const std::vector<double>& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(finite_or_string(x));
  return a;
}

std::string momentum_label(const std::string& coord_label) {
  return "p" + (coord_label.size() > 1 && coord_label[0] == 'q' ? coord_label.substr(1) : coord_label);
}

}  // namespace

std::string number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string trajectory_csv(const Trajectory& tr) {
  std::string out = "t";
  for (const std::string& l : tr.labels) out += "," + l;
  for (std::size_t A : tr.canonical) out += "," + momentum_label(tr.labels[A]);
  out += ",H0,residual,rF\n";
  for (const TrajectoryPoint& p : tr.points) {
    out += number(p.t);
    for (double q : p.q) out += "," + number(q);
    for (double v : p.p) out += "," + number(v);
    out += "," + number(p.H0) + "," + number(p.residual) + "," + std::to_string(p.r_F) + "\n";
  }
  return out;
}

std::string path_csv(const MultiTimeSystem& sys, const PathResult& r) {
  std::string out = "s";
  for (const std::string& l : sys.tau_labels()) out += "," + (l == "t" ? l : "tau_" + l);
  for (const std::string& l : sys.q_labels()) out += "," + l;
  for (const std::string& l : sys.q_labels()) out += "," + momentum_label(l);
  out += ",residual\n";
  for (const PathSample& s : r.trace) {
    out += number(s.s);
    for (double v : s.x.tau) out += "," + number(v);
    for (double v : s.x.q) out += "," + number(v);
    for (double v : s.x.p) out += "," + number(v);
    out += "," + number(s.residual) + "\n";
  }
  return out;
}

Json to_json(const Error& e) {
  Json j;
  j["code"] = exit_code(e.code());
  j["name"] = std::string(error_name(e.code()));
  j["module"] = e.module();
  j["message"] = e.what();
  return j;
}

Json to_json(const Partition& p, const LagrangianSystem& sys) {
  Json j;
  j["n"] = p.n;
  j["r_W"] = p.r_w;
  j["n_p"] = p.n_p;
  Json c = Json::array(), nc = Json::array();
  for (std::size_t i = 0; i < p.n_p; ++i) c.push_back(sys.labels[p.canonical(i)]);
  for (std::size_t a = 0; a < p.n_nc(); ++a) nc.push_back(sys.labels[p.noncanonical(a)]);
  j["canonical"] = c;
  j["noncanonical"] = nc;
  return j;
}

Json to_json(const Classification& c) {
  Json j;
  j["kind"] = class_kind_name(c.kind);
  j["r_F"] = c.r_F;
  j["gauge_parameters"] = c.gauge_parameters;
  j["alpha1"] = c.alpha1;
  j["alpha2"] = c.alpha2;
  j["max_abs_F"] = c.max_abs_F;
  j["probe_ranks"] = c.probe_ranks;
  j["probes_used"] = c.probes_used;
  return j;
}

Json to_json(const Matrix& m) {
  Json a = Json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (std::size_t c = 0; c < m.cols(); ++c) row.push_back(finite_or_string(m(r, c)));
    a.push_back(row);
  }
  return a;
}

Json to_json(const AxiomReport& r) {
  Json j;
  j["bracket"] = bracket_kind_name(r.kind);
  j["model"] = r.model;
  j["points"] = r.points;
  j["triples"] = r.triples;
  j["skipped_points"] = r.skipped_points;
  j["antisymmetry"] = r.antisymmetry;
  j["bilinearity"] = r.bilinearity;
  j["leibniz"] = r.leibniz;
  j["jacobi"] = r.jacobi;
  return j;
}

Json to_json(const EquivalenceReport& r) {
  Json j;
  j["model"] = r.model;
  j["constraints"] = r.constraints;
  j["classification"] = r.classification;
  j["points"] = r.points;
  j["skipped_points"] = r.skipped_points;
  j["max_phi"] = r.max_phi;
  j["F_vs_phi_phi"] = r.f_gap;
  j["DH0_vs_H0_phi"] = r.dh0_gap;
  j["DH0_vs_phi_H0"] = r.dh0_gap_swapped;
  j["G_vs_full"] = r.g_identity;
  if (r.dirac_vs_nongauge) {
    j["dirac_vs_nongauge"] = *r.dirac_vs_nongauge;
    j["pairs"] = r.pairs;
  } else {
    j["dirac_vs_nongauge"] = nullptr;
  }
  return j;
}

Json to_json(const IntegrabilityReport& r) {
  Json j;
  j["probes"] = r.probes;
  j["max"] = r.max;
  j["worst_pair"] = {r.worst_mu, r.worst_nu};
  return j;
}

Json to_json(const ConstraintCount& c) {
  Json j;
  j["n_p"] = c.n_p;
  j["r_W"] = c.r_w;
  j["block_rank"] = c.block_rank;
  j["constraints"] = c.count;
  return j;
}

Json trajectory_summary(const Trajectory& tr) {
  Json j;
  j["model"] = tr.model;
  j["method"] = tr.method;
  j["points"] = tr.points.size();
  j["complete"] = tr.complete();
  j["error"] = tr.error ? to_json(*tr.error) : Json(nullptr);
  if (tr.points.empty()) return j;
  const TrajectoryPoint& a = tr.points.front();
  const TrajectoryPoint& b = tr.points.back();
  j["t0"] = a.t;
  j["t_end"] = b.t;
  j["labels"] = tr.labels;
  j["q_end"] = vec(b.q);
  j["p_end"] = vec(b.p);
  double res = 0.0, cons = 0.0, drift = 0.0;
  std::size_t rlo = a.r_F, rhi = a.r_F;
  for (const TrajectoryPoint& p : tr.points) {
    res = std::max(res, p.residual);
    cons = std::max(cons, p.consistency);
    if (std::isfinite(p.H0) && std::isfinite(a.H0)) drift = std::max(drift, std::abs(p.H0 - a.H0));
    rlo = std::min(rlo, p.r_F);
    rhi = std::max(rhi, p.r_F);
  }
  j["max_residual"] = res;
  j["max_consistency"] = cons;
  j["H0_drift"] = drift;
  j["r_F"] = {rlo, rhi};
  return j;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::io_error, "cli", "cannot write '" + path + "'");
  out << text;
  if (!out) throw Error(ErrorCode::io_error, "cli", "write to '" + path + "' failed");
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace hamfold::report
