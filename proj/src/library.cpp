#include "hamfold/library.hpp"

#include <filesystem>

namespace hamfold {

namespace {

using V = std::vector<double>;

std::vector<LibraryEntry> build() {
  std::vector<LibraryEntry> lib;
  auto add = [&](LibraryEntry e) { lib.push_back(std::move(e)); };

  {
    LibraryEntry e;
    e.name = "osc1";
    e.n = 1;
    e.lagrangian = "qd1^2/2 - q1^2/2";
    e.description = "harmonic oscillator";
    e.expected_r_w = 1;
    e.ic = {0.0, {1.0}, {0.0}, {}};
    add(std::move(e));
  }
  {
    LibraryEntry e;
    e.name = "osc2";
    e.n = 2;
    e.lagrangian = "0.5*qd1^2 + 0.5*qd2^2 + 0.3*qd1*qd2 - 0.5*q1^2 - 0.5*q2^2 - 0.2*q1*q2";
    e.description = "two coupled oscillators";
    e.expected_r_w = 2;
    e.ic = {0.0, {1.0, 0.5}, {0.0, 0.2}, {}};
    add(std::move(e));
  }
  {
    LibraryEntry e;
    e.name = "firstorder";
    e.n = 2;
    e.lagrangian = "q2*qd1 - 0.5*(q1^2+q2^2)";
    e.description = "first-order Lagrangian, an oscillator in (q1, q2)";
    e.expected_r_w = 0;
    e.expected_kind = ClassKind::nongauge;
    e.expected_r_F = 2;
    e.oracle = reference::ReducedOracle{
        1, [](double, const V& q, const V&) { return V{q[1], -q[0]}; }, "qd1 = q2, qd2 = -q1"};
    e.ic = {0.0, {1.0, 0.0}, {0.0, 0.0}, {}};
    add(std::move(e));
  }
  {
    LibraryEntry e;
    e.name = "gauge1";
    e.n = 2;
    e.lagrangian = "0.5*(qd1-q2)^2";
    e.description = "one gauge direction, F = 0";
    e.expected_r_w = 1;
    e.expected_kind = ClassKind::abelian_limit;
    e.expected_r_F = 0;
    e.oracle = reference::ReducedOracle{
        1, [](double, const V& q, const V&) { return V{q[1], 0.0}; }, "qd1 = q2, qd2 = 0 (p1 = 0)"};
    e.oracle_fixed = {1};
    e.ic = {0.0, {0.0, 0.5}, {0.5, 0.0}, {}};
    add(std::move(e));
  }
  {
    LibraryEntry e;
    e.name = "rotgauge";
    e.n = 3;
    e.lagrangian = "0.5*(qd1-q3*q2)^2 + 0.5*(qd2+q3*q1)^2";
    e.description = "planar rotation gauge, q3 an angular velocity";
    e.expected_r_w = 2;
    e.expected_kind = ClassKind::abelian_limit;
    e.expected_r_F = 0;
    e.oracle = reference::ReducedOracle{
        2,
        [](double, const V& q, const V& qd) {
          const double w = q[2];
          return V{2.0 * w * qd[1] + w * w * q[0], -2.0 * w * qd[0] + w * w * q[1], 0.0};
        },
        "qdd1 = 2 q3 qd2 + q3^2 q1, qdd2 = -2 q3 qd1 + q3^2 q2, qd3 = 0"};
    e.oracle_fixed = {2};
    e.ic = {0.0, {1.0, 0.0, 0.3}, {0.5, -0.3, 0.0}, {}};
    add(std::move(e));
  }
  {
    LibraryEntry e;
    e.name = "forced";
    e.n = 1;
    e.lagrangian = "0.5*qd1^2 - q1*sin(t)";
    e.description = "driven particle, explicit time dependence";
    e.expected_r_w = 1;
    e.ic = {0.0, {0.0}, {1.0}, {}};
    add(std::move(e));
  }
  {
    LibraryEntry e;
    e.name = "shiftgauge";
    e.n = 2;
    e.lagrangian = "0.5*(qd1+qd2)^2 - 0.5*(q1+q2)^2";
    e.description = "oscillator in q1+q2, shift gauge; integrable as a multi-time system";
    e.expected_r_w = 1;
    e.expected_kind = ClassKind::abelian_limit;
    e.expected_r_F = 0;
    e.oracle = reference::ReducedOracle{
        2, [](double, const V& q, const V&) { return V{-(q[0] + q[1]), 0.0}; }, "qdd1 = -(q1+q2), qd2 = 0"};
    e.oracle_fixed = {1};
    e.ic = {0.0, {1.0, 0.2}, {0.3, 0.0}, {}};
    add(std::move(e));
  }
  {
    LibraryEntry e;
    e.name = "gauge3";
    e.n = 3;
    e.lagrangian = "q2*qd1 + q3*(qd1+qd2) - 0.5*(q1+q2)^2 - 0.5*(q2+q3)^2";
    e.description = "first-order gauge model with rank-2 F";
    e.expected_r_w = 0;
    e.expected_kind = ClassKind::gauge;
    e.expected_r_F = 2;
    e.oracle = reference::ReducedOracle{
        1,
        [](double, const V& q, const V&) {
          return V{q[0] + 2.0 * q[1] + q[2], -(q[0] + q[1]), 0.0};
        },
        "qd1 = q1 + 2 q2 + q3, qd2 = -(q1+q2), qd3 = 0"};
    e.oracle_fixed = {2};
    e.ic = {0.0, {1.0, 0.5, -0.2}, {0.0, 0.0, 0.0}, {}};
    add(std::move(e));
  }
  return lib;
}

}  // namespace

std::string LibraryEntry::model_file() const {
  std::string coords;
  for (std::size_t A = 0; A < n; ++A) coords += (A ? ", q" : "q") + std::to_string(A + 1);
  return "# " + description + "\nname = " + name + "\ncoords = " + coords + "\nlagrangian = " + lagrangian + "\n";
}

const std::vector<LibraryEntry>& library() {
  static const std::vector<LibraryEntry> lib = build();
  return lib;
}

const LibraryEntry* find_model(std::string_view name) {
  for (const LibraryEntry& e : library())
    if (e.name == name) return &e;
  return nullptr;
}

LagrangianSystem resolve_model(const std::string& name_or_path) {
  if (const LibraryEntry* e = find_model(name_or_path)) return e->system();
  if (std::filesystem::exists(name_or_path)) return load_model_file(name_or_path);
  throw Error(ErrorCode::io_error, "cli",
              "'" + name_or_path + "' is neither a library model nor a readable model file");
}

}  // namespace hamfold
