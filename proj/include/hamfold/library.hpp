#pragma once

// Built-in models with the facts the self test checks them against.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hamfold/dynamics.hpp"
#include "hamfold/model.hpp"
#include "hamfold/reference.hpp"

namespace hamfold {

struct LibraryEntry {
  std::string name;
  std::size_t n = 0;
  std::string lagrangian;
  std::string description;
  std::size_t expected_r_w = 0;
  ClassKind expected_kind = ClassKind::nongauge;
  std::size_t expected_r_F = 0;
  std::optional<reference::ReducedOracle> oracle;  // singular models only
  std::vector<std::size_t> oracle_fixed;            // coordinates the oracle's gauge holds still
  Binding ic;                                       // consistent (q, qd) initial data

  LagrangianSystem system() const { return make_system(name, n, lagrangian); }
  /// Text in the model file format.
  std::string model_file() const;
};

const std::vector<LibraryEntry>& library();
const LibraryEntry* find_model(std::string_view name);

/// Library name or path to a model file.
LagrangianSystem resolve_model(const std::string& name_or_path);

}  // namespace hamfold
