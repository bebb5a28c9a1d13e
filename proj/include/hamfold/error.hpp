#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hamfold {

enum class ErrorCode : int {
  parse_syntax,
  unknown_function,
  malformed_symbol,
  domain_error,
  dimension_mismatch,
  model_format,
  rank_variation,
  all_probes_degenerate,
  no_convergence,
  singular_jacobian,
  regime_violation,
  symbol_space_mismatch,
  singular_f,
  missing_decomposition,
  inconsistent_system,
  initial_condition_inconsistent,
  unsupported_regime,
  trajectory_too_short,
  oracle_undefined,
  off_surface,
  higher_stage_constraint,
  invalid_argument,
  io_error,
};

std::string_view error_name(ErrorCode code) noexcept;

/// Process exit code for an error. Distinct per code, never 0 or 1.
inline int exit_code(ErrorCode code) noexcept { return 10 + static_cast<int>(code); }

/// Base exception for every library failure. `module()` names the component
/// that raised it (expr, model, legendre, ...).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string module, const std::string& message)
      : std::runtime_error(message), code_(code), module_(std::move(module)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& module() const noexcept { return module_; }

  /// `ERROR <exit-code> <module> <name>: <message>` on a single line.
  std::string record() const;

 private:
  ErrorCode code_;
  std::string module_;
};

}  // namespace hamfold
