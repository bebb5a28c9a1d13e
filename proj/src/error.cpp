#include "hamfold/error.hpp"

#include <algorithm>

namespace hamfold {

std::string_view error_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::parse_syntax: return "ParseSyntax";
    case ErrorCode::unknown_function: return "UnknownFunction";
    case ErrorCode::malformed_symbol: return "MalformedSymbol";
    case ErrorCode::domain_error: return "DomainError";
    case ErrorCode::dimension_mismatch: return "DimensionMismatch";
    case ErrorCode::model_format: return "ModelFormat";
    case ErrorCode::rank_variation: return "RankVariation";
    case ErrorCode::all_probes_degenerate: return "AllProbesDegenerate";
    case ErrorCode::no_convergence: return "NoConvergence";
    case ErrorCode::singular_jacobian: return "SingularJacobian";
    case ErrorCode::regime_violation: return "RegimeViolation";
    case ErrorCode::symbol_space_mismatch: return "SymbolSpaceMismatch";
    case ErrorCode::singular_f: return "SingularF";
    case ErrorCode::missing_decomposition: return "MissingDecomposition";
    case ErrorCode::inconsistent_system: return "InconsistentSystem";
    case ErrorCode::initial_condition_inconsistent: return "InitialConditionInconsistent";
    case ErrorCode::unsupported_regime: return "UnsupportedRegime";
    case ErrorCode::trajectory_too_short: return "TrajectoryTooShort";
    case ErrorCode::oracle_undefined: return "OracleUndefined";
    case ErrorCode::off_surface: return "OffSurface";
    case ErrorCode::higher_stage_constraint: return "HigherStageConstraint";
    case ErrorCode::invalid_argument: return "InvalidArgument";
    case ErrorCode::io_error: return "IoError";
  }
  return "Unknown";
}

std::string Error::record() const {
  std::string msg = what();
  std::replace(msg.begin(), msg.end(), '\n', ' ');
  return "ERROR " + std::to_string(exit_code(code_)) + " " + module_ + " " +
         std::string(error_name(code_)) + ": " + msg;
}

}  // namespace hamfold
