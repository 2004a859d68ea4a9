#include "edgecache/error.hpp"

namespace edgecache {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::infeasible_config: return "infeasible-config";
    case ErrorCode::rejection_limit_exceeded: return "rejection-limit-exceeded";
    case ErrorCode::dimension_mismatch: return "dimension-mismatch";
    case ErrorCode::malformed_file: return "malformed-file";
    case ErrorCode::version_mismatch: return "version-mismatch";
    case ErrorCode::instance_too_large: return "instance-too-large";
    case ErrorCode::shape_mismatch: return "shape-mismatch";
    case ErrorCode::empty_dataset: return "empty-dataset";
    case ErrorCode::unknown_flow: return "unknown-flow";
    case ErrorCode::unknown_edge_cloud: return "unknown-ec";
    case ErrorCode::invalid_argument: return "invalid-argument";
    case ErrorCode::solver_budget_exhausted: return "solver-budget-exhausted";
    case ErrorCode::missing_bank: return "missing-bank";
    case ErrorCode::io_failure: return "io-failure";
  }
  return "unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

}  // namespace edgecache
