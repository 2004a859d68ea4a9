#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace edgecache {

enum class ErrorCode {
  infeasible_config,
  rejection_limit_exceeded,
  dimension_mismatch,
  malformed_file,
  version_mismatch,
  instance_too_large,
  shape_mismatch,
  empty_dataset,
  unknown_flow,
  unknown_edge_cloud,
  invalid_argument,
  solver_budget_exhausted,
  missing_bank,
  io_failure,
};

std::string_view to_string(ErrorCode code);

// All library failures are reported through this type; `code()` lets callers
// and tests distinguish them without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace edgecache
