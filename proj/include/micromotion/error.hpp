#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace micromotion {

// Every failure the library reports carries one of these codes. The CLI maps
// them onto process exit codes (see exit_code_for).
enum class ErrorCode {
  // validation
  dimension_mismatch,
  non_finite_entry,
  too_few_anchors,
  constant_strengths,
  mixed_strength_kinds,
  invalid_argument,
  // numerics
  constant_data,
  k_too_large,
  r_too_large,
  svd_failure,
  non_finite_intermediate,
  max_iter_exceeded,
  // geometry
  orientation_undefined,
  empty_basis,
  identical_anchors,
  non_orthonormal,
  // interchange
  bad_magic,
  unsupported_dtype,
  unsupported_rank,
  malformed_header,
  schema_violation,
  dangling_file,
  io_failure,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace micromotion
