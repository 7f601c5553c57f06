#include "micromotion/error.hpp"

namespace micromotion {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::dimension_mismatch: return "dimension-mismatch";
    case ErrorCode::non_finite_entry: return "non-finite-entry";
    case ErrorCode::too_few_anchors: return "too-few-anchors";
    case ErrorCode::constant_strengths: return "constant-strengths";
    case ErrorCode::mixed_strength_kinds: return "mixed-strength-kinds";
    case ErrorCode::invalid_argument: return "invalid-argument";
    case ErrorCode::constant_data: return "constant-data";
    case ErrorCode::k_too_large: return "k-too-large";
    case ErrorCode::r_too_large: return "r-too-large";
    case ErrorCode::svd_failure: return "svd-failure";
    case ErrorCode::non_finite_intermediate: return "non-finite-intermediate";
    case ErrorCode::max_iter_exceeded: return "max-iter-exceeded";
    case ErrorCode::orientation_undefined: return "orientation-undefined";
    case ErrorCode::empty_basis: return "empty-basis";
    case ErrorCode::identical_anchors: return "identical-anchors";
    case ErrorCode::non_orthonormal: return "non-orthonormal";
    case ErrorCode::bad_magic: return "bad-magic";
    case ErrorCode::unsupported_dtype: return "unsupported-dtype";
    case ErrorCode::unsupported_rank: return "unsupported-rank";
    case ErrorCode::malformed_header: return "malformed-header";
    case ErrorCode::schema_violation: return "schema-violation";
    case ErrorCode::dangling_file: return "dangling-file";
    case ErrorCode::io_failure: return "io-failure";
  }
  return "unknown";
}

}  // namespace micromotion
