// SPDX-License-Identifier: Apache-2.0
#include "codesynth/error.hpp"

namespace codesynth {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kIoError: return "io_error";
    case ErrorCode::kConfigInvalid: return "config_invalid";
    case ErrorCode::kUnknownCategory: return "unknown_category";
    case ErrorCode::kStageExhausted: return "stage_exhausted";
    case ErrorCode::kOutputUnwritable: return "output_unwritable";
    case ErrorCode::kAllJobsFailed: return "all_jobs_failed";
    case ErrorCode::kEmptyCorpus: return "empty_corpus";
    case ErrorCode::kEmptyStore: return "empty_store";
    case ErrorCode::kMissingBinding: return "missing_binding";
    case ErrorCode::kProviderUnavailable: return "provider_unavailable";
    case ErrorCode::kRateLimitExhausted: return "rate_limit_exhausted";
    case ErrorCode::kTransportError: return "transport_error";
    case ErrorCode::kCountMismatch: return "count_mismatch";
    case ErrorCode::kEmptyOutput: return "empty_output";
    case ErrorCode::kNoObjectFound: return "no_object_found";
    case ErrorCode::kMalformedPayload: return "malformed_payload";
    case ErrorCode::kNoCodeBlock: return "no_code_block";
    case ErrorCode::kMultipleAmbiguousBlocks: return "multiple_ambiguous_blocks";
    case ErrorCode::kZeroValidTriplets: return "zero_valid_triplets";
    case ErrorCode::kToolMissing: return "tool_missing";
    case ErrorCode::kCompileError: return "compile_error";
    case ErrorCode::kTimeout: return "timeout";
    case ErrorCode::kNoOutputImage: return "no_output_image";
    case ErrorCode::kUndecodableImage: return "undecodable_image";
    case ErrorCode::kImageRejected: return "image_rejected";
    case ErrorCode::kZeroMarkersFound: return "zero_markers_found";
    case ErrorCode::kMarkerCollision: return "marker_collision";
    case ErrorCode::kOutOfRange: return "out_of_range";
    case ErrorCode::kDimensionMismatch: return "dimension_mismatch";
    case ErrorCode::kTooFewVectors: return "too_few_vectors";
    case ErrorCode::kZeroNormVector: return "zero_norm_vector";
    case ErrorCode::kTooFewRecords: return "too_few_records";
    case ErrorCode::kOutputExists: return "output_exists";
    case ErrorCode::kDuplicateId: return "duplicate_id";
  }
  return "unknown";
}

}  // namespace codesynth
