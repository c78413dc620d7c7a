// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace codesynth {

enum class ErrorCode {
  kInvalidArgument,
  kIoError,
  kConfigInvalid,
  // pipeline-core
  kUnknownCategory,
  kStageExhausted,
  kOutputUnwritable,
  kAllJobsFailed,
  // persona-store
  kEmptyCorpus,
  kEmptyStore,
  // llm-gateway
  kMissingBinding,
  kProviderUnavailable,
  kRateLimitExhausted,
  kTransportError,
  kCountMismatch,
  kEmptyOutput,
  kNoObjectFound,
  kMalformedPayload,
  kNoCodeBlock,
  kMultipleAmbiguousBlocks,
  kZeroValidTriplets,
  // render-engine
  kToolMissing,
  kCompileError,
  kTimeout,
  kNoOutputImage,
  kUndecodableImage,
  kImageRejected,
  // pointing-gen
  kZeroMarkersFound,
  kMarkerCollision,
  kOutOfRange,
  // diversity-metrics
  kDimensionMismatch,
  kTooFewVectors,
  kZeroNormVector,
  kTooFewRecords,
  // dataset-pack
  kOutputExists,
  kDuplicateId,
};

/// Stable snake-case name used in reports and logs.
std::string_view to_string(ErrorCode code) noexcept;

/// The one exception type raised by the library. Every failure carries a code
/// so callers (and reports) can branch on kind without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace codesynth
