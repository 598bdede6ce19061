#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace agesynth {

enum class ErrorCode {
  // latent-core
  MagicMismatch,
  UnsupportedVersion,
  TruncatedPayload,
  TrailingBytes,
  DuplicateSampleId,
  NonFiniteValue,
  MetadataMismatch,
  IoFailure,
  TooFewSamples,
  MissingAge,
  InvalidAge,
  InvalidScheme,
  // age-direction
  NoAgeSignal,
  NotStandardized,
  DimensionMismatch,
  InvalidConfig,
  // feature-select
  SingleClass,
  DegenerateScatter,
  ShapeMismatch,
  OverlappingMasks,
  // calibrate
  InsufficientPoints,
  RankDeficientFit,
  NoSolution,
  GroupMissing,
  InvalidRange,
  // evaluate
  EmptyRecords,
  NoVerifiedSamples,
  RateOutOfSpan,
  // formats shared by several modules
  FormatError,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Domain error raised by every module; the CLI maps it to exit code 1.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace agesynth
