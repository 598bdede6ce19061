#include "agesynth/error.hpp"

namespace agesynth {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MagicMismatch: return "MagicMismatch";
    case ErrorCode::UnsupportedVersion: return "UnsupportedVersion";
    case ErrorCode::TruncatedPayload: return "TruncatedPayload";
    case ErrorCode::TrailingBytes: return "TrailingBytes";
    case ErrorCode::DuplicateSampleId: return "DuplicateSampleId";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::MetadataMismatch: return "MetadataMismatch";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::MissingAge: return "MissingAge";
    case ErrorCode::InvalidAge: return "InvalidAge";
    case ErrorCode::InvalidScheme: return "InvalidScheme";
    case ErrorCode::NoAgeSignal: return "NoAgeSignal";
    case ErrorCode::NotStandardized: return "NotStandardized";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::SingleClass: return "SingleClass";
    case ErrorCode::DegenerateScatter: return "DegenerateScatter";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::OverlappingMasks: return "OverlappingMasks";
    case ErrorCode::InsufficientPoints: return "InsufficientPoints";
    case ErrorCode::RankDeficientFit: return "RankDeficientFit";
    case ErrorCode::NoSolution: return "NoSolution";
    case ErrorCode::GroupMissing: return "GroupMissing";
    case ErrorCode::InvalidRange: return "InvalidRange";
    case ErrorCode::EmptyRecords: return "EmptyRecords";
    case ErrorCode::NoVerifiedSamples: return "NoVerifiedSamples";
    case ErrorCode::RateOutOfSpan: return "RateOutOfSpan";
    case ErrorCode::FormatError: return "FormatError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace agesynth
