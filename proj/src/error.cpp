#include "evkit/error.hpp"

#include <utility>

namespace evkit {

std::string_view error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::NonMonotoneTimestamp: return "NON_MONOTONE_TIMESTAMP";
    case ErrorCode::OutOfBounds: return "OUT_OF_BOUNDS";
    case ErrorCode::BadPolarity: return "BAD_POLARITY";
    case ErrorCode::ZeroWindow: return "ZERO_WINDOW";
    case ErrorCode::InvalidArgument: return "INVALID_ARGUMENT";
    case ErrorCode::TruncatedFile: return "TRUNCATED_FILE";
    case ErrorCode::BadHeader: return "BAD_HEADER";
    case ErrorCode::BadMagic: return "BAD_MAGIC";
    case ErrorCode::VersionUnsupported: return "VERSION_UNSUPPORTED";
    case ErrorCode::ParseError: return "PARSE_ERROR";
    case ErrorCode::EventOutsideWindow: return "EVENT_OUTSIDE_WINDOW";
    case ErrorCode::FutureEvent: return "FUTURE_EVENT";
    case ErrorCode::NotDivisible: return "NOT_DIVISIBLE";
    case ErrorCode::SingularTransform: return "SINGULAR_TRANSFORM";
    case ErrorCode::ShapeMismatch: return "SHAPE_MISMATCH";
    case ErrorCode::EmptyDataset: return "EMPTY_DATASET";
    case ErrorCode::NoGroundTruth: return "NO_GROUND_TRUTH";
    case ErrorCode::IoError: return "IO_ERROR";
    case ErrorCode::ConfigError: return "CONFIG_ERROR";
  }
  return "UNKNOWN";
}

Error::Error(ErrorCode code, std::string message, std::optional<std::size_t> index)
    : std::runtime_error(std::move(message)), code_(code), index_(index) {}

}  // namespace evkit
