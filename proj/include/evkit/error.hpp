#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace evkit {

enum class ErrorCode {
  NonMonotoneTimestamp,
  OutOfBounds,
  BadPolarity,
  ZeroWindow,
  InvalidArgument,
  TruncatedFile,
  BadHeader,
  BadMagic,
  VersionUnsupported,
  ParseError,
  EventOutsideWindow,
  FutureEvent,
  NotDivisible,
  SingularTransform,
  ShapeMismatch,
  EmptyDataset,
  NoGroundTruth,
  IoError,
  ConfigError,
};

/// Stable upper-snake name used in CLI error lines, e.g. "TRUNCATED_FILE".
std::string_view error_code_name(ErrorCode code) noexcept;

/// Every failure in the toolkit is reported through this type. `index` carries
/// the offending element (event index, byte offset, line number) when one exists.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message, std::optional<std::size_t> index = std::nullopt);

  ErrorCode code() const noexcept { return code_; }
  std::optional<std::size_t> index() const noexcept { return index_; }

 private:
  ErrorCode code_;
  std::optional<std::size_t> index_;
};

}  // namespace evkit
