#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sphc {

enum class ErrorCode {
  NonFiniteInput,
  DimensionTooSmall,
  LengthMismatch,
  NormViolation,
  ZeroNormRow,
  BitCountOutOfRange,
  UnsupportedDtype,
  BadMagic,
  UnsupportedVersion,
  CorruptFrame,
  RangeOutOfBounds,
  TruncatedHeader,
  EmptyInput,
  NoQualifyingColumns,
  ShapeMismatch,
  NonConvergence,
  TooManyRows,
  BadFormat,
  UnsupportedLayout,
  InvalidArgument,
  IoError,
};

/// Stable name of an error case, e.g. "CorruptFrame". Foreign bindings map
/// their exception types onto these names.
std::string_view error_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_name(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace sphc
