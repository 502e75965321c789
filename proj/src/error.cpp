#include "sphc/error.hpp"

namespace sphc {

std::string_view error_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::DimensionTooSmall: return "DimensionTooSmall";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::NormViolation: return "NormViolation";
    case ErrorCode::ZeroNormRow: return "ZeroNormRow";
    case ErrorCode::BitCountOutOfRange: return "BitCountOutOfRange";
    case ErrorCode::UnsupportedDtype: return "UnsupportedDtype";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::UnsupportedVersion: return "UnsupportedVersion";
    case ErrorCode::CorruptFrame: return "CorruptFrame";
    case ErrorCode::RangeOutOfBounds: return "RangeOutOfBounds";
    case ErrorCode::TruncatedHeader: return "TruncatedHeader";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::NoQualifyingColumns: return "NoQualifyingColumns";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::TooManyRows: return "TooManyRows";
    case ErrorCode::BadFormat: return "BadFormat";
    case ErrorCode::UnsupportedLayout: return "UnsupportedLayout";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace sphc
