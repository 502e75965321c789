#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "sphc/matrix.hpp"
#include "sphc/transform.hpp"

namespace sphc {

using Bytes = std::vector<std::uint8_t>;
using ByteSpan = std::span<const std::uint8_t>;

enum class Mode : std::uint8_t { Spherical = 0, BaselineCartesian = 1 };

/// Element type of a caller-supplied buffer. Only Float32LE is accepted by
/// the codec; reduced-precision formats compress better with a plain
/// byte-shuffle baseline applied to their raw bytes.
enum class DType { Float32LE, Float32BE, Float64, Float16, BFloat16, Int8, UInt8 };

/// Untyped view of caller memory, as handed over by foreign bindings.
struct ArrayView {
  ByteSpan bytes;
  std::size_t n = 0;
  std::size_t d = 0;
  DType dtype = DType::Float32LE;
};

struct CodecOptions {
  Mode mode = Mode::Spherical;
  int level = 3;
  std::uint32_t chunk_size = 1000;  // rows per chunk, 0 = single chunk
  unsigned truncate_bits = 0;       // low mantissa bits zeroed before coding, <= 22
  bool store_norms = false;
  bool renormalize = false;
  double norm_tolerance = kDefaultNormTolerance;
  unsigned threads = 1;  // 0 = hardware concurrency; output is identical for any value
};

inline constexpr std::array<std::uint8_t, 4> kMagic = {'S', 'P', 'H', 'C'};
inline constexpr std::uint8_t kFormatVersion = 1;
inline constexpr std::size_t kHeaderSize = 28;
inline constexpr unsigned kMaxTruncateBits = 22;

inline constexpr std::uint8_t kFlagNorms = 0x1;
inline constexpr std::uint8_t kFlagTruncated = 0x2;

struct ContainerHeader {
  std::uint8_t version = kFormatVersion;
  Mode mode = Mode::Spherical;
  std::uint8_t flags = 0;
  std::uint8_t truncate_bits = 0;
  std::uint64_t n = 0;
  std::uint32_t d = 0;
  std::uint32_t chunk_size = 0;
  std::uint32_t num_chunks = 0;

  bool has_norms() const noexcept { return (flags & kFlagNorms) != 0; }
  /// Stored float32 values per row: d - 1 angles or d coordinates.
  std::size_t width() const noexcept { return mode == Mode::Spherical ? d - 1 : d; }
  std::uint64_t effective_chunk_rows() const noexcept {
    return chunk_size == 0 || chunk_size > n ? n : chunk_size;
  }
};

/// Parsed header plus absolute byte offsets of every section.
struct ContainerLayout {
  ContainerHeader header;
  std::vector<std::uint64_t> chunk_lengths;
  std::vector<std::uint64_t> chunk_offsets;
  std::uint64_t norms_offset = 0;  // start of the norms frame, valid if header.has_norms()
  std::uint64_t norms_length = 0;
  std::uint64_t payload_offset = 0;
  std::uint64_t payload_length = 0;

  std::uint64_t chunk_first_row(std::size_t chunk) const noexcept {
    return chunk * header.effective_chunk_rows();
  }
  std::uint64_t chunk_rows(std::size_t chunk) const noexcept;
};

struct RowRange {
  std::size_t begin = 0;
  std::size_t end = 0;
};

struct DecodedMatrix {
  EmbeddingMatrix matrix;
  std::optional<std::vector<float>> norms;  // only for the decoded rows
  std::size_t first_row = 0;
};

/// Transposes an m x w row-major chunk and splits it into four byte planes
/// (least-significant byte first). Output length is 4*m*w.
Bytes shuffle_filter(std::span<const float> chunk, std::size_t m, std::size_t w);
void shuffle_filter(std::span<const float> chunk, std::size_t m, std::size_t w,
                    std::span<std::uint8_t> out);

/// Inverse of shuffle_filter. Throws LengthMismatch.
std::vector<float> unshuffle_filter(ByteSpan buf, std::size_t m, std::size_t w);
void unshuffle_filter(ByteSpan buf, std::size_t m, std::size_t w, std::span<float> out);

/// Zeroes the k low mantissa bits of every value. Throws BitCountOutOfRange.
std::vector<float> truncate_mantissa(std::span<const float> values, unsigned k);
void truncate_mantissa_inplace(std::span<float> values, unsigned k);

Bytes compress(std::span<const float> values, std::size_t n, std::size_t d,
               const CodecOptions& opts = {});
inline Bytes compress(const EmbeddingMatrix& x, const CodecOptions& opts = {}) {
  return compress(x.values(), x.rows(), x.cols(), opts);
}
/// Throws UnsupportedDtype unless view.dtype is Float32LE.
Bytes compress(const ArrayView& view, const CodecOptions& opts = {});

ContainerLayout read_header(ByteSpan container);

/// Decodes rows [range.begin, range.end) (all rows if no range), touching only
/// the chunks that intersect the range.
DecodedMatrix decompress(ByteSpan container, std::optional<RowRange> range = std::nullopt,
                         unsigned threads = 1);

/// The float32 values exactly as they entered the shuffle filter (angles or
/// coordinates after truncation), row-major with header.width() columns.
std::vector<float> decode_stored(ByteSpan container, std::optional<RowRange> range = std::nullopt,
                                 unsigned threads = 1);

/// Angles for a row range. Spherical containers return the stored angles;
/// baseline containers are transformed after decoding.
AngleMatrix decompress_angles(ByteSpan container, std::optional<RowRange> range = std::nullopt);

}  // namespace sphc
