#include "sphc/codec.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <string>

#include "parallel.hpp"
#include "sphc/error.hpp"
#include "zstd_frame.hpp"

namespace sphc {

namespace {

void put_u32(Bytes& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(Bytes& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(ByteSpan in, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in[at + i]) << (8 * i);
  return v;
}

std::uint64_t get_u64(ByteSpan in, std::size_t at) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(in[at + i]) << (8 * i);
  return v;
}

void validate_options(const CodecOptions& opts) {
  if (opts.truncate_bits > kMaxTruncateBits) {
    throw Error(ErrorCode::BitCountOutOfRange,
                "truncate_bits must be in [0, 22], got " + std::to_string(opts.truncate_bits));
  }
  if (opts.level < detail::min_level() || opts.level > detail::max_level()) {
    throw Error(ErrorCode::InvalidArgument,
                "level must be in [" + std::to_string(detail::min_level()) + ", " +
                    std::to_string(detail::max_level()) + "], got " + std::to_string(opts.level));
  }
}

std::uint64_t checked_add(std::uint64_t a, std::uint64_t b) {
  if (b > std::numeric_limits<std::uint64_t>::max() - a) {
    throw Error(ErrorCode::BadFormat, "section lengths overflow");
  }
  return a + b;
}

}  // namespace

std::uint64_t ContainerLayout::chunk_rows(std::size_t chunk) const noexcept {
  const std::uint64_t first = chunk_first_row(chunk);
  return std::min<std::uint64_t>(header.effective_chunk_rows(), header.n - first);
}

namespace {

// Rows per tile in the column-major transposes.
constexpr std::size_t kTransposeTile = 16;

}  // namespace

void shuffle_filter(std::span<const float> chunk, std::size_t m, std::size_t w,
                    std::span<std::uint8_t> out) {
  const std::size_t count = m * w;
  if (chunk.size() != count || out.size() != 4 * count) {
    throw Error(ErrorCode::LengthMismatch, "shuffle_filter shape does not match buffers");
  }
  std::uint8_t* p0 = out.data();
  std::uint8_t* p1 = p0 + count;
  std::uint8_t* p2 = p1 + count;
  std::uint8_t* p3 = p2 + count;
  for (std::size_t i0 = 0; i0 < m; i0 += kTransposeTile) {
    const std::size_t i1 = std::min(m, i0 + kTransposeTile);
    for (std::size_t j = 0; j < w; ++j) {
      for (std::size_t i = i0, k = j * m + i0; i < i1; ++i, ++k) {
        const auto bits = std::bit_cast<std::uint32_t>(chunk[i * w + j]);
        p0[k] = static_cast<std::uint8_t>(bits);
        p1[k] = static_cast<std::uint8_t>(bits >> 8);
        p2[k] = static_cast<std::uint8_t>(bits >> 16);
        p3[k] = static_cast<std::uint8_t>(bits >> 24);
      }
    }
  }
}

Bytes shuffle_filter(std::span<const float> chunk, std::size_t m, std::size_t w) {
  Bytes out(4 * m * w);
  shuffle_filter(chunk, m, w, out);
  return out;
}

void unshuffle_filter(ByteSpan buf, std::size_t m, std::size_t w, std::span<float> out) {
  const std::size_t count = m * w;
  if (buf.size() != 4 * count) {
    throw Error(ErrorCode::LengthMismatch, "expected " + std::to_string(4 * count) +
                                               " shuffled bytes, got " +
                                               std::to_string(buf.size()));
  }
  if (out.size() != count) {
    throw Error(ErrorCode::LengthMismatch, "unshuffle output has the wrong size");
  }
  const std::uint8_t* p0 = buf.data();
  const std::uint8_t* p1 = p0 + count;
  const std::uint8_t* p2 = p1 + count;
  const std::uint8_t* p3 = p2 + count;
  for (std::size_t i0 = 0; i0 < m; i0 += kTransposeTile) {
    const std::size_t i1 = std::min(m, i0 + kTransposeTile);
    for (std::size_t j = 0; j < w; ++j) {
      for (std::size_t i = i0, k = j * m + i0; i < i1; ++i, ++k) {
        const std::uint32_t bits = static_cast<std::uint32_t>(p0[k]) |
                                   static_cast<std::uint32_t>(p1[k]) << 8 |
                                   static_cast<std::uint32_t>(p2[k]) << 16 |
                                   static_cast<std::uint32_t>(p3[k]) << 24;
        out[i * w + j] = std::bit_cast<float>(bits);
      }
    }
  }
}

std::vector<float> unshuffle_filter(ByteSpan buf, std::size_t m, std::size_t w) {
  std::vector<float> out(m * w);
  unshuffle_filter(buf, m, w, out);
  return out;
}

void truncate_mantissa_inplace(std::span<float> values, unsigned k) {
  if (k > kMaxTruncateBits) {
    throw Error(ErrorCode::BitCountOutOfRange,
                "mantissa truncation must be in [0, 22] bits, got " + std::to_string(k));
  }
  if (k == 0) return;
  const std::uint32_t mask = ~((std::uint32_t{1} << k) - 1);
  for (float& v : values) v = std::bit_cast<float>(std::bit_cast<std::uint32_t>(v) & mask);
}

std::vector<float> truncate_mantissa(std::span<const float> values, unsigned k) {
  std::vector<float> out(values.begin(), values.end());
  truncate_mantissa_inplace(out, k);
  return out;
}

Bytes compress(std::span<const float> values, std::size_t n, std::size_t d,
               const CodecOptions& opts) {
  validate_options(opts);
  if (d < 2) throw Error(ErrorCode::DimensionTooSmall, "d must be >= 2, got " + std::to_string(d));
  if (n == 0) throw Error(ErrorCode::EmptyInput, "matrix has no rows");
  if (d > std::numeric_limits<std::uint32_t>::max()) {
    throw Error(ErrorCode::InvalidArgument, "d does not fit the container header");
  }
  if (values.size() != n * d) {
    throw Error(ErrorCode::LengthMismatch, "expected " + std::to_string(n * d) +
                                               " values, got " + std::to_string(values.size()));
  }

  // Norm policy. Baseline mode is lossless for any finite input, so it only
  // checks norms when asked to normalize or record them.
  std::span<const float> source = values;
  EmbeddingMatrix normalized;
  std::vector<float> norms;
  const bool wants_norm_pass = opts.store_norms || opts.renormalize;
  if (opts.mode == Mode::Spherical && !opts.renormalize) {
    check_norms(values, n, d, opts.norm_tolerance, false);
  }
  if (opts.mode == Mode::BaselineCartesian && !wants_norm_pass) {
    for (float v : values) {
      if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteInput, "input has NaN or Inf");
    }
  }
  if (wants_norm_pass) {
    if (!opts.renormalize) check_norms(values, n, d, opts.norm_tolerance, false);
    auto [unit, report] = check_norms(values, n, d, opts.norm_tolerance, true);
    normalized = std::move(unit);
    source = normalized.values();
    if (opts.store_norms) norms.assign(report.norms.begin(), report.norms.end());
  }

  ContainerHeader header;
  header.mode = opts.mode;
  header.flags = static_cast<std::uint8_t>((opts.store_norms ? kFlagNorms : 0) |
                                           (opts.truncate_bits > 0 ? kFlagTruncated : 0));
  header.truncate_bits = static_cast<std::uint8_t>(opts.truncate_bits);
  header.n = n;
  header.d = static_cast<std::uint32_t>(d);
  header.chunk_size = opts.chunk_size;
  const std::uint64_t chunk_rows = header.effective_chunk_rows();
  const std::uint64_t num_chunks = (n + chunk_rows - 1) / chunk_rows;
  if (num_chunks > std::numeric_limits<std::uint32_t>::max()) {
    throw Error(ErrorCode::InvalidArgument, "too many chunks; increase chunk_size");
  }
  header.num_chunks = static_cast<std::uint32_t>(num_chunks);

  const std::size_t w = header.width();
  std::vector<Bytes> frames(num_chunks);
  detail::parallel_for(num_chunks, opts.threads, [&](std::size_t first, std::size_t last) {
    detail::FrameEncoder encoder(opts.level);
    TransformScratch scratch;
    std::vector<float> stored;
    Bytes shuffled;
    for (std::size_t c = first; c < last; ++c) {
      const std::size_t row0 = c * chunk_rows;
      const std::size_t m = std::min<std::size_t>(chunk_rows, n - row0);
      stored.resize(m * w);
      shuffled.resize(4 * m * w);
      for (std::size_t i = 0; i < m; ++i) {
        const auto src = source.subspan((row0 + i) * d, d);
        const std::span<float> dst(stored.data() + i * w, w);
        if (opts.mode == Mode::Spherical) {
          to_spherical_row(src, dst, scratch);
        } else {
          std::copy(src.begin(), src.end(), dst.begin());
        }
      }
      truncate_mantissa_inplace(stored, opts.truncate_bits);
      shuffle_filter(stored, m, w, shuffled);
      frames[c] = encoder.encode(shuffled, m * w);
    }
  });

  Bytes norms_frame;
  if (opts.store_norms) {
    std::vector<float> norms32(norms.begin(), norms.end());
    detail::FrameEncoder encoder(opts.level);
    norms_frame = encoder.encode(shuffle_filter(norms32, n, 1), n);
  }

  std::size_t total = kHeaderSize + 8 * num_chunks + (opts.store_norms ? 8 + norms_frame.size() : 0);
  for (const auto& f : frames) total += f.size();

  Bytes out;
  out.reserve(total);
  for (const std::uint8_t b : kMagic) out.push_back(b);
  out.push_back(header.version);
  out.push_back(static_cast<std::uint8_t>(header.mode));
  out.push_back(header.flags);
  out.push_back(header.truncate_bits);
  put_u64(out, header.n);
  put_u32(out, header.d);
  put_u32(out, header.chunk_size);
  put_u32(out, header.num_chunks);
  for (const auto& f : frames) put_u64(out, f.size());
  if (opts.store_norms) {
    put_u64(out, norms_frame.size());
    out.insert(out.end(), norms_frame.begin(), norms_frame.end());
  }
  for (const auto& f : frames) out.insert(out.end(), f.begin(), f.end());
  return out;
}

Bytes compress(const ArrayView& view, const CodecOptions& opts) {
  if (view.dtype != DType::Float32LE) {
    throw Error(ErrorCode::UnsupportedDtype,
                "only little-endian float32 input is supported; for reduced-precision "
                "formats apply the baseline byte shuffle directly to the raw bytes");
  }
  if (view.bytes.size() != 4 * view.n * view.d) {
    throw Error(ErrorCode::LengthMismatch, "buffer holds " + std::to_string(view.bytes.size()) +
                                               " bytes, shape needs " +
                                               std::to_string(4 * view.n * view.d));
  }
  if constexpr (std::endian::native == std::endian::little) {
    if (reinterpret_cast<std::uintptr_t>(view.bytes.data()) % alignof(float) == 0) {
      const std::span<const float> values(reinterpret_cast<const float*>(view.bytes.data()),
                                          view.n * view.d);
      return compress(values, view.n, view.d, opts);
    }
  }
  std::vector<float> values(view.n * view.d);
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(view.bytes[4 * i + b]) << (8 * b);
    values[i] = std::bit_cast<float>(bits);
  }
  return compress(values, view.n, view.d, opts);
}

ContainerLayout read_header(ByteSpan c) {
  if (c.size() < kHeaderSize) {
    throw Error(ErrorCode::TruncatedHeader, "container has " + std::to_string(c.size()) +
                                                " bytes, header needs " +
                                                std::to_string(kHeaderSize));
  }
  if (!std::equal(kMagic.begin(), kMagic.end(), c.begin())) {
    throw Error(ErrorCode::BadMagic, "not an SPHC container");
  }
  ContainerLayout layout;
  ContainerHeader& h = layout.header;
  h.version = c[4];
  if (h.version != kFormatVersion) {
    throw Error(ErrorCode::UnsupportedVersion, "container version " + std::to_string(h.version));
  }
  if (c[5] > 1) throw Error(ErrorCode::BadFormat, "unknown mode " + std::to_string(c[5]));
  h.mode = static_cast<Mode>(c[5]);
  h.flags = c[6];
  h.truncate_bits = c[7];
  h.n = get_u64(c, 8);
  h.d = get_u32(c, 16);
  h.chunk_size = get_u32(c, 20);
  h.num_chunks = get_u32(c, 24);

  if ((h.flags & ~(kFlagNorms | kFlagTruncated)) != 0) {
    throw Error(ErrorCode::BadFormat, "unknown flag bits set");
  }
  if (h.truncate_bits > kMaxTruncateBits || ((h.flags & kFlagTruncated) != 0) != (h.truncate_bits > 0)) {
    throw Error(ErrorCode::BadFormat, "inconsistent truncation fields");
  }
  if (h.d < 2) throw Error(ErrorCode::BadFormat, "d must be >= 2");
  if (h.n == 0) throw Error(ErrorCode::BadFormat, "container has no rows");
  const std::uint64_t rows = h.effective_chunk_rows();
  if (h.num_chunks != (h.n + rows - 1) / rows) {
    throw Error(ErrorCode::BadFormat, "chunk count does not match n and chunk_size");
  }

  std::uint64_t at = kHeaderSize;
  const std::uint64_t table_end = checked_add(at, 8ull * h.num_chunks);
  if (c.size() < table_end) throw Error(ErrorCode::TruncatedHeader, "chunk table is truncated");
  layout.chunk_lengths.resize(h.num_chunks);
  for (std::size_t i = 0; i < h.num_chunks; ++i, at += 8) layout.chunk_lengths[i] = get_u64(c, at);

  if (h.has_norms()) {
    if (c.size() < at + 8) throw Error(ErrorCode::TruncatedHeader, "norms length is truncated");
    layout.norms_length = get_u64(c, at);
    at += 8;
    layout.norms_offset = at;
    at = checked_add(at, layout.norms_length);
    if (c.size() < at) throw Error(ErrorCode::TruncatedHeader, "norms stream is truncated");
  }

  layout.payload_offset = at;
  layout.chunk_offsets.resize(h.num_chunks);
  for (std::size_t i = 0; i < h.num_chunks; ++i) {
    layout.chunk_offsets[i] = at;
    at = checked_add(at, layout.chunk_lengths[i]);
  }
  layout.payload_length = at - layout.payload_offset;
  if (at != c.size()) {
    throw Error(ErrorCode::CorruptFrame, "chunk table describes " + std::to_string(at) +
                                             " bytes but the container has " +
                                             std::to_string(c.size()));
  }
  return layout;
}

namespace {

RowRange resolve_range(const ContainerHeader& h, std::optional<RowRange> range) {
  if (!range) return {0, static_cast<std::size_t>(h.n)};
  if (range->begin >= range->end || range->end > h.n) {
    throw Error(ErrorCode::RangeOutOfBounds,
                "row range [" + std::to_string(range->begin) + ", " + std::to_string(range->end) +
                    ") is not a non-empty subrange of [0, " + std::to_string(h.n) + ")");
  }
  return *range;
}

std::vector<float> decode_rows(ByteSpan c, const ContainerLayout& layout, RowRange range,
                               unsigned threads) {
  const ContainerHeader& h = layout.header;
  const std::size_t w = h.width();
  const std::uint64_t per_chunk = h.effective_chunk_rows();
  const std::size_t first_chunk = range.begin / per_chunk;
  const std::size_t last_chunk = (range.end - 1) / per_chunk;

  std::vector<float> out((range.end - range.begin) * w);
  detail::parallel_for(last_chunk - first_chunk + 1, threads,
                       [&](std::size_t lo, std::size_t hi) {
                         detail::FrameDecoder decoder;
                         Bytes raw;
                         std::vector<float> values;
                         for (std::size_t k = lo; k < hi; ++k) {
                           const std::size_t chunk = first_chunk + k;
                           const std::size_t m = layout.chunk_rows(chunk);
                           const std::size_t row0 = layout.chunk_first_row(chunk);
                           raw.resize(4 * m * w);
                           values.resize(m * w);
                           decoder.decode(c.subspan(layout.chunk_offsets[chunk],
                                                    layout.chunk_lengths[chunk]),
                                          raw);
                           unshuffle_filter(raw, m, w, values);
                           const std::size_t from = std::max(row0, range.begin);
                           const std::size_t to = std::min(row0 + m, range.end);
                           std::copy(values.begin() + (from - row0) * w,
                                     values.begin() + (to - row0) * w,
                                     out.begin() + (from - range.begin) * w);
                         }
                       });
  return out;
}

}  // namespace

std::vector<float> decode_stored(ByteSpan container, std::optional<RowRange> range,
                                 unsigned threads) {
  const ContainerLayout layout = read_header(container);
  return decode_rows(container, layout, resolve_range(layout.header, range), threads);
}

DecodedMatrix decompress(ByteSpan container, std::optional<RowRange> range, unsigned threads) {
  const ContainerLayout layout = read_header(container);
  const ContainerHeader& h = layout.header;
  const RowRange r = resolve_range(h, range);
  const std::size_t rows = r.end - r.begin;
  std::vector<float> stored = decode_rows(container, layout, r, threads);

  DecodedMatrix result;
  result.first_row = r.begin;
  if (h.mode == Mode::Spherical) {
    result.matrix = from_spherical(AngleMatrix(rows, h.width(), std::move(stored)), threads);
  } else {
    result.matrix = EmbeddingMatrix(rows, h.d, std::move(stored));
  }

  if (h.has_norms()) {
    Bytes raw(4 * h.n);
    detail::FrameDecoder decoder;
    decoder.decode(container.subspan(layout.norms_offset, layout.norms_length), raw);
    const std::vector<float> all = unshuffle_filter(raw, h.n, 1);
    std::vector<float> norms(all.begin() + r.begin, all.begin() + r.end);
    for (std::size_t i = 0; i < rows; ++i) {
      const double scale = norms[i];
      for (float& v : result.matrix.row(i)) v = static_cast<float>(scale * static_cast<double>(v));
    }
    result.norms = std::move(norms);
  }
  return result;
}

AngleMatrix decompress_angles(ByteSpan container, std::optional<RowRange> range) {
  const ContainerLayout layout = read_header(container);
  const ContainerHeader& h = layout.header;
  const RowRange r = resolve_range(h, range);
  std::vector<float> stored = decode_rows(container, layout, r, 1);
  if (h.mode == Mode::Spherical) return AngleMatrix(r.end - r.begin, h.width(), std::move(stored));
  return to_spherical(EmbeddingMatrix(r.end - r.begin, h.d, std::move(stored)));
}

}  // namespace sphc
