#include "zstd_frame.hpp"

#include <algorithm>
#include <string>

#include <zstd.h>

#include "sphc/error.hpp"

namespace sphc::detail {

namespace {

void check(size_t code, ErrorCode on_error, const char* what) {
  if (ZSTD_isError(code)) {
    throw Error(on_error, std::string(what) + ": " + ZSTD_getErrorName(code));
  }
}

}  // namespace

FrameEncoder::FrameEncoder(int level) : ctx_(ZSTD_createCCtx()) {
  if (ctx_ == nullptr) throw std::bad_alloc();
  check(ZSTD_CCtx_setParameter(ctx_, ZSTD_c_compressionLevel, level), ErrorCode::InvalidArgument,
        "zstd level");
  check(ZSTD_CCtx_setParameter(ctx_, ZSTD_c_contentSizeFlag, 1), ErrorCode::InvalidArgument,
        "zstd content size flag");
  check(ZSTD_CCtx_setParameter(ctx_, ZSTD_c_checksumFlag, 1), ErrorCode::InvalidArgument,
        "zstd checksum flag");
}

FrameEncoder::~FrameEncoder() { ZSTD_freeCCtx(ctx_); }

std::vector<std::uint8_t> FrameEncoder::encode(std::span<const std::uint8_t> input,
                                                std::size_t segment) {
  std::vector<std::uint8_t> out(ZSTD_compressBound(input.size()));
  if (segment == 0 || segment >= input.size()) {
    const size_t written = ZSTD_compress2(ctx_, out.data(), out.size(), input.data(), input.size());
    check(written, ErrorCode::InvalidArgument, "zstd compression failed");
    out.resize(written);
    return out;
  }

  // Each flush may add a block header beyond the single-shot bound.
  out.resize(out.size() + 64 * (input.size() / segment + 1));
  check(ZSTD_CCtx_reset(ctx_, ZSTD_reset_session_only), ErrorCode::InvalidArgument, "zstd reset");
  check(ZSTD_CCtx_setPledgedSrcSize(ctx_, input.size()), ErrorCode::InvalidArgument,
        "zstd pledged size");
  ZSTD_outBuffer dst{out.data(), out.size(), 0};
  for (std::size_t begin = 0; begin < input.size(); begin += segment) {
    const std::size_t end = std::min(input.size(), begin + segment);
    const ZSTD_EndDirective mode = end == input.size() ? ZSTD_e_end : ZSTD_e_flush;
    ZSTD_inBuffer src{input.data() + begin, end - begin, 0};
    size_t remaining = 0;
    do {
      remaining = ZSTD_compressStream2(ctx_, &dst, &src, mode);
      check(remaining, ErrorCode::InvalidArgument, "zstd compression failed");
      if (remaining != 0 && dst.pos == dst.size) {
        throw Error(ErrorCode::InvalidArgument, "zstd output exceeded its bound");
      }
    } while (remaining != 0 || src.pos < src.size);
  }
  out.resize(dst.pos);
  return out;
}

FrameDecoder::FrameDecoder() : ctx_(ZSTD_createDCtx()) {
  if (ctx_ == nullptr) throw std::bad_alloc();
}

FrameDecoder::~FrameDecoder() { ZSTD_freeDCtx(ctx_); }

void FrameDecoder::decode(std::span<const std::uint8_t> frame, std::span<std::uint8_t> out) {
  const size_t frame_size = ZSTD_findFrameCompressedSize(frame.data(), frame.size());
  check(frame_size, ErrorCode::CorruptFrame, "invalid frame");
  if (frame_size != frame.size()) {
    throw Error(ErrorCode::CorruptFrame, "frame occupies " + std::to_string(frame_size) +
                                             " of " + std::to_string(frame.size()) + " bytes");
  }
  const unsigned long long content = ZSTD_getFrameContentSize(frame.data(), frame.size());
  if (content != out.size()) {
    throw Error(ErrorCode::CorruptFrame, "frame content size does not match the expected " +
                                             std::to_string(out.size()) + " bytes");
  }
  const size_t got = ZSTD_decompressDCtx(ctx_, out.data(), out.size(), frame.data(), frame.size());
  check(got, ErrorCode::CorruptFrame, "frame decode failed");
  if (got != out.size()) {
    throw Error(ErrorCode::CorruptFrame, "frame decoded to " + std::to_string(got) + " bytes");
  }
}

int min_level() { return ZSTD_minCLevel(); }
int max_level() { return ZSTD_maxCLevel(); }

}  // namespace sphc::detail
