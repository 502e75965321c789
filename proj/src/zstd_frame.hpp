#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

struct ZSTD_CCtx_s;
struct ZSTD_DCtx_s;

namespace sphc::detail {

/// One compression context; not shareable between threads.
class FrameEncoder {
 public:
  explicit FrameEncoder(int level);
  ~FrameEncoder();
  FrameEncoder(const FrameEncoder&) = delete;
  FrameEncoder& operator=(const FrameEncoder&) = delete;

  /// Encodes `input` as one standalone Zstandard frame with content size
  /// and checksum recorded. A nonzero `segment` ends a block every `segment`
  /// input bytes, so blocks never mix data from neighbouring segments.
  std::vector<std::uint8_t> encode(std::span<const std::uint8_t> input, std::size_t segment = 0);

 private:
  ZSTD_CCtx_s* ctx_;
};

class FrameDecoder {
 public:
  FrameDecoder();
  ~FrameDecoder();
  FrameDecoder(const FrameDecoder&) = delete;
  FrameDecoder& operator=(const FrameDecoder&) = delete;

  /// `frame` must be exactly one frame whose content is exactly out.size()
  /// bytes; anything else throws CorruptFrame.
  void decode(std::span<const std::uint8_t> frame, std::span<std::uint8_t> out);

 private:
  ZSTD_DCtx_s* ctx_;
};

int min_level();
int max_level();

}  // namespace sphc::detail
