#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sphc/matrix.hpp"

namespace sphc {

/// Parsed NPY header fields.
struct NpyHeader {
  int major = 1;
  int minor = 0;
  std::string descr;
  bool fortran_order = false;
  std::vector<std::size_t> shape;
  std::size_t data_offset = 0;

  bool is_float32_le() const { return descr == "<f4"; }
};

/// Throws BadFormat on a malformed preamble or dictionary.
NpyHeader parse_npy_header(std::span<const std::uint8_t> bytes);

/// Version 1.0 serialization: little-endian float32, C order, 2-D.
std::vector<std::uint8_t> encode_npy(const EmbeddingMatrix& m);
/// Throws BadFormat or UnsupportedLayout (Fortran order, not 2-D, not <f4).
EmbeddingMatrix decode_npy(std::span<const std::uint8_t> bytes);

// File helpers; I/O failures throw IoError.
std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

/// Reads an NPY file, or a raw little-endian float32 file when `raw_d` is set
/// (rows inferred from the file size).
EmbeddingMatrix read_array(const std::filesystem::path& path,
                           std::optional<std::size_t> raw_d = std::nullopt);
/// Writes NPY unless the extension is ".f32" / ".bin" (raw float32).
void write_array(const std::filesystem::path& path, const EmbeddingMatrix& m);

bool is_raw_path(const std::filesystem::path& path);

}  // namespace sphc
