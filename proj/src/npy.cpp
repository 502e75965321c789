#include "sphc/npy.hpp"

#include <bit>
#include <cctype>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string_view>

#include "sphc/error.hpp"

namespace sphc {

namespace {

constexpr std::string_view kNpyMagic = "\x93NUMPY";

std::size_t skip_space(std::string_view s, std::size_t at) {
  while (at < s.size() && std::isspace(static_cast<unsigned char>(s[at]))) ++at;
  return at;
}

/// Position just after "'key':" in the header dictionary.
std::size_t find_value(std::string_view dict, std::string_view key) {
  for (const char quote : {'\'', '"'}) {
    const std::string needle = std::string(1, quote) + std::string(key) + quote;
    const std::size_t at = dict.find(needle);
    if (at == std::string_view::npos) continue;
    std::size_t pos = skip_space(dict, at + needle.size());
    if (pos >= dict.size() || dict[pos] != ':') break;
    return skip_space(dict, pos + 1);
  }
  throw Error(ErrorCode::BadFormat, "NPY header lacks '" + std::string(key) + "'");
}

}  // namespace

NpyHeader parse_npy_header(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 10 || std::memcmp(bytes.data(), kNpyMagic.data(), kNpyMagic.size()) != 0) {
    throw Error(ErrorCode::BadFormat, "missing NPY magic");
  }
  NpyHeader h;
  h.major = bytes[6];
  h.minor = bytes[7];
  std::size_t header_len = 0;
  std::size_t prefix = 0;
  if (h.major == 1) {
    header_len = bytes[8] | static_cast<std::size_t>(bytes[9]) << 8;
    prefix = 10;
  } else if (h.major == 2 || h.major == 3) {
    if (bytes.size() < 12) throw Error(ErrorCode::BadFormat, "truncated NPY preamble");
    header_len = bytes[8] | static_cast<std::size_t>(bytes[9]) << 8 |
                 static_cast<std::size_t>(bytes[10]) << 16 |
                 static_cast<std::size_t>(bytes[11]) << 24;
    prefix = 12;
  } else {
    throw Error(ErrorCode::BadFormat, "unsupported NPY version " + std::to_string(h.major));
  }
  if (bytes.size() < prefix + header_len) throw Error(ErrorCode::BadFormat, "truncated NPY header");
  h.data_offset = prefix + header_len;
  const std::string_view dict(reinterpret_cast<const char*>(bytes.data()) + prefix, header_len);

  std::size_t at = find_value(dict, "descr");
  if (at >= dict.size() || (dict[at] != '\'' && dict[at] != '"')) {
    throw Error(ErrorCode::BadFormat, "NPY descr is not a string");
  }
  const std::size_t close = dict.find(dict[at], at + 1);
  if (close == std::string_view::npos) throw Error(ErrorCode::BadFormat, "unterminated NPY descr");
  h.descr = std::string(dict.substr(at + 1, close - at - 1));

  at = find_value(dict, "fortran_order");
  if (dict.substr(at, 4) == "True") {
    h.fortran_order = true;
  } else if (dict.substr(at, 5) == "False") {
    h.fortran_order = false;
  } else {
    throw Error(ErrorCode::BadFormat, "NPY fortran_order is not a boolean");
  }

  at = find_value(dict, "shape");
  if (at >= dict.size() || dict[at] != '(') throw Error(ErrorCode::BadFormat, "NPY shape is not a tuple");
  const std::size_t end = dict.find(')', at);
  if (end == std::string_view::npos) throw Error(ErrorCode::BadFormat, "unterminated NPY shape");
  std::size_t pos = at + 1;
  while (true) {
    pos = skip_space(dict, pos);
    if (pos >= end) break;
    if (!std::isdigit(static_cast<unsigned char>(dict[pos]))) {
      throw Error(ErrorCode::BadFormat, "bad NPY shape entry");
    }
    std::size_t value = 0;
    while (pos < end && std::isdigit(static_cast<unsigned char>(dict[pos]))) {
      value = value * 10 + static_cast<std::size_t>(dict[pos] - '0');
      ++pos;
    }
    h.shape.push_back(value);
    pos = skip_space(dict, pos);
    if (pos < end && dict[pos] == ',') ++pos;
  }
  return h;
}

std::vector<std::uint8_t> encode_npy(const EmbeddingMatrix& m) {
  std::string dict = "{'descr': '<f4', 'fortran_order': False, 'shape': (" +
                     std::to_string(m.rows()) + ", " + std::to_string(m.cols()) + "), }";
  // Pad with spaces so that data starts on a 64-byte boundary; newline last.
  const std::size_t unpadded = 10 + dict.size() + 1;
  dict.append((64 - unpadded % 64) % 64, ' ');
  dict.push_back('\n');

  std::vector<std::uint8_t> out;
  out.reserve(10 + dict.size() + 4 * m.size());
  out.insert(out.end(), kNpyMagic.begin(), kNpyMagic.end());
  out.push_back(1);
  out.push_back(0);
  out.push_back(static_cast<std::uint8_t>(dict.size()));
  out.push_back(static_cast<std::uint8_t>(dict.size() >> 8));
  out.insert(out.end(), dict.begin(), dict.end());
  for (float v : m.values()) {
    const auto bits = std::bit_cast<std::uint32_t>(v);
    for (int b = 0; b < 4; ++b) out.push_back(static_cast<std::uint8_t>(bits >> (8 * b)));
  }
  return out;
}

namespace {

std::vector<float> decode_f32_le(std::span<const std::uint8_t> bytes) {
  std::vector<float> values(bytes.size() / 4);
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(bytes[4 * i + b]) << (8 * b);
    values[i] = std::bit_cast<float>(bits);
  }
  return values;
}

}  // namespace

EmbeddingMatrix decode_npy(std::span<const std::uint8_t> bytes) {
  const NpyHeader h = parse_npy_header(bytes);
  if (h.fortran_order) throw Error(ErrorCode::UnsupportedLayout, "Fortran-ordered arrays are not supported");
  if (h.shape.size() != 2) {
    throw Error(ErrorCode::UnsupportedLayout,
                "expected a 2-D array, got " + std::to_string(h.shape.size()) + " dimension(s)");
  }
  if (!h.is_float32_le()) {
    throw Error(ErrorCode::UnsupportedLayout, "expected little-endian float32 ('<f4'), got '" +
                                                  h.descr + "'");
  }
  const std::size_t n = h.shape[0];
  const std::size_t d = h.shape[1];
  if (bytes.size() - h.data_offset != 4 * n * d) {
    throw Error(ErrorCode::BadFormat, "NPY payload is " +
                                          std::to_string(bytes.size() - h.data_offset) +
                                          " bytes, shape needs " + std::to_string(4 * n * d));
  }
  return EmbeddingMatrix(n, d, decode_f32_le(bytes.subspan(h.data_offset)));
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "' for reading");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorCode::IoError, "failed reading '" + path.string() + "'");
  return bytes;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoError, "failed writing '" + path.string() + "'");
}

bool is_raw_path(const std::filesystem::path& path) {
  const auto ext = path.extension();
  return ext == ".f32" || ext == ".bin";
}

EmbeddingMatrix read_array(const std::filesystem::path& path, std::optional<std::size_t> raw_d) {
  const std::vector<std::uint8_t> bytes = read_file(path);
  const bool has_magic =
      bytes.size() >= kNpyMagic.size() &&
      std::memcmp(bytes.data(), kNpyMagic.data(), kNpyMagic.size()) == 0;
  if (has_magic) return decode_npy(bytes);
  if (!raw_d) {
    if (is_raw_path(path)) {
      throw Error(ErrorCode::InvalidArgument, "raw float32 input needs its row width (d)");
    }
    return decode_npy(bytes);
  }
  const std::size_t d = *raw_d;
  if (d == 0 || bytes.size() % (4 * d) != 0) {
    throw Error(ErrorCode::BadFormat, "raw file size " + std::to_string(bytes.size()) +
                                          " is not a multiple of 4*d = " + std::to_string(4 * d));
  }
  return EmbeddingMatrix(bytes.size() / (4 * d), d, decode_f32_le(bytes));
}

void write_array(const std::filesystem::path& path, const EmbeddingMatrix& m) {
  if (!is_raw_path(path)) {
    write_file(path, encode_npy(m));
    return;
  }
  std::vector<std::uint8_t> bytes;
  bytes.reserve(4 * m.size());
  for (float v : m.values()) {
    const auto bits = std::bit_cast<std::uint32_t>(v);
    for (int b = 0; b < 4; ++b) bytes.push_back(static_cast<std::uint8_t>(bits >> (8 * b)));
  }
  write_file(path, bytes);
}

}  // namespace sphc
