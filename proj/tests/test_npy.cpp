#include <doctest.h>

#include <string>

#include "sphc/error.hpp"
#include "sphc/npy.hpp"
#include "test_util.hpp"

using namespace sphc;

namespace {

std::vector<std::uint8_t> npy_with_dict(const std::string& dict, std::size_t payload_bytes) {
  std::vector<std::uint8_t> out = {0x93, 'N', 'U', 'M', 'P', 'Y', 1, 0};
  out.push_back(static_cast<std::uint8_t>(dict.size()));
  out.push_back(static_cast<std::uint8_t>(dict.size() >> 8));
  out.insert(out.end(), dict.begin(), dict.end());
  out.resize(out.size() + payload_bytes, 0);
  return out;
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no sphc::Error thrown");
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("NPY header for a 2x3 float32 matrix") {
  const EmbeddingMatrix m(2, 3, {1, 2, 3, 4, 5, 6});
  const std::vector<std::uint8_t> bytes = encode_npy(m);
  const std::string expected_dict = "{'descr': '<f4', 'fortran_order': False, 'shape': (2, 3), }";
  REQUIRE(bytes.size() >= 10);
  CHECK(bytes[0] == 0x93);
  CHECK(std::string(bytes.begin() + 1, bytes.begin() + 6) == "NUMPY");
  CHECK(bytes[6] == 1);
  CHECK(bytes[7] == 0);
  const std::size_t header_len = bytes[8] | (bytes[9] << 8);
  CHECK((10 + header_len) % 64 == 0);
  const std::string dict(bytes.begin() + 10, bytes.begin() + 10 + static_cast<long>(header_len));
  CHECK(dict.substr(0, expected_dict.size()) == expected_dict);
  CHECK(dict.back() == '\n');
  CHECK(bytes.size() == 10 + header_len + 24);
  // 1.0f little-endian
  CHECK(bytes[10 + header_len + 3] == 0x3F);
  CHECK(bytes[10 + header_len + 2] == 0x80);
}

TEST_CASE("NPY encode/decode roundtrip is bit-exact") {
  const EmbeddingMatrix m = sphc::test::std_uniform_rows(17, 9, 3);
  const EmbeddingMatrix back = decode_npy(encode_npy(m));
  CHECK(back.rows() == 17);
  CHECK(back.cols() == 9);
  CHECK(sphc::test::bit_equal(m.values(), back.values()));
}

TEST_CASE("NPY layouts the reader refuses") {
  CHECK(code_of([] {
          decode_npy(npy_with_dict("{'descr': '<f4', 'fortran_order': True, 'shape': (2, 3), }\n", 24));
        }) == ErrorCode::UnsupportedLayout);
  CHECK(code_of([] {
          decode_npy(npy_with_dict("{'descr': '<f8', 'fortran_order': False, 'shape': (2, 3), }\n", 48));
        }) == ErrorCode::UnsupportedLayout);
  CHECK(code_of([] {
          decode_npy(npy_with_dict("{'descr': '>f4', 'fortran_order': False, 'shape': (2, 3), }\n", 24));
        }) == ErrorCode::UnsupportedLayout);
  CHECK(code_of([] {
          decode_npy(npy_with_dict("{'descr': '<f4', 'fortran_order': False, 'shape': (6,), }\n", 24));
        }) == ErrorCode::UnsupportedLayout);
  CHECK(code_of([] {
          decode_npy(npy_with_dict("{'descr': '<f4', 'fortran_order': False, 'shape': (2, 3), }\n", 20));
        }) == ErrorCode::BadFormat);
  CHECK(code_of([] {
          decode_npy(npy_with_dict("{'fortran_order': False, 'shape': (2, 3), }\n", 24));
        }) == ErrorCode::BadFormat);
  std::vector<std::uint8_t> bad_magic = encode_npy(EmbeddingMatrix(1, 2, {1, 2}));
  bad_magic[1] = 'X';
  CHECK(code_of([&] { decode_npy(bad_magic); }) == ErrorCode::BadFormat);
}

TEST_CASE("NPY header parser tolerates numpy's spacing and quoting variants") {
  const NpyHeader h = parse_npy_header(
      npy_with_dict("{\"shape\": (4,5), \"fortran_order\": False, \"descr\": \"<f4\"}   \n", 80));
  CHECK(h.descr == "<f4");
  CHECK_FALSE(h.fortran_order);
  CHECK(h.shape == std::vector<std::size_t>{4, 5});
}

TEST_CASE("array files roundtrip through disk") {
  sphc::test::TempDir dir("npy");
  const EmbeddingMatrix m = sphc::test::std_uniform_rows(5, 7, 8);

  write_array(dir / "m.npy", m);
  CHECK(read_array(dir / "m.npy") == m);

  write_array(dir / "m.f32", m);
  CHECK(std::filesystem::file_size(dir / "m.f32") == 4 * 35);
  CHECK(read_array(dir / "m.f32", 7) == m);
  CHECK(code_of([&] { read_array(dir / "m.f32"); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([&] { read_array(dir / "m.f32", 6); }) == ErrorCode::BadFormat);
  CHECK(code_of([&] { read_array(dir / "missing.npy"); }) == ErrorCode::IoError);
}
