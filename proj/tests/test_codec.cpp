#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "sphc/codec.hpp"
#include "sphc/error.hpp"
#include "sphc/synth.hpp"
#include "test_util.hpp"

using namespace sphc;
using sphc::test::bits_of;
using sphc::test::float_of;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no sphc::Error thrown");
  return ErrorCode::InvalidArgument;
}

std::vector<float> random_bit_patterns(std::size_t count, std::uint32_t seed) {
  std::mt19937 rng(seed);
  std::vector<float> v(count);
  for (auto& x : v) x = float_of(rng());
  return v;
}

/// Number of blocks in a single Zstandard frame, walking the block headers.
std::size_t zstd_block_count(ByteSpan frame) {
  REQUIRE(frame.size() >= 6);
  REQUIRE(frame[0] == 0x28);
  const std::uint8_t fhd = frame[4];
  const bool single_segment = (fhd >> 5) & 1;
  const std::size_t dict_bytes[] = {0, 1, 2, 4};
  const std::size_t fcs_bytes[] = {single_segment ? 1u : 0u, 2, 4, 8};
  std::size_t pos = 5 + (single_segment ? 0 : 1) + dict_bytes[fhd & 3] + fcs_bytes[fhd >> 6];
  std::size_t blocks = 0;
  for (bool last = false; !last;) {
    REQUIRE(pos + 3 <= frame.size());
    const std::uint32_t h = frame[pos] | frame[pos + 1] << 8 | frame[pos + 2] << 16;
    last = h & 1;
    const std::uint32_t type = (h >> 1) & 3;
    const std::uint32_t size = h >> 3;
    pos += 3 + (type == 1 ? 1 : size);
    ++blocks;
  }
  const bool checksum = (fhd >> 2) & 1;
  CHECK(pos + (checksum ? 4 : 0) == frame.size());
  return blocks;
}

}  // namespace

TEST_CASE("shuffle_filter interleaves byte planes") {
  const float a = float_of(0xA3A2A1A0u);
  const float b = float_of(0xB3B2B1B0u);
  const std::vector<float> chunk = {a, b};
  const Bytes out = shuffle_filter(chunk, 1, 2);
  const Bytes expected = {0xA0, 0xB0, 0xA1, 0xB1, 0xA2, 0xB2, 0xA3, 0xB3};
  CHECK(out == expected);

  const Bytes single = shuffle_filter(std::vector<float>{a}, 1, 1);
  CHECK(single == Bytes{0xA0, 0xA1, 0xA2, 0xA3});
}

TEST_CASE("shuffle_filter transposes before splitting planes") {
  // 2 rows x 2 columns: column-major order is (r0c0, r1c0, r0c1, r1c1).
  const std::vector<float> chunk = {float_of(0x00000011u), float_of(0x00000022u),
                                    float_of(0x00000033u), float_of(0x00000044u)};
  const Bytes out = shuffle_filter(chunk, 2, 2);
  CHECK(out[0] == 0x11);
  CHECK(out[1] == 0x33);
  CHECK(out[2] == 0x22);
  CHECK(out[3] == 0x44);
}

TEST_CASE("unshuffle_filter inverts shuffle_filter") {
  const float a = float_of(0xA3A2A1A0u);
  const float b = float_of(0xB3B2B1B0u);
  const std::vector<float> back =
      unshuffle_filter(Bytes{0xA0, 0xB0, 0xA1, 0xB1, 0xA2, 0xB2, 0xA3, 0xB3}, 1, 2);
  CHECK(bits_of(back[0]) == bits_of(a));
  CHECK(bits_of(back[1]) == bits_of(b));

  const std::vector<float> zeros = unshuffle_filter(Bytes(4 * 6, 0), 2, 3);
  CHECK(std::all_of(zeros.begin(), zeros.end(), [](float v) { return bits_of(v) == 0; }));

  CHECK(code_of([] { unshuffle_filter(Bytes(7), 1, 2); }) == ErrorCode::LengthMismatch);
}

TEST_CASE("shuffle roundtrip is bit-exact for random bit patterns and shapes") {
  std::mt19937 rng(1234);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t m = 1 + rng() % 40;
    const std::size_t w = 1 + rng() % 40;
    const std::vector<float> chunk = random_bit_patterns(m * w, rng());
    const std::vector<float> back = unshuffle_filter(shuffle_filter(chunk, m, w), m, w);
    CHECK(sphc::test::bit_equal(chunk, back));
  }
  const AngleMatrix angles(100, 767, random_bit_patterns(100 * 767, 99));
  CHECK(sphc::test::bit_equal(angles.values(),
                              unshuffle_filter(shuffle_filter(angles.values(), 100, 767), 100, 767)));
}

TEST_CASE("truncate_mantissa") {
  const std::vector<float> values = random_bit_patterns(1000, 3);
  CHECK(sphc::test::bit_equal(values, truncate_mantissa(values, 0)));

  const std::vector<float> one_ulp = {float_of(0x3F800001u)};
  CHECK(bits_of(truncate_mantissa(one_ulp, 1)[0]) == 0x3F800000u);

  // Sign and exponent are untouched at the maximum truncation.
  const std::vector<float> max_trunc = truncate_mantissa(values, 22);
  for (std::size_t i = 0; i < values.size(); ++i)
    CHECK((bits_of(max_trunc[i]) >> 23) == (bits_of(values[i]) >> 23));

  std::mt19937 rng(8);
  std::uniform_real_distribution<float> in_range(1.0f, 2.0f);
  std::vector<float> unit_range(10000);
  for (auto& v : unit_range) v = in_range(rng);
  const std::vector<float> t6 = truncate_mantissa(unit_range, 6);
  double worst = 0.0;
  for (std::size_t i = 0; i < t6.size(); ++i)
    worst = std::max(worst, std::abs(static_cast<double>(unit_range[i]) - t6[i]));
  CHECK(worst < std::ldexp(1.0, -17));

  CHECK(code_of([&] { truncate_mantissa(values, 23); }) == ErrorCode::BitCountOutOfRange);
}

TEST_CASE("single-vector container compresses at about 1.35x") {
  const EmbeddingMatrix x = gen_uniform(1, 768, 7);
  const Bytes c = compress(x);
  const double ratio = 4.0 * 768 / static_cast<double>(c.size());
  CHECK(ratio == doctest::Approx(1.35).epsilon(0.05 / 1.35));
}

TEST_CASE("spherical roundtrip through the container") {
  const EmbeddingMatrix x = gen_uniform(500, 768, 1);
  const Bytes c = compress(x);
  const DecodedMatrix back = decompress(c);
  REQUIRE(back.matrix.rows() == 500);
  REQUIRE(back.matrix.cols() == 768);
  CHECK_FALSE(back.norms.has_value());
  double worst = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k)
    worst = std::max(worst, std::abs(static_cast<double>(x.values()[k]) - back.matrix.values()[k]));
  CHECK(worst < sphc::test::kFloat32Eps);

  // The inner layer is lossless: stored angles equal the forward transform bit for bit.
  CHECK(sphc::test::bit_equal(decode_stored(c), to_spherical(x).values()));
}

TEST_CASE("baseline mode is lossless end to end") {
  const EmbeddingMatrix x = gen_uniform(300, 100, 2);
  CodecOptions opts;
  opts.mode = Mode::BaselineCartesian;
  opts.chunk_size = 64;
  const DecodedMatrix back = decompress(compress(x, opts));
  CHECK(sphc::test::bit_equal(x.values(), back.matrix.values()));

  // Arbitrary finite values are fine without a norm policy.
  EmbeddingMatrix wild(3, 4, {1e30f, -2.0f, 0.0f, 5.0f, 1e-38f, 3.0f, -7.0f, 8.0f, 9.0f, 1.0f, 2.0f, 3.0f});
  CHECK(sphc::test::bit_equal(wild.values(), decompress(compress(wild, opts)).matrix.values()));
}

TEST_CASE("row ranges decode only what they need and equal the full slice") {
  const EmbeddingMatrix x = gen_uniform(10000, 768, 3);
  CodecOptions opts;
  opts.chunk_size = 1000;
  const Bytes c = compress(x, opts);

  const ContainerLayout layout = read_header(c);
  CHECK(layout.header.num_chunks == 10);
  CHECK(layout.header.n == 10000);
  CHECK(layout.header.d == 768);

  const DecodedMatrix full = decompress(c);
  const DecodedMatrix part = decompress(c, RowRange{100, 200});
  CHECK(part.first_row == 100);
  REQUIRE(part.matrix.rows() == 100);
  CHECK(sphc::test::bit_equal(part.matrix.values(),
                              std::span<const float>(full.matrix.values()).subspan(100 * 768, 100 * 768)));

  // Range spanning a chunk boundary.
  const DecodedMatrix across = decompress(c, RowRange{950, 2050});
  CHECK(sphc::test::bit_equal(across.matrix.values(),
                              std::span<const float>(full.matrix.values()).subspan(950 * 768, 1100 * 768)));

  // Concatenating every chunk range equals the full decode.
  std::vector<float> stitched;
  for (std::size_t c0 = 0; c0 < 10000; c0 += 1000) {
    const DecodedMatrix piece = decompress(c, RowRange{c0, c0 + 1000});
    stitched.insert(stitched.end(), piece.matrix.values().begin(), piece.matrix.values().end());
  }
  CHECK(sphc::test::bit_equal(stitched, full.matrix.values()));

  CHECK(code_of([&] { decompress(c, RowRange{5, 5}); }) == ErrorCode::RangeOutOfBounds);
  CHECK(code_of([&] { decompress(c, RowRange{9990, 10001}); }) == ErrorCode::RangeOutOfBounds);
}

TEST_CASE("read_header offsets agree with the serialized sections") {
  const EmbeddingMatrix x = gen_uniform(1234, 64, 4);
  CodecOptions opts;
  opts.chunk_size = 100;
  opts.store_norms = true;
  const Bytes c = compress(x, opts);
  const ContainerLayout layout = read_header(c);
  REQUIRE(layout.header.num_chunks == 13);
  CHECK(layout.chunk_rows(12) == 34);
  CHECK(layout.header.has_norms());

  // Serializer oracle: header, table, u64 norms length, norms frame, payloads.
  const std::uint64_t table_end = kHeaderSize + 8 * 13;
  CHECK(layout.norms_offset == table_end + 8);
  CHECK(layout.payload_offset == layout.norms_offset + layout.norms_length);
  std::uint64_t sum = 0;
  for (std::size_t i = 0; i < 13; ++i) {
    CHECK(layout.chunk_offsets[i] == layout.payload_offset + sum);
    sum += layout.chunk_lengths[i];
  }
  CHECK(sum == layout.payload_length);
  CHECK(layout.payload_offset + sum == c.size());
}

TEST_CASE("header bytes follow the documented layout") {
  const EmbeddingMatrix x = gen_uniform(5, 8, 4);
  CodecOptions opts;
  opts.chunk_size = 2;
  opts.truncate_bits = 3;
  const Bytes c = compress(x, opts);
  CHECK(c[0] == 'S');
  CHECK(c[1] == 'P');
  CHECK(c[2] == 'H');
  CHECK(c[3] == 'C');
  CHECK(c[4] == 1);
  CHECK(c[5] == 0);
  CHECK(c[6] == 0x2);
  CHECK(c[7] == 3);
  CHECK(c[8] == 5);
  for (int i = 9; i < 16; ++i) CHECK(c[i] == 0);
  CHECK(c[16] == 8);
  CHECK(c[20] == 2);
  CHECK(c[24] == 3);
  // Each payload is a standard Zstandard frame (magic 0xFD2FB528, little-endian).
  const ContainerLayout layout = read_header(c);
  for (auto off : layout.chunk_offsets) {
    CHECK(c[off] == 0x28);
    CHECK(c[off + 1] == 0xB5);
    CHECK(c[off + 2] == 0x2F);
    CHECK(c[off + 3] == 0xFD);
  }
}

TEST_CASE("malformed containers are rejected") {
  const EmbeddingMatrix x = gen_uniform(50, 16, 5);
  CodecOptions opts;
  opts.chunk_size = 10;
  const Bytes good = compress(x, opts);

  Bytes bad_magic = good;
  std::copy_n("XXXX", 4, bad_magic.begin());
  CHECK(code_of([&] { read_header(bad_magic); }) == ErrorCode::BadMagic);

  Bytes bad_version = good;
  bad_version[4] = 2;
  CHECK(code_of([&] { read_header(bad_version); }) == ErrorCode::UnsupportedVersion);

  CHECK(code_of([&] { read_header(ByteSpan(good).first(20)); }) == ErrorCode::TruncatedHeader);
  CHECK(code_of([&] { read_header(ByteSpan(good).first(40)); }) == ErrorCode::TruncatedHeader);

  Bytes truncated_payload(good.begin(), good.end() - 3);
  CHECK(code_of([&] { decompress(truncated_payload); }) == ErrorCode::CorruptFrame);

  const ContainerLayout layout = read_header(good);
  Bytes flipped = good;
  flipped[layout.chunk_offsets[2] + layout.chunk_lengths[2] / 2] ^= 0x5A;
  CHECK(code_of([&] { decompress(flipped); }) == ErrorCode::CorruptFrame);
  // Chunks that do not intersect the damaged one still decode.
  CHECK_NOTHROW(decompress(flipped, RowRange{0, 10}));

  Bytes bad_count = good;
  bad_count[24] = 4;
  CHECK(code_of([&] { read_header(bad_count); }) == ErrorCode::BadFormat);
}

TEST_CASE("compress input validation") {
  const EmbeddingMatrix x = gen_uniform(4, 8, 6);
  EmbeddingMatrix scaled = x;
  for (float& v : scaled.row(1)) v *= 1.5f;
  CHECK(code_of([&] { compress(scaled); }) == ErrorCode::NormViolation);

  EmbeddingMatrix with_nan = x;
  with_nan(2, 3) = std::nanf("");
  CHECK(code_of([&] { compress(with_nan); }) == ErrorCode::NonFiniteInput);
  CodecOptions baseline;
  baseline.mode = Mode::BaselineCartesian;
  CHECK(code_of([&] { compress(with_nan, baseline); }) == ErrorCode::NonFiniteInput);

  CodecOptions bad_trunc;
  bad_trunc.truncate_bits = 23;
  CHECK(code_of([&] { compress(x, bad_trunc); }) == ErrorCode::BitCountOutOfRange);

  CHECK(code_of([&] { compress(std::vector<float>{1.0f}, 1, 1); }) == ErrorCode::DimensionTooSmall);

  const std::vector<std::uint8_t> bf16(2 * 4 * 8);
  CHECK(code_of([&] { compress(ArrayView{bf16, 4, 8, DType::BFloat16}); }) ==
        ErrorCode::UnsupportedDtype);
  CHECK(code_of([&] { compress(ArrayView{bf16, 4, 8, DType::Float64}); }) ==
        ErrorCode::UnsupportedDtype);
}

TEST_CASE("ArrayView input produces the same bytes as the typed entry point") {
  const EmbeddingMatrix x = gen_uniform(64, 32, 8);
  const Bytes expected = compress(x);
  std::vector<std::uint8_t> raw(4 * x.size() + 1);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const std::uint32_t b = bits_of(x.values()[i]);
    for (int k = 0; k < 4; ++k) raw[1 + 4 * i + k] = static_cast<std::uint8_t>(b >> (8 * k));
  }
  // Deliberately misaligned view.
  CHECK(compress(ArrayView{ByteSpan(raw).subspan(1), 64, 32, DType::Float32LE}) == expected);
  std::vector<std::uint8_t> aligned(raw.begin() + 1, raw.end());
  CHECK(compress(ArrayView{aligned, 64, 32, DType::Float32LE}) == expected);
}

TEST_CASE("renormalize and stored norms restore magnitudes") {
  EmbeddingMatrix x = gen_uniform(20, 64, 9);
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (float& v : x.row(i)) v *= static_cast<float>(1.0 + static_cast<double>(i));
  CodecOptions opts;
  opts.renormalize = true;
  opts.store_norms = true;
  opts.chunk_size = 7;
  const Bytes c = compress(x, opts);
  const DecodedMatrix back = decompress(c, RowRange{3, 15});
  REQUIRE(back.norms.has_value());
  REQUIRE(back.norms->size() == 12);
  CHECK((*back.norms)[0] == doctest::Approx(4.0).epsilon(1e-6));
  for (std::size_t i = 0; i < 12; ++i) {
    for (std::size_t j = 0; j < 64; ++j) {
      const double ref = x(i + 3, j);
      CHECK(std::abs(back.matrix(i, j) - ref) <= 4e-7 * (static_cast<double>(i) + 4.0));
    }
  }

  // Without renormalize the same input violates the tolerance.
  CodecOptions strict;
  strict.store_norms = true;
  CHECK(code_of([&] { compress(x, strict); }) == ErrorCode::NormViolation);
}

TEST_CASE("renormalize without stored norms yields unit rows") {
  EmbeddingMatrix x = gen_uniform(10, 32, 10);
  for (float& v : x.values()) v *= 3.0f;
  CodecOptions opts;
  opts.renormalize = true;
  const DecodedMatrix back = decompress(compress(x, opts));
  CHECK_FALSE(back.norms.has_value());
  for (std::size_t i = 0; i < 10; ++i)
    CHECK(std::sqrt(sphc::test::dot(back.matrix.row(i), back.matrix.row(i))) ==
          doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("compressed bytes do not depend on the thread count") {
  const EmbeddingMatrix x = gen_uniform(3000, 128, 11);
  CodecOptions serial;
  serial.chunk_size = 250;
  serial.threads = 1;
  CodecOptions parallel = serial;
  parallel.threads = 4;
  const Bytes a = compress(x, serial);
  CHECK(a == compress(x, parallel));
  CHECK(sphc::test::bit_equal(decompress(a, std::nullopt, 1).matrix.values(),
                              decompress(a, std::nullopt, 3).matrix.values()));
}

TEST_CASE("truncation trades size for error monotonically") {
  const EmbeddingMatrix x = gen_uniform(1000, 256, 12);
  for (Mode mode : {Mode::Spherical, Mode::BaselineCartesian}) {
    CAPTURE(static_cast<int>(mode));
    std::size_t prev_size = SIZE_MAX;
    double prev_err = 0.0;
    for (unsigned k = 0; k <= kMaxTruncateBits; k += 2) {
      CAPTURE(k);
      CodecOptions opts;
      opts.mode = mode;
      opts.truncate_bits = k;
      const Bytes c = compress(x, opts);
      const DecodedMatrix back = decompress(c);
      double err = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i)
        err = std::max(err, std::abs(static_cast<double>(x.values()[i]) - back.matrix.values()[i]));
      CHECK(c.size() <= prev_size);
      CHECK(err >= prev_err);
      prev_size = c.size();
      prev_err = err;
    }
  }
}

TEST_CASE("decompress_angles returns stored angles or transforms baseline rows") {
  const EmbeddingMatrix x = gen_uniform(40, 24, 13);
  const AngleMatrix expected = to_spherical(x);
  const AngleMatrix from_spherical_container = decompress_angles(compress(x), RowRange{5, 6});
  CHECK(sphc::test::bit_equal(from_spherical_container.values(), expected.row(5)));

  CodecOptions baseline;
  baseline.mode = Mode::BaselineCartesian;
  const AngleMatrix from_baseline = decompress_angles(compress(x, baseline), RowRange{5, 6});
  CHECK(sphc::test::bit_equal(from_baseline.values(), expected.row(5)));
}

TEST_CASE("every byte plane of a chunk starts a new zstd block") {
  // 100 rows x 767 angles: four planes of 76,700 bytes, each below the
  // 128 KiB block limit, so a plane-aligned frame holds exactly four blocks.
  const EmbeddingMatrix x = gen_uniform(300, 768, 21);
  CodecOptions opts;
  opts.chunk_size = 100;
  const Bytes c = compress(x, opts);
  const ContainerLayout layout = read_header(c);
  REQUIRE(layout.chunk_lengths.size() == 3);
  for (std::size_t k = 0; k < 3; ++k) {
    const ByteSpan frame(c.data() + layout.chunk_offsets[k], layout.chunk_lengths[k]);
    CHECK(zstd_block_count(frame) == 4);
  }
}
