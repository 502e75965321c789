#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include <random>

#include "sincos.hpp"
#include "sphc/error.hpp"
#include "sphc/transform.hpp"
#include "test_util.hpp"

using namespace sphc;
using sphc::test::kFloat32Eps;

namespace {

constexpr float kHalfPi = static_cast<float>(std::numbers::pi / 2);

EmbeddingMatrix one_row(std::vector<float> v) {
  const std::size_t d = v.size();
  return EmbeddingMatrix(1, d, std::move(v));
}

std::uint32_t exponent_of(float v) { return (sphc::test::bits_of(v) >> 23) & 0xFF; }

}  // namespace

TEST_CASE("to_spherical maps axis vectors to the expected angles") {
  const AngleMatrix z = to_spherical(one_row({0, 0, 1}));
  CHECK(z(0, 0) == kHalfPi);
  CHECK(z(0, 1) == kHalfPi);

  const AngleMatrix e1 = to_spherical(one_row({1, 0, 0}));
  CHECK(e1(0, 0) == 0.0f);
  CHECK(e1(0, 1) == 0.0f);

  const AngleMatrix circle =
      to_spherical(one_row({static_cast<float>(std::cos(0.3)), static_cast<float>(std::sin(0.3))}));
  REQUIRE(circle.cols() == 1);
  CHECK(circle(0, 0) == doctest::Approx(0.3).epsilon(1e-7));
}

TEST_CASE("zero tail takes pi/2 and the final angle takes atan2(0,0) = 0") {
  const AngleMatrix t = to_spherical(one_row({0.6f, 0.8f, 0, 0, 0}));
  CHECK(t(0, 0) == static_cast<float>(std::acos(0.6)));
  CHECK(t(0, 1) == 0.0f);  // 0.8 / sqrt(0.64) = 1
  CHECK(t(0, 2) == kHalfPi);
  CHECK(t(0, 3) == 0.0f);
}

TEST_CASE("to_spherical rejects bad input") {
  CHECK_THROWS_AS(to_spherical(EmbeddingMatrix(2, 1)), Error);
  try {
    to_spherical(one_row({std::nanf(""), 1.0f, 0.0f}));
    FAIL("expected NonFiniteInput");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonFiniteInput);
  }
  try {
    to_spherical(EmbeddingMatrix(1, 1, {1.0f}));
    FAIL("expected DimensionTooSmall");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DimensionTooSmall);
  }
}

TEST_CASE("angle columns with d-k >= 64 land in exponent 127 for >99.9% of samples") {
  const std::size_t d = 768;
  const EmbeddingMatrix x = sphc::test::std_uniform_rows(1000, d, 11);
  const AngleMatrix t = to_spherical(x);
  std::size_t hits = 0;
  std::size_t total = 0;
  for (std::size_t i = 0; i < t.rows(); ++i) {
    for (std::size_t j = 0; j < t.cols(); ++j) {
      if (d - (j + 1) < 64) continue;
      ++total;
      if (exponent_of(t(i, j)) == 127) ++hits;
    }
  }
  CHECK(static_cast<double>(hits) / static_cast<double>(total) > 0.999);
}

TEST_CASE("stored angles stay in range and partial norms are non-increasing") {
  const EmbeddingMatrix x = sphc::test::std_uniform_rows(200, 33, 5);
  const AngleMatrix t = to_spherical(x);
  for (std::size_t i = 0; i < t.rows(); ++i) {
    for (std::size_t j = 0; j + 1 < t.cols(); ++j) {
      CHECK(t(i, j) >= 0.0f);
      CHECK(t(i, j) <= static_cast<float>(std::numbers::pi));
    }
    CHECK(std::abs(t(i, t.cols() - 1)) <= static_cast<float>(std::numbers::pi));
  }
  TransformScratch scratch;
  std::vector<float> angles(32);
  to_spherical_row(x.row(0), angles, scratch);
  CHECK(std::is_sorted(scratch.partial_sq_norms.rbegin(), scratch.partial_sq_norms.rend()));
}

TEST_CASE("from_spherical inverts the axis examples") {
  const EmbeddingMatrix z = from_spherical(AngleMatrix(1, 2, {kHalfPi, kHalfPi}));
  CHECK(std::abs(z(0, 0)) < 1e-7f);
  CHECK(std::abs(z(0, 1)) < 1e-7f);
  CHECK(z(0, 2) == doctest::Approx(1.0));

  const EmbeddingMatrix e1 = from_spherical(AngleMatrix(1, 2, {0.0f, 0.0f}));
  CHECK(e1(0, 0) == 1.0f);
  CHECK(e1(0, 1) == 0.0f);
  CHECK(e1(0, 2) == 0.0f);
}

TEST_CASE("roundtrip error stays below float32 epsilon on uniform rows") {
  const EmbeddingMatrix x = sphc::test::std_uniform_rows(300, 768, 21);
  const EmbeddingMatrix back = from_spherical(to_spherical(x));
  double max_err = 0.0;
  double cos_err = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < x.cols(); ++j)
      max_err = std::max(max_err, std::abs(static_cast<double>(x(i, j)) - back(i, j)));
    cos_err = std::max(cos_err, std::abs(sphc::test::dot(x.row(i), back.row(i)) - 1.0));
  }
  CHECK(max_err < kFloat32Eps);
  CHECK(cos_err < 2e-7);
}

TEST_CASE("roundtrip bound holds across dimensions >= 64") {
  for (std::size_t d : {64, 100, 257, 1024, 2048}) {
    CAPTURE(d);
    const EmbeddingMatrix x = sphc::test::std_uniform_rows(100, d, static_cast<std::uint32_t>(d));
    const EmbeddingMatrix back = from_spherical(to_spherical(x));
    double max_err = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k)
      max_err = std::max(max_err, std::abs(static_cast<double>(x.values()[k]) - back.values()[k]));
    CHECK(max_err < kFloat32Eps);
  }
}

TEST_CASE("standard basis vectors roundtrip exactly") {
  const std::size_t d = 17;
  for (std::size_t k = 0; k < d; ++k) {
    for (float sign : {1.0f, -1.0f}) {
      std::vector<float> v(d, 0.0f);
      v[k] = sign;
      const EmbeddingMatrix x = one_row(v);
      const EmbeddingMatrix back = from_spherical(to_spherical(x));
      CAPTURE(k);
      CAPTURE(sign);
      for (std::size_t j = 0; j < d; ++j) {
        if (j == k) {
          CHECK(back(0, j) == sign);
        } else {
          CHECK(std::abs(back(0, j)) < 1e-7f);  // cos(pi/2) in binary64 rounds to ~6e-17
        }
      }
    }
  }
}

TEST_CASE("angle_similarity examples") {
  const std::vector<float> theta = {1.0f, 2.0f, -0.5f};
  CHECK(angle_similarity(theta, theta) == doctest::Approx(1.0).epsilon(1e-6));

  const std::vector<float> z = {kHalfPi, kHalfPi};
  const std::vector<float> e1 = {0.0f, 0.0f};
  CHECK(std::abs(angle_similarity(z, e1)) < 1e-6);

  const std::vector<float> short_row = {1.0f};
  try {
    angle_similarity(theta, short_row);
    FAIL("expected LengthMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::LengthMismatch);
  }
}

TEST_CASE("angle_similarity matches the Cartesian dot product oracle") {
  for (std::size_t d : {2, 3, 8, 16, 64, 768}) {
    CAPTURE(d);
    const EmbeddingMatrix x = sphc::test::std_uniform_rows(200, d, static_cast<std::uint32_t>(3 * d));
    const AngleMatrix t = to_spherical(x);
    const EmbeddingMatrix back = from_spherical(t);
    double worst_vs_reconstructed = 0.0;
    double worst_vs_original = 0.0;
    for (std::size_t i = 0; i + 1 < x.rows(); i += 2) {
      const double sim = angle_similarity(t.row(i), t.row(i + 1));
      worst_vs_reconstructed = std::max(
          worst_vs_reconstructed, std::abs(sim - sphc::test::dot(back.row(i), back.row(i + 1))));
      worst_vs_original =
          std::max(worst_vs_original, std::abs(sim - sphc::test::dot(x.row(i), x.row(i + 1))));
    }
    CHECK(worst_vs_reconstructed < 1e-6);
    CHECK(worst_vs_original < 1e-6);
  }
}

TEST_CASE("check_norms accepts, renormalizes, or rejects") {
  SUBCASE("unit row accepted") {
    const std::vector<float> v = {0.6f, 0.8f};
    auto [x, report] = check_norms(v, 1, 2, 1e-3, false);
    CHECK(report.max_deviation < 1e-6);
    CHECK(report.violations == 0);
    CHECK(x(0, 0) == 0.6f);
  }
  SUBCASE("scaled row renormalized") {
    const std::vector<float> v = {1.2f, 1.6f};
    auto [x, report] = check_norms(v, 1, 2, 1e-3, true);
    REQUIRE(report.norms.size() == 1);
    CHECK(report.norms[0] == doctest::Approx(2.0).epsilon(1e-7));
    CHECK(std::sqrt(sphc::test::dot(x.row(0), x.row(0))) == doctest::Approx(1.0).epsilon(1e-7));
  }
  SUBCASE("norm 1.01 rejected") {
    const std::vector<float> v = {1.01f, 0.0f};
    try {
      check_norms(v, 1, 2, 1e-3, false);
      FAIL("expected NormViolation");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::NormViolation);
    }
  }
  SUBCASE("zero row under renormalize") {
    const std::vector<float> v = {0.0f, 0.0f, 0.6f, 0.8f};
    try {
      check_norms(v, 2, 2, 1e-3, true);
      FAIL("expected ZeroNormRow");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::ZeroNormRow);
    }
  }
  SUBCASE("shape and tolerance errors") {
    const std::vector<float> v = {1.0f, 0.0f, 0.0f};
    CHECK_THROWS_AS(check_norms(v, 1, 2), Error);
    CHECK_THROWS_AS(check_norms(std::vector<float>{1.0f, 0.0f}, 1, 2, 0.0), Error);
  }
}

TEST_CASE("row partitioning across threads does not change results") {
  const EmbeddingMatrix x = sphc::test::std_uniform_rows(257, 96, 9);
  const AngleMatrix serial = to_spherical(x, 1);
  const AngleMatrix parallel = to_spherical(x, 4);
  CHECK(sphc::test::bit_equal(serial.values(), parallel.values()));
  CHECK(sphc::test::bit_equal(from_spherical(serial, 1).values(),
                              from_spherical(serial, 3).values()));
}

TEST_CASE("bounded sincos agrees with libm on the angle range") {
  std::mt19937 rng(5);
  std::uniform_real_distribution<float> angle(-4.0f, 4.0f);
  std::vector<double> probes = {0.0, std::numbers::pi / 4, std::numbers::pi / 2, std::numbers::pi,
                                -std::numbers::pi, 3 * std::numbers::pi / 4, 4.0, -4.0};
  for (int i = 0; i < 200000; ++i) probes.push_back(angle(rng));
  double worst = 0.0;
  for (const double a : probes) {
    double s = 0.0;
    double c = 0.0;
    detail::sincos_bounded(a, s, c);
    worst = std::max({worst, std::abs(s - std::sin(a)), std::abs(c - std::cos(a))});
  }
  CHECK(worst <= 4.5e-16);
}

TEST_CASE("from_spherical_row falls back to libm outside the kernel range") {
  // Angles shifted by 2*pi describe the same point.
  const std::vector<float> in_range = {0.3f, 1.2f, 2.9f, -1.7f};
  std::vector<float> shifted = in_range;
  for (float& a : shifted) a += static_cast<float>(2 * std::numbers::pi);
  std::vector<float> x(5);
  std::vector<float> y(5);
  from_spherical_row(in_range, x);
  from_spherical_row(shifted, y);
  for (std::size_t i = 0; i < 5; ++i) CHECK(std::abs(x[i] - y[i]) < 1e-6f);

  const std::vector<float> nan_row = {0.3f, std::numeric_limits<float>::quiet_NaN()};
  std::vector<float> z(3);
  from_spherical_row(nan_row, z);
  CHECK(std::isnan(z[1]));
}
