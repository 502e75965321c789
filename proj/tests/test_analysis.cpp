#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "sphc/analysis.hpp"
#include "sphc/error.hpp"
#include "sphc/synth.hpp"
#include "sphc/transform.hpp"
#include "test_util.hpp"

using namespace sphc;

namespace {

/// P(theta in [1, 2)) for a polar angle with density proportional to
/// sin^m(theta) on [0, pi], by composite Simpson quadrature.
double polar_mass_in_exponent_127(int m) {
  auto integrate = [m](double a, double b) {
    const int steps = 20000;
    const double h = (b - a) / steps;
    double s = std::pow(std::sin(a), m) + std::pow(std::sin(b), m);
    for (int i = 1; i < steps; ++i) s += (i % 2 ? 4.0 : 2.0) * std::pow(std::sin(a + i * h), m);
    return s * h / 3.0;
  };
  return integrate(1.0, 2.0) / integrate(0.0, std::numbers::pi);
}

}  // namespace

TEST_CASE("byte_entropy edge values") {
  CHECK(byte_entropy(std::vector<std::uint8_t>(1000, 42)) == 0.0);
  std::vector<std::uint8_t> all(256);
  for (int i = 0; i < 256; ++i) all[i] = static_cast<std::uint8_t>(i);
  CHECK(byte_entropy(all) == doctest::Approx(8.0).epsilon(1e-12));
  CHECK(byte_entropy(std::vector<std::uint8_t>{0, 1}) == doctest::Approx(1.0));
  CHECK_THROWS_AS(byte_entropy(std::vector<std::uint8_t>{}), Error);

  std::mt19937 rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::uint8_t> buf(1 + rng() % 5000);
    const unsigned span = 1 + rng() % 256;
    for (auto& b : buf) b = static_cast<std::uint8_t>(rng() % span);
    const double h = byte_entropy(buf);
    CHECK(h >= 0.0);
    CHECK(h <= 8.0);
  }
}

TEST_CASE("exponent_stats on simple inputs") {
  std::vector<float> in_unit_range;
  for (int i = 0; i < 100; ++i) in_unit_range.push_back(1.0f + static_cast<float>(i) / 100.0f);
  const ExponentStats s = exponent_stats(in_unit_range);
  CHECK(s.unique == 1);
  CHECK(s.histogram[127] == 100);
  CHECK(s.entropy_bits == 0.0);

  CHECK(exponent_stats(std::vector<float>{1.5708f}).histogram[127] == 1);
  CHECK(exponent_stats(std::vector<float>{0.75f, -0.75f}).histogram[126] == 2);
  CHECK_THROWS_AS(exponent_stats(std::vector<float>{}), Error);
}

TEST_CASE("exponent extraction agrees with a shift/mask oracle on 1e6 random floats") {
  std::mt19937 rng(77);
  std::vector<float> values(1000000);
  std::array<std::uint64_t, 256> oracle{};
  for (auto& v : values) {
    const std::uint32_t bits = rng();
    v = sphc::test::float_of(bits);
    ++oracle[(bits << 1) >> 24];
  }
  const ExponentStats s = exponent_stats(values);
  CHECK(s.histogram == oracle);
  std::size_t nonzero = 0;
  for (auto c : oracle) nonzero += c > 0;
  CHECK(s.unique == nonzero);
}

TEST_CASE("entropy_report planes and totals") {
  const EmbeddingMatrix x = gen_uniform(2000, 768, 0);
  const EntropyReport cart = entropy_report(x.values());
  CHECK(cart.total_bits_per_byte == doctest::Approx(7.36).epsilon(0.05 / 7.36));
  CHECK(cart.exponent_entropy_bits > 2.0);
  CHECK(cart.exponent_entropy_bits < 3.0);

  const EntropyReport sph = entropy_report(to_spherical(x).values());
  CHECK(sph.exponent_entropy_bits < 0.15);
  CHECK(sph.exponent_histogram[127] > sph.exponent_histogram[126]);
  CHECK(cart.total_bits_per_byte - sph.total_bits_per_byte >= 0.6);
  CHECK(cart.exponent_entropy_bits - sph.exponent_entropy_bits >= 2.0);
  for (double p : sph.plane_bits_per_byte) {
    CHECK(p >= 0.0);
    CHECK(p <= 8.0);
  }
}

TEST_CASE("concentration_fraction") {
  AngleMatrix half_pi(10, 99);
  for (float& v : half_pi.values()) v = static_cast<float>(std::numbers::pi / 2);
  CHECK(concentration_fraction(half_pi) == 1.0);

  const EmbeddingMatrix x = gen_uniform(500, 768, 1);
  const AngleMatrix t = to_spherical(x);
  CHECK(concentration_fraction(t, 64) >= 0.999);

  try {
    concentration_fraction(AngleMatrix(3, 1), 64);
    FAIL("expected NoQualifyingColumns");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NoQualifyingColumns);
  }
}

TEST_CASE("concentration_fraction in low dimension matches the polar-density oracle") {
  // d = 5: angle k has density ~ sin^(d-k-1) for k <= 3, the final angle is
  // uniform on [-pi, pi] and the exponent ignores its sign.
  const EmbeddingMatrix x = gen_uniform(20000, 5, 2);
  const AngleMatrix t = to_spherical(x);
  const double p4 = polar_mass_in_exponent_127(3);
  const double p3 = polar_mass_in_exponent_127(2);
  const double p2 = polar_mass_in_exponent_127(1);
  const double p_final = 1.0 / std::numbers::pi;

  CHECK(concentration_fraction(t, 4) == doctest::Approx(p4).epsilon(0.01 / p4));
  const double all_columns = (p4 + p3 + p2 + p_final) / 4.0;
  const double measured = concentration_fraction(t, 1);
  CHECK(measured == doctest::Approx(all_columns).epsilon(0.01 / all_columns));
  CHECK(measured < 0.9);
}

TEST_CASE("concentration_fraction is non-decreasing in min_tail") {
  const AngleMatrix t = to_spherical(gen_uniform(400, 300, 3));
  double prev = 0.0;
  for (std::size_t tail : {1, 2, 4, 8, 16, 32, 64, 128, 256}) {
    CAPTURE(tail);
    const double f = concentration_fraction(t, tail);
    CHECK(f >= prev);
    prev = f;
  }
}

TEST_CASE("reconstruction_errors") {
  const EmbeddingMatrix x = gen_uniform(50, 16, 4);
  const ErrorReport same = reconstruction_errors(x, x);
  CHECK(same.max_abs == 0.0);
  CHECK(same.mean_abs == 0.0);
  CHECK(same.cos_max_err < 1e-6);
  CHECK(same.cross_pair_max_err == 0.0);
  CHECK(same.cross_pairs == kDefaultCrossPairs);

  EmbeddingMatrix y = x;
  y(0, 0) += 0.5f;
  const ErrorReport diff = reconstruction_errors(x, y);
  CHECK(diff.max_abs == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(diff.mean_abs == doctest::Approx(diff.max_abs / 800.0).epsilon(1e-6));
  CHECK(diff.max_abs >= diff.mean_abs);
  CHECK(diff.cos_max_err > 0.0);

  try {
    reconstruction_errors(x, EmbeddingMatrix(50, 15));
    FAIL("expected ShapeMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ShapeMismatch);
  }
}

TEST_CASE("comparison arithmetic") {
  const ComparisonReport jina = comparison_from_sizes(59.38, 49.57, 37.59);
  CHECK(jina.ratio_spherical == doctest::Approx(1.58).epsilon(0.005 / 1.58));
  CHECK(jina.ratio_baseline == doctest::Approx(1.20).epsilon(0.005 / 1.20));

  const ComparisonReport minilm = comparison_from_sizes(11.13, 9.37, 7.43);
  CHECK(minilm.ratio_gain_vs_baseline == doctest::Approx(0.261).epsilon(0.0005 / 0.261));

  // Both improvement figures describe the same pair of sizes.
  for (const auto& r : {jina, minilm}) {
    CHECK(r.ratio_gain_vs_baseline ==
          doctest::Approx(1.0 / (1.0 - r.size_reduction_vs_baseline) - 1.0).epsilon(1e-12));
    CHECK(r.size_reduction_vs_baseline ==
          doctest::Approx(1.0 - r.ratio_baseline / r.ratio_spherical).epsilon(1e-12));
  }
}

TEST_CASE("compare_methods fills both modes") {
  const EmbeddingMatrix x = gen_uniform(400, 256, 5);
  const ComparisonReport r = compare_methods(x);
  CHECK(r.raw_bytes == 4.0 * 400 * 256);
  CHECK(r.ratio_spherical > r.ratio_baseline);
  CHECK(r.ratio_baseline == doctest::Approx(r.raw_bytes / r.baseline_bytes));
  CHECK(r.size_reduction_vs_baseline > 0.0);
  CHECK(r.ratio_gain_vs_baseline > r.size_reduction_vs_baseline);
}
