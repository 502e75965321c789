#include <doctest.h>

#include <cmath>
#include <set>

#include "sphc/codec.hpp"
#include "sphc/error.hpp"
#include "sphc/random.hpp"
#include "sphc/synth.hpp"
#include "test_util.hpp"

using namespace sphc;

namespace {

double max_norm_deviation(const EmbeddingMatrix& x) {
  double worst = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i)
    worst = std::max(worst, std::abs(std::sqrt(sphc::test::dot(x.row(i), x.row(i))) - 1.0));
  return worst;
}

double ratio(const EmbeddingMatrix& x, Mode mode) {
  CodecOptions opts;
  opts.mode = mode;
  return 4.0 * static_cast<double>(x.size()) / static_cast<double>(compress(x, opts).size());
}

}  // namespace

TEST_CASE("philox4x32-10 known-answer vectors") {
  using Block = std::array<std::uint32_t, 4>;
  CHECK(philox4x32_10({0, 0, 0, 0}, {0, 0}) == Block{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(philox4x32_10({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
        Block{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(philox4x32_10({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
        Block{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("philox stream moments") {
  PhiloxStream rng(42, 7);
  const int n = 200000;
  double sum = 0.0;
  double sq = 0.0;
  double usum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    sum += z;
    sq += z * z;
    usum += rng.uniform();
  }
  CHECK(std::abs(sum / n) < 0.01);
  CHECK(std::abs(sq / n - 1.0) < 0.02);
  CHECK(std::abs(usum / n - 0.5) < 0.005);

  // Beta(a, a) has mean 1/2 and variance 1 / (4 (2a + 1)).
  const double a = 10.0;
  double bsum = 0.0;
  double bsq = 0.0;
  for (int i = 0; i < 50000; ++i) {
    const double b = rng.beta(a, a);
    bsum += b;
    bsq += b * b;
  }
  const double mean = bsum / 50000;
  CHECK(std::abs(mean - 0.5) < 0.005);
  CHECK(std::abs(bsq / 50000 - mean * mean - 1.0 / (4.0 * (2 * a + 1))) < 0.002);
}

TEST_CASE("gen_uniform") {
  const EmbeddingMatrix x = gen_uniform(2000, 768, 0);
  CHECK(max_norm_deviation(x) < 1e-6);
  CHECK(std::abs(sphc::test::mean_pairwise_cosine(x)) < 0.01);
  CHECK(x == gen_uniform(2000, 768, 0));
  CHECK_FALSE(x == gen_uniform(2000, 768, 1));
  // Row i depends only on (seed, i).
  const EmbeddingMatrix head = gen_uniform(10, 768, 0);
  CHECK(sphc::test::bit_equal(head.values(), std::span<const float>(x.values()).first(10 * 768)));
}

TEST_CASE("gen_vmf concentration levels") {
  SUBCASE("kappa = 0 is uniform") {
    const EmbeddingMatrix x = gen_vmf(2000, 768, 0.0, 1, 1);
    CHECK(max_norm_deviation(x) < 1e-6);
    CHECK(std::abs(sphc::test::mean_pairwise_cosine(x)) < 0.01);
  }
  SUBCASE("kappa = 100") {
    const EmbeddingMatrix x = gen_vmf(2000, 768, 100.0, 1, 2);
    CHECK(sphc::test::mean_pairwise_cosine(x) == doctest::Approx(0.016).epsilon(0.01 / 0.016));
  }
  SUBCASE("kappa = 1000") {
    const EmbeddingMatrix x = gen_vmf(2000, 768, 1000.0, 1, 3);
    CHECK(max_norm_deviation(x) < 1e-6);
    CHECK(sphc::test::mean_pairwise_cosine(x) == doctest::Approx(0.47).epsilon(0.03 / 0.47));
  }
  SUBCASE("clusters are assigned round-robin") {
    const EmbeddingMatrix x = gen_vmf(300, 64, 5000.0, 3, 4);
    // Tight clusters: same-cluster rows are far closer than cross-cluster rows.
    CHECK(sphc::test::dot(x.row(0), x.row(3)) > 0.9);
    CHECK(sphc::test::dot(x.row(1), x.row(4)) > 0.9);
    CHECK(sphc::test::dot(x.row(0), x.row(1)) < 0.6);
  }
  CHECK(gen_vmf(50, 32, 10.0, 2, 9) == gen_vmf(50, 32, 10.0, 2, 9));
  CHECK_THROWS_AS(gen_vmf(10, 8, -1.0, 1, 0), Error);
  CHECK_THROWS_AS(gen_vmf(10, 8, 1.0, 0, 0), Error);
}

TEST_CASE("gen_orthogonal") {
  const EmbeddingMatrix x = gen_orthogonal(100, 768, 5);
  CHECK(max_norm_deviation(x) < 1e-6);
  double worst = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = i + 1; j < x.rows(); ++j)
      worst = std::max(worst, std::abs(sphc::test::dot(x.row(i), x.row(j))));
  CHECK(worst < 1e-6);

  const EmbeddingMatrix square = gen_orthogonal(16, 16, 6);
  CHECK(max_norm_deviation(square) < 1e-6);

  try {
    gen_orthogonal(769, 768, 0);
    FAIL("expected TooManyRows");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::TooManyRows);
  }
}

TEST_CASE("gen_sparse") {
  CHECK(sparse_nonzeros(768, 0.1) == 77);
  CHECK(sparse_nonzeros(10, 0.3) == 3);
  CHECK(sparse_nonzeros(10, 1.0) == 10);
  CHECK(sparse_nonzeros(10, 0.001) == 1);

  const EmbeddingMatrix x = gen_sparse(300, 768, 0.1, 7);
  CHECK(max_norm_deviation(x) < 1e-6);
  std::set<std::vector<std::size_t>> supports;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    std::vector<std::size_t> support;
    for (std::size_t j = 0; j < x.cols(); ++j)
      if (x(i, j) != 0.0f) support.push_back(j);
    CHECK(support.size() == 77);
    supports.insert(support);
  }
  CHECK(supports.size() == 300);
  CHECK_THROWS_AS(gen_sparse(10, 8, 0.0, 0), Error);
  CHECK_THROWS_AS(gen_sparse(10, 8, 1.5, 0), Error);
}

TEST_CASE("generate dispatches on the distribution") {
  GenSpec spec;
  spec.distribution = Distribution::Sparse;
  spec.n = 20;
  spec.d = 50;
  spec.density = 0.2;
  spec.seed = 3;
  CHECK(generate(spec) == gen_sparse(20, 50, 0.2, 3));
  spec.distribution = Distribution::Orthogonal;
  CHECK(generate(spec) == gen_orthogonal(20, 50, 3));
  CHECK_THROWS_AS(gen_uniform(0, 5, 0), Error);
  CHECK_THROWS_AS(gen_uniform(5, 1, 0), Error);
}

TEST_CASE("spherical ratio does not depend on the geometry of the rows") {
  // Orthogonal rows need n <= d, so that case uses a square matrix.
  const std::vector<std::pair<const char*, EmbeddingMatrix>> inputs = {
      {"uniform", gen_uniform(2000, 768, 10)},
      {"vmf k=10", gen_vmf(2000, 768, 10.0, 1, 11)},
      {"vmf k=100", gen_vmf(2000, 768, 100.0, 1, 12)},
      {"vmf k=1000", gen_vmf(2000, 768, 1000.0, 1, 13)},
      {"orthogonal", gen_orthogonal(768, 768, 14)},
  };
  for (const auto& [name, x] : inputs) {
    CAPTURE(name);
    CHECK(std::abs(ratio(x, Mode::Spherical) - 1.50) <= 0.04);
  }
}

TEST_CASE("sparse rows still gain from the spherical representation") {
  const EmbeddingMatrix x = gen_sparse(2000, 768, 0.1, 15);
  CHECK(ratio(x, Mode::Spherical) >= 1.15 * ratio(x, Mode::BaselineCartesian));
}
