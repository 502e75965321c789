#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>

#include "sphc/codec.hpp"
#include "sphc/matrix.hpp"

namespace sphc {

/// Shannon entropy (bits per byte) of the 256-bin byte histogram.
/// Throws EmptyInput.
double byte_entropy(std::span<const std::uint8_t> buf);

struct ExponentStats {
  std::array<std::uint64_t, 256> histogram{};
  double entropy_bits = 0.0;
  std::size_t unique = 0;
};

/// Histogram of the 8-bit IEEE 754 exponent field (bits 30..23).
ExponentStats exponent_stats(std::span<const float> values);

struct EntropyReport {
  double total_bits_per_byte = 0.0;
  std::array<double, 4> plane_bits_per_byte{};  // plane 0 = least-significant byte
  double exponent_entropy_bits = 0.0;
  std::size_t exponent_unique = 0;
  std::array<std::uint64_t, 256> exponent_histogram{};
};

/// Byte and exponent entropies of a float32 array in little-endian layout.
EntropyReport entropy_report(std::span<const float> values);

/// Fraction of angles with exponent field 127 over the columns k (1-based)
/// with d - k >= min_tail. Throws NoQualifyingColumns.
double concentration_fraction(const AngleMatrix& theta, std::size_t min_tail = 64);

struct ErrorReport {
  double max_abs = 0.0;
  double mean_abs = 0.0;
  double cos_max_err = 0.0;         // max_i |<x_i, x'_i> - 1|
  double cross_pair_max_err = 0.0;  // max |x_i.x_j - x'_i.x'_j| over sampled pairs
  std::size_t cross_pairs = 0;
};

inline constexpr std::size_t kDefaultCrossPairs = 10000;
inline constexpr std::uint64_t kCrossPairSeed = 0x5eed5eedULL;

/// Throws ShapeMismatch.
ErrorReport reconstruction_errors(const EmbeddingMatrix& x, const EmbeddingMatrix& x_prime,
                                  std::size_t cross_pairs = kDefaultCrossPairs,
                                  std::uint64_t seed = kCrossPairSeed);

struct ComparisonReport {
  double raw_bytes = 0.0;
  double baseline_bytes = 0.0;
  double spherical_bytes = 0.0;
  double ratio_baseline = 0.0;
  double ratio_spherical = 0.0;
  double size_reduction_vs_baseline = 0.0;  // 1 - spherical / baseline
  double ratio_gain_vs_baseline = 0.0;      // baseline / spherical - 1
};

ComparisonReport comparison_from_sizes(double raw_bytes, double baseline_bytes,
                                       double spherical_bytes);

/// Compresses x in both modes with the level, chunking and truncation of `opts`.
ComparisonReport compare_methods(const EmbeddingMatrix& x, CodecOptions opts = {});

}  // namespace sphc
