#include "sphc/analysis.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

#include "sphc/error.hpp"
#include "sphc/random.hpp"

namespace sphc {

namespace {

double histogram_entropy(std::span<const std::uint64_t> counts) {
  std::uint64_t total = 0;
  for (auto c : counts) total += c;
  if (total == 0) return 0.0;
  double h = 0.0;
  for (auto c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / static_cast<double>(total);
    h -= p * std::log2(p);
  }
  // -0.0 for a single symbol
  return h <= 0.0 ? 0.0 : h;
}

std::uint32_t exponent_field(float v) { return (std::bit_cast<std::uint32_t>(v) >> 23) & 0xFF; }

}  // namespace

double byte_entropy(std::span<const std::uint8_t> buf) {
  if (buf.empty()) throw Error(ErrorCode::EmptyInput, "entropy of an empty buffer");
  std::array<std::uint64_t, 256> counts{};
  for (auto b : buf) ++counts[b];
  return histogram_entropy(counts);
}

ExponentStats exponent_stats(std::span<const float> values) {
  if (values.empty()) throw Error(ErrorCode::EmptyInput, "exponent statistics of no values");
  ExponentStats stats;
  for (float v : values) ++stats.histogram[exponent_field(v)];
  stats.entropy_bits = histogram_entropy(stats.histogram);
  stats.unique = static_cast<std::size_t>(
      std::count_if(stats.histogram.begin(), stats.histogram.end(), [](auto c) { return c > 0; }));
  return stats;
}

EntropyReport entropy_report(std::span<const float> values) {
  if (values.empty()) throw Error(ErrorCode::EmptyInput, "entropy report of no values");
  std::array<std::array<std::uint64_t, 256>, 4> planes{};
  for (float v : values) {
    const auto bits = std::bit_cast<std::uint32_t>(v);
    for (int p = 0; p < 4; ++p) ++planes[p][(bits >> (8 * p)) & 0xFF];
  }
  EntropyReport report;
  std::array<std::uint64_t, 256> all{};
  for (int p = 0; p < 4; ++p) {
    report.plane_bits_per_byte[p] = histogram_entropy(planes[p]);
    for (int b = 0; b < 256; ++b) all[b] += planes[p][b];
  }
  report.total_bits_per_byte = histogram_entropy(all);
  const ExponentStats exp = exponent_stats(values);
  report.exponent_entropy_bits = exp.entropy_bits;
  report.exponent_unique = exp.unique;
  report.exponent_histogram = exp.histogram;
  return report;
}

double concentration_fraction(const AngleMatrix& theta, std::size_t min_tail) {
  // Column j (0-based) is angle k = j + 1, and d - k = cols - j.
  const std::size_t cols = theta.cols();
  std::size_t qualifying = 0;
  for (std::size_t j = 0; j < cols; ++j)
    if (cols - j >= min_tail) ++qualifying;
  if (qualifying == 0 || theta.rows() == 0) {
    throw Error(ErrorCode::NoQualifyingColumns,
                "no angle column has d - k >= " + std::to_string(min_tail) +
                    " (d = " + std::to_string(cols + 1) + ")");
  }
  std::uint64_t hits = 0;
  for (std::size_t i = 0; i < theta.rows(); ++i) {
    const auto row = theta.row(i);
    for (std::size_t j = 0; j < qualifying; ++j)
      if (exponent_field(row[j]) == 127) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(qualifying * theta.rows());
}

ErrorReport reconstruction_errors(const EmbeddingMatrix& x, const EmbeddingMatrix& x_prime,
                                  std::size_t cross_pairs, std::uint64_t seed) {
  if (x.rows() != x_prime.rows() || x.cols() != x_prime.cols()) {
    throw Error(ErrorCode::ShapeMismatch,
                std::to_string(x.rows()) + "x" + std::to_string(x.cols()) + " vs " +
                    std::to_string(x_prime.rows()) + "x" + std::to_string(x_prime.cols()));
  }
  ErrorReport report;
  if (x.size() == 0) return report;

  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = std::abs(static_cast<double>(x.values()[i]) - x_prime.values()[i]);
    report.max_abs = std::max(report.max_abs, e);
    sum += e;
  }
  report.mean_abs = sum / static_cast<double>(x.size());

  auto dot = [](std::span<const float> a, std::span<const float> b) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) s += static_cast<double>(a[j]) * b[j];
    return s;
  };
  for (std::size_t i = 0; i < x.rows(); ++i) {
    report.cos_max_err = std::max(report.cos_max_err, std::abs(dot(x.row(i), x_prime.row(i)) - 1.0));
  }

  if (x.rows() >= 2 && cross_pairs > 0) {
    PhiloxStream rng(seed, 0);
    for (std::size_t k = 0; k < cross_pairs; ++k) {
      const std::size_t a = rng.below(x.rows());
      std::size_t b = rng.below(x.rows() - 1);
      if (b >= a) ++b;
      const double err = std::abs(dot(x.row(a), x.row(b)) - dot(x_prime.row(a), x_prime.row(b)));
      report.cross_pair_max_err = std::max(report.cross_pair_max_err, err);
    }
    report.cross_pairs = cross_pairs;
  }
  return report;
}

ComparisonReport comparison_from_sizes(double raw_bytes, double baseline_bytes,
                                       double spherical_bytes) {
  if (!(baseline_bytes > 0.0) || !(spherical_bytes > 0.0) || !(raw_bytes >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "compressed sizes must be positive");
  }
  ComparisonReport r;
  r.raw_bytes = raw_bytes;
  r.baseline_bytes = baseline_bytes;
  r.spherical_bytes = spherical_bytes;
  r.ratio_baseline = raw_bytes / baseline_bytes;
  r.ratio_spherical = raw_bytes / spherical_bytes;
  r.size_reduction_vs_baseline = 1.0 - spherical_bytes / baseline_bytes;
  r.ratio_gain_vs_baseline = baseline_bytes / spherical_bytes - 1.0;
  return r;
}

ComparisonReport compare_methods(const EmbeddingMatrix& x, CodecOptions opts) {
  opts.mode = Mode::BaselineCartesian;
  const std::size_t baseline = compress(x, opts).size();
  opts.mode = Mode::Spherical;
  const std::size_t spherical = compress(x, opts).size();
  return comparison_from_sizes(4.0 * static_cast<double>(x.size()), static_cast<double>(baseline),
                               static_cast<double>(spherical));
}

}  // namespace sphc
