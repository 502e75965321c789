#include "sphc/transform.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "parallel.hpp"
#include "sincos.hpp"
#include "sphc/error.hpp"

namespace sphc {

namespace {

void require_finite(std::span<const float> values, const char* what) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw Error(ErrorCode::NonFiniteInput,
                  std::string(what) + " contains a non-finite value at flat index " +
                      std::to_string(i));
    }
  }
}

}  // namespace

void to_spherical_row(std::span<const float> x, std::span<float> angles, TransformScratch& scratch) {
  const std::size_t d = x.size();
  auto& r2 = scratch.partial_sq_norms;
  r2.resize(d);
  double acc = 0.0;
  for (std::size_t i = d; i-- > 0;) {
    const double v = x[i];
    acc += v * v;
    r2[i] = acc;
  }
  for (std::size_t i = 0; i + 2 < d; ++i) {
    double theta = std::numbers::pi / 2;
    if (r2[i] > 0.0) {
      const double c = std::clamp(static_cast<double>(x[i]) / std::sqrt(r2[i]), -1.0, 1.0);
      theta = std::acos(c);
    }
    angles[i] = static_cast<float>(theta);
  }
  // atan2(0, 0) == 0 for the all-zero tail.
  angles[d - 2] = static_cast<float>(
      std::atan2(static_cast<double>(x[d - 1]), static_cast<double>(x[d - 2])));
}

void from_spherical_row(std::span<const float> angles, std::span<float> x) {
  const std::size_t d = angles.size() + 1;
  // NaN compares false and so counts as outside.
  int outside = 0;
  for (const float a : angles) outside += std::abs(a) <= 4.0f ? 0 : 1;

  double s = 1.0;
  if (outside == 0) {
    constexpr std::size_t kBlock = 64;
    double sines[kBlock];
    double cosines[kBlock];
    for (std::size_t base = 0; base + 2 < d; base += kBlock) {
      const std::size_t len = std::min(kBlock, d - 2 - base);
      for (std::size_t j = 0; j < len; ++j) detail::sincos_bounded(angles[base + j], sines[j], cosines[j]);
      for (std::size_t j = 0; j < len; ++j) {
        x[base + j] = static_cast<float>(s * cosines[j]);
        s *= sines[j];
      }
    }
    double sl = 0.0;
    double cl = 0.0;
    detail::sincos_bounded(angles[d - 2], sl, cl);
    x[d - 2] = static_cast<float>(s * cl);
    x[d - 1] = static_cast<float>(s * sl);
    return;
  }

  for (std::size_t i = 0; i + 2 < d; ++i) {
    const double theta = angles[i];
    x[i] = static_cast<float>(s * std::cos(theta));
    s *= std::sin(theta);
  }
  const double last = angles[d - 2];
  x[d - 2] = static_cast<float>(s * std::cos(last));
  x[d - 1] = static_cast<float>(s * std::sin(last));
}

AngleMatrix to_spherical(const EmbeddingMatrix& x, unsigned threads) {
  if (x.cols() < 2) {
    throw Error(ErrorCode::DimensionTooSmall,
                "spherical transform needs d >= 2, got d = " + std::to_string(x.cols()));
  }
  require_finite(x.values(), "embedding matrix");
  AngleMatrix theta(x.rows(), x.cols() - 1);
  detail::parallel_for(x.rows(), threads, [&](std::size_t begin, std::size_t end) {
    TransformScratch scratch;
    for (std::size_t i = begin; i < end; ++i) to_spherical_row(x.row(i), theta.row(i), scratch);
  });
  return theta;
}

EmbeddingMatrix from_spherical(const AngleMatrix& theta, unsigned threads) {
  if (theta.cols() < 1) {
    throw Error(ErrorCode::DimensionTooSmall, "angle matrix needs at least one column");
  }
  require_finite(theta.values(), "angle matrix");
  EmbeddingMatrix x(theta.rows(), theta.cols() + 1);
  detail::parallel_for(theta.rows(), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) from_spherical_row(theta.row(i), x.row(i));
  });
  return x;
}

double angle_similarity(std::span<const float> theta_row, std::span<const float> phi_row) {
  if (theta_row.size() != phi_row.size()) {
    throw Error(ErrorCode::LengthMismatch, "angle rows differ in length (" +
                                               std::to_string(theta_row.size()) + " vs " +
                                               std::to_string(phi_row.size()) + ")");
  }
  if (theta_row.empty()) throw Error(ErrorCode::LengthMismatch, "angle rows are empty");

  const std::size_t last = theta_row.size() - 1;
  double r = std::cos(static_cast<double>(theta_row[last]) - static_cast<double>(phi_row[last]));
  for (std::size_t k = last; k-- > 0;) {
    const double t = theta_row[k];
    const double p = phi_row[k];
    r = std::cos(t) * std::cos(p) + std::sin(t) * std::sin(p) * r;
  }
  return r;
}

std::pair<EmbeddingMatrix, NormReport> check_norms(std::span<const float> values, std::size_t n,
                                                   std::size_t d, double tolerance,
                                                   bool renormalize) {
  if (d < 2) {
    throw Error(ErrorCode::DimensionTooSmall, "d must be >= 2, got " + std::to_string(d));
  }
  if (n == 0) throw Error(ErrorCode::EmptyInput, "matrix has no rows");
  if (values.size() != n * d) {
    throw Error(ErrorCode::LengthMismatch, "expected " + std::to_string(n * d) +
                                               " values, got " + std::to_string(values.size()));
  }
  if (!(tolerance > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "norm tolerance must be positive");
  }
  require_finite(values, "input matrix");

  NormReport report;
  report.norms.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double sq = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double v = values[i * d + j];
      sq += v * v;
    }
    const double norm = std::sqrt(sq);
    report.norms[i] = norm;
    const double dev = std::abs(norm - 1.0);
    report.max_deviation = std::max(report.max_deviation, dev);
    if (dev > tolerance) ++report.violations;
  }

  EmbeddingMatrix out(n, d, std::vector<float>(values.begin(), values.end()));
  if (!renormalize) {
    if (report.violations > 0) {
      throw Error(ErrorCode::NormViolation,
                  std::to_string(report.violations) + " row(s) deviate from unit norm by more than " +
                      std::to_string(tolerance) + " (max deviation " +
                      std::to_string(report.max_deviation) + ")");
    }
    return {std::move(out), std::move(report)};
  }

  for (std::size_t i = 0; i < n; ++i) {
    const double norm = report.norms[i];
    if (norm == 0.0) {
      throw Error(ErrorCode::ZeroNormRow, "row " + std::to_string(i) + " is all zeros");
    }
    for (float& v : out.row(i)) v = static_cast<float>(static_cast<double>(v) / norm);
  }
  return {std::move(out), std::move(report)};
}

}  // namespace sphc
