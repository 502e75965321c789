#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "sphc/matrix.hpp"

namespace sphc {

inline constexpr double kDefaultNormTolerance = 1e-3;

/// Reusable per-row buffer for the forward transform.
struct TransformScratch {
  std::vector<double> partial_sq_norms;  // r^2_i = sum_{j>=i} x_j^2, non-increasing in i
};

struct NormReport {
  std::vector<double> norms;
  double max_deviation = 0.0;
  std::size_t violations = 0;
};

// Row kernels. `angles` has x.size() - 1 entries. All intermediate
// arithmetic is binary64; only the stored values are float32.
void to_spherical_row(std::span<const float> x, std::span<float> angles, TransformScratch& scratch);
void from_spherical_row(std::span<const float> angles, std::span<float> x);

/// Cartesian -> spherical. O(n*d) via backward cumulative partial norms.
/// Throws NonFiniteInput, DimensionTooSmall.
AngleMatrix to_spherical(const EmbeddingMatrix& x, unsigned threads = 1);

/// Spherical -> Cartesian. Output has angles.cols() + 1 columns.
EmbeddingMatrix from_spherical(const AngleMatrix& theta, unsigned threads = 1);

/// Dot product of the two unit vectors whose angles are given, computed
/// directly from the angles with the backward recurrence
///   R = cos(t_{d-1} - p_{d-1});  R = cos t_k cos p_k + sin t_k sin p_k R.
double angle_similarity(std::span<const float> theta_row, std::span<const float> phi_row);

/// Validates or renormalizes raw rows. `values` is n*d row-major.
/// Throws NormViolation (renormalize == false) or ZeroNormRow (renormalize == true).
std::pair<EmbeddingMatrix, NormReport> check_norms(std::span<const float> values, std::size_t n,
                                                   std::size_t d,
                                                   double tolerance = kDefaultNormTolerance,
                                                   bool renormalize = false);

}  // namespace sphc
