#include "sphc/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "sphc/error.hpp"
#include "sphc/random.hpp"

namespace sphc {

namespace {

// Streams at or above this id are reserved for per-matrix draws (vMF means,
// orthogonal basis) so they never collide with per-row streams.
constexpr std::uint64_t kSharedStreamBase = std::uint64_t{1} << 63;

void check_shape(std::size_t n, std::size_t d) {
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "n must be >= 1");
  if (d < 2) throw Error(ErrorCode::DimensionTooSmall, "d must be >= 2, got " + std::to_string(d));
}

void fill_normal(PhiloxStream& rng, std::span<double> out) {
  for (double& v : out) v = rng.normal();
}

double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

void store_unit(std::span<const double> v, std::span<float> out) {
  const double norm = norm2(v);
  for (std::size_t j = 0; j < v.size(); ++j) out[j] = static_cast<float>(v[j] / norm);
}

/// Radial component w = <x, mu> of a vMF sample (Wood, 1994).
double sample_vmf_radial(PhiloxStream& rng, std::size_t d, double kappa) {
  const double m1 = static_cast<double>(d) - 1.0;
  // b = (-2k + sqrt(4k^2 + m1^2)) / m1, written without cancellation.
  const double b = m1 / (2.0 * kappa + std::sqrt(4.0 * kappa * kappa + m1 * m1));
  const double x0 = (1.0 - b) / (1.0 + b);
  const double c = kappa * x0 + m1 * std::log(1.0 - x0 * x0);
  for (int attempt = 0; attempt < kVmfMaxAttempts; ++attempt) {
    const double z = rng.beta(m1 / 2.0, m1 / 2.0);
    const double w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z);
    const double u = rng.uniform_open();
    if (kappa * w + m1 * std::log(1.0 - x0 * w) - c >= std::log(u)) return w;
  }
  throw Error(ErrorCode::NonConvergence, "vMF radial sampler exceeded " +
                                             std::to_string(kVmfMaxAttempts) + " attempts");
}

}  // namespace

EmbeddingMatrix gen_uniform(std::size_t n, std::size_t d, std::uint64_t seed) {
  check_shape(n, d);
  EmbeddingMatrix x(n, d);
  std::vector<double> g(d);
  for (std::size_t i = 0; i < n; ++i) {
    PhiloxStream rng(seed, i);
    fill_normal(rng, g);
    store_unit(g, x.row(i));
  }
  return x;
}

EmbeddingMatrix gen_vmf(std::size_t n, std::size_t d, double kappa, std::size_t clusters,
                        std::uint64_t seed) {
  check_shape(n, d);
  if (!(kappa >= 0.0) || !std::isfinite(kappa)) {
    throw Error(ErrorCode::InvalidArgument, "kappa must be finite and >= 0");
  }
  if (clusters == 0) throw Error(ErrorCode::InvalidArgument, "clusters must be >= 1");

  std::vector<std::vector<double>> means(clusters, std::vector<double>(d));
  for (std::size_t c = 0; c < clusters; ++c) {
    PhiloxStream rng(seed, kSharedStreamBase + c);
    fill_normal(rng, means[c]);
    const double norm = norm2(means[c]);
    for (double& v : means[c]) v /= norm;
  }

  EmbeddingMatrix x(n, d);
  std::vector<double> tangent(d);
  std::vector<double> row(d);
  for (std::size_t i = 0; i < n; ++i) {
    const std::vector<double>& mu = means[i % clusters];
    PhiloxStream rng(seed, i);
    const double w = sample_vmf_radial(rng, d, kappa);

    double proj = 0.0;
    do {
      fill_normal(rng, tangent);
      proj = std::inner_product(tangent.begin(), tangent.end(), mu.begin(), 0.0);
      for (std::size_t j = 0; j < d; ++j) tangent[j] -= proj * mu[j];
    } while (norm2(tangent) == 0.0);
    const double tnorm = norm2(tangent);

    const double radial = std::sqrt(std::max(0.0, 1.0 - w * w));
    for (std::size_t j = 0; j < d; ++j) row[j] = w * mu[j] + radial * tangent[j] / tnorm;
    store_unit(row, x.row(i));
  }
  return x;
}

EmbeddingMatrix gen_orthogonal(std::size_t n, std::size_t d, std::uint64_t seed) {
  check_shape(n, d);
  if (n > d) {
    throw Error(ErrorCode::TooManyRows, "cannot draw " + std::to_string(n) +
                                            " orthonormal rows in dimension " + std::to_string(d));
  }
  std::vector<std::vector<double>> basis;
  basis.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    PhiloxStream rng(seed, i);
    std::vector<double> v(d);
    for (;;) {
      fill_normal(rng, v);
      // Modified Gram-Schmidt, applied twice for orthogonality to working precision.
      for (int pass = 0; pass < 2; ++pass) {
        for (const auto& q : basis) {
          const double dot = std::inner_product(v.begin(), v.end(), q.begin(), 0.0);
          for (std::size_t j = 0; j < d; ++j) v[j] -= dot * q[j];
        }
      }
      const double norm = norm2(v);
      if (norm > 1e-8) {
        for (double& e : v) e /= norm;
        break;
      }
    }
    basis.push_back(std::move(v));
  }
  EmbeddingMatrix x(n, d);
  for (std::size_t i = 0; i < n; ++i) store_unit(basis[i], x.row(i));
  return x;
}

std::size_t sparse_nonzeros(std::size_t d, double density) {
  const double want = std::ceil(density * static_cast<double>(d) - 1e-9);
  return std::clamp<std::size_t>(static_cast<std::size_t>(std::max(want, 1.0)), 1, d);
}

EmbeddingMatrix gen_sparse(std::size_t n, std::size_t d, double density, std::uint64_t seed) {
  check_shape(n, d);
  if (!(density > 0.0 && density <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "density must be in (0, 1]");
  }
  const std::size_t k = sparse_nonzeros(d, density);
  EmbeddingMatrix x(n, d);
  std::vector<std::size_t> index(d);
  std::vector<double> row(d);
  for (std::size_t i = 0; i < n; ++i) {
    PhiloxStream rng(seed, i);
    std::iota(index.begin(), index.end(), std::size_t{0});
    for (std::size_t j = 0; j < k; ++j) {
      std::swap(index[j], index[j + rng.below(d - j)]);
    }
    std::fill(row.begin(), row.end(), 0.0);
    double norm = 0.0;
    do {
      for (std::size_t j = 0; j < k; ++j) row[index[j]] = rng.normal();
      norm = norm2(row);
    } while (norm == 0.0);
    store_unit(row, x.row(i));
  }
  return x;
}

EmbeddingMatrix generate(const GenSpec& spec) {
  switch (spec.distribution) {
    case Distribution::UniformSphere: return gen_uniform(spec.n, spec.d, spec.seed);
    case Distribution::VonMisesFisher:
      return gen_vmf(spec.n, spec.d, spec.kappa, spec.clusters, spec.seed);
    case Distribution::Orthogonal: return gen_orthogonal(spec.n, spec.d, spec.seed);
    case Distribution::Sparse: return gen_sparse(spec.n, spec.d, spec.density, spec.seed);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown distribution");
}

}  // namespace sphc
