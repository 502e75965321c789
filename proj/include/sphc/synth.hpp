#pragma once

#include <cstddef>
#include <cstdint>

#include "sphc/matrix.hpp"

namespace sphc {

enum class Distribution { UniformSphere, VonMisesFisher, Orthogonal, Sparse };

struct GenSpec {
  Distribution distribution = Distribution::UniformSphere;
  std::size_t n = 0;
  std::size_t d = 0;
  double kappa = 0.0;         // vMF concentration
  std::size_t clusters = 1;   // vMF mean directions
  double density = 0.1;       // Sparse nonzero fraction
  std::uint64_t seed = 0;
};

/// Rejection attempts allowed per vMF row before NonConvergence.
inline constexpr int kVmfMaxAttempts = 10000;

// All generators emit unit-norm float32 rows and are bit-deterministic per
// seed. Row i draws from Philox stream i, so output never depends on the
// order rows are produced in.
EmbeddingMatrix gen_uniform(std::size_t n, std::size_t d, std::uint64_t seed);
EmbeddingMatrix gen_vmf(std::size_t n, std::size_t d, double kappa, std::size_t clusters,
                        std::uint64_t seed);
EmbeddingMatrix gen_orthogonal(std::size_t n, std::size_t d, std::uint64_t seed);
EmbeddingMatrix gen_sparse(std::size_t n, std::size_t d, double density, std::uint64_t seed);

EmbeddingMatrix generate(const GenSpec& spec);

/// Nonzeros per row used by gen_sparse.
std::size_t sparse_nonzeros(std::size_t d, double density);

}  // namespace sphc
