#pragma once

#include <cstdint>
#include <vector>

#include "hoplab/dataset.hpp"

namespace hoplab {

struct TsneOptions {
  double perplexity = 30.0;
  std::size_t iterations = 1000;
  /// 0 selects max(M / early_exaggeration / 4, 50).
  double learning_rate = 0.0;
  double early_exaggeration = 12.0;
  std::size_t exaggeration_iterations = 250;
  double initial_momentum = 0.5;
  double final_momentum = 0.8;
  std::uint64_t seed = 0;
};

struct TsneResult {
  Matrix embedding;  // M × 2
  /// KL(P || Q) after every iteration, exaggeration excluded.
  std::vector<double> kl;
};

/// Exact t-SNE: per-point Gaussian bandwidths matched to the perplexity by
/// bisection, Student-t output affinities, gradient descent with momentum and
/// per-coordinate gains.
TsneResult tsne(const Matrix& x, const TsneOptions& options);

inline Matrix tsne_embed(const Matrix& x, double perplexity, std::size_t iterations, std::uint64_t seed) {
  TsneOptions o;
  o.perplexity = perplexity;
  o.iterations = iterations;
  o.seed = seed;
  return tsne(x, o).embedding;
}

/// Row affinities P_{j|i} with entropy matched to log(perplexity); exposed for
/// tests. Rows sum to one.
Matrix conditional_affinities(const Matrix& sq_distances, double perplexity);

}  // namespace hoplab
