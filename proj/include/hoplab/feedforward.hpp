#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "hoplab/models.hpp"
#include "hoplab/random.hpp"

namespace hoplab {

class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dense rectifier network parameters; identity at the output layer.
struct MlpParams {
  std::vector<Matrix> weights;  // (out × in) per layer
  std::vector<Vector> biases;

  std::vector<std::size_t> layer_sizes() const;
  std::size_t parameter_count() const;
  /// Flattened view for gradient checks: all weights row-major, then biases.
  std::vector<double> flatten() const;
  void assign(std::span<const double> flat);
};

/// Glorot-uniform weights, zero biases.
MlpParams init_mlp(std::span<const std::size_t> layer_sizes, RandomStream& rng);

Matrix mlp_forward(const MlpParams& p, const Matrix& x);

/// Class-weighted mean cross-entropy plus lambda * (sum of squared weights).
/// The mean is sum_i s_i CE_i / sum_i s_i. Writes the gradient if requested.
double mlp_loss(const MlpParams& p, const Matrix& x, std::span<const std::size_t> labels,
                std::span<const double> sample_weights, double lambda, MlpParams* grad = nullptr);

struct NnOptions {
  /// Full layer sizes, input first and classes last. Empty means (N, classes).
  std::vector<std::size_t> layer_sizes;
  double lambda = 10.0;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t epochs = 200;
  std::size_t batch_size = 256;
  std::uint64_t seed = 0;
};

/// Adam on shuffled mini-batches with class weights from the dataset.
MlpParams train_mlp(const LabeledDataset& data, const NnOptions& options);

/// (N, classes) yields a LinearModel; deeper stacks yield a DeepModel.
Model train_nn(const LabeledDataset& data, const NnOptions& options);

/// Trains (N, memories, classes) exactly like train_nn. options.layer_sizes is
/// ignored.
DamModel train_dam(const LabeledDataset& data, std::size_t memories, const NnOptions& options);

}  // namespace hoplab
