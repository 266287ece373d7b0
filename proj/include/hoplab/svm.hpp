#pragma once

#include <cstdint>
#include <optional>
#include <span>

#include "hoplab/models.hpp"

namespace hoplab {

enum class KernelKind { Linear, Rbf };

struct SvmOptions {
  KernelKind kernel = KernelKind::Linear;
  double C = 0.001;
  /// Unset selects 1 / (N * mean per-feature variance).
  std::optional<double> gamma;
  /// Cap on candidate supports for the RBF kernel (stratified subsample).
  std::size_t max_supports = 1000;
  std::size_t max_iterations = 10'000;
  double tolerance = 1e-6;
  std::uint64_t seed = 0;
};

/// Binary objective sum_d w_d^2 + C * sum_i cost_i * max(0, 1 - y_i (w.x_i + b))^2.
/// Gradient is written to grad_w / grad_b when provided.
double squared_hinge_objective(const Vector& w, double b, const Matrix& x, std::span<const double> y,
                               std::span<const double> cost, double C, Vector* grad_w = nullptr,
                               double* grad_b = nullptr);

struct BinarySvm {
  Vector w;
  double b = 0.0;
  std::size_t iterations = 0;
  double gradient_norm = 0.0;
};

/// Generalized Newton method with backtracking on the binary objective.
BinarySvm train_binary_linear_svm(const Matrix& x, std::span<const double> y,
                                  std::span<const double> cost, double C, std::size_t max_iterations,
                                  double tolerance);

double default_rbf_gamma(const Matrix& profiles);

/// Gaussian kernel matrix exp(-gamma |a_i - b_j|^2).
Matrix rbf_kernel(const Matrix& a, const Matrix& b, double gamma);

/// One-vs-rest machines with class-weighted squared hinge. Linear kernel yields
/// a LinearModel (kind SvmOvr), RBF yields a KernelModel.
Model train_svm(const LabeledDataset& data, const SvmOptions& options);

}  // namespace hoplab
