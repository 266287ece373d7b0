#pragma once

#include <span>

#include "hoplab/models.hpp"

namespace hoplab {

struct LogisticOptions {
  double l2 = 1.0;
  /// 0 selects floor(0.1 N).
  std::size_t k = 0;
  std::size_t max_iterations = 10'000;
  double tolerance = 1e-6;
};

/// Stability ratio of every row (rows are sorted profiles).
std::vector<double> ratio_features(const Matrix& profiles, std::size_t k);

/// Objective sum_i s_i CE_i + l2 * sum_c coef_c^2 over parameters packed as
/// (coef_0..coef_{K-1}, bias_0..bias_{K-1}). Writes the gradient if requested.
double logistic_loss(std::span<const double> params, std::span<const double> features,
                     std::span<const std::size_t> labels, std::span<const double> sample_weights,
                     std::size_t num_classes, double l2, std::vector<double>* grad = nullptr);

/// Class-weighted multinomial logistic regression on the stability ratio,
/// solved by damped Newton iterations with backtracking.
StabilityRatioModel train_stability_ratio(const LabeledDataset& data, const LogisticOptions& options = {});

}  // namespace hoplab
