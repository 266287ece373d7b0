#pragma once

#include <string_view>
#include <variant>
#include <vector>

#include "hoplab/dataset.hpp"

namespace hoplab {

/// Multinomial logistic regression on the scalar stability ratio.
struct StabilityRatioModel {
  std::size_t k = 25;
  std::size_t input_width = 256;
  Vector coef;  // one per class
  Vector bias;
  double l2_strength = 1.0;
  std::vector<StateClass> class_set;
  bool normalized = false;
};

enum class LinearKind { NeuralSoftmax, SvmOvr };

/// One coefficient row per class; scores = coef * x + bias.
struct LinearModel {
  LinearKind kind = LinearKind::NeuralSoftmax;
  Matrix coef;
  Vector bias;
  std::vector<StateClass> class_set;
  bool normalized = false;
};

/// Rectifier network; weights[l] is (layer_sizes[l+1] × layer_sizes[l]).
struct DeepModel {
  std::vector<std::size_t> layer_sizes;
  std::vector<Matrix> weights;
  std::vector<Vector> biases;
  std::vector<StateClass> class_set;
  bool normalized = false;
};

/// One-vs-rest RBF machine: scores_c(x) = sum_s dual(c, s) k(support_s, x) + bias_c.
struct KernelModel {
  Matrix supports;
  Matrix dual;  // classes × supports
  double gamma = 1.0;
  Vector bias;
  std::vector<StateClass> class_set;
  bool normalized = false;
};

/// Single-hidden-layer rectifier network viewed as a dense associative memory.
/// Rows of `memories` are ordered by the L2 norm of their output weights,
/// largest first.
struct DamModel {
  Matrix memories;  // hidden × N
  Vector memory_bias;
  Matrix output;  // classes × hidden
  Vector output_bias;
  std::vector<StateClass> class_set;
  bool normalized = false;
};

using Model = std::variant<StabilityRatioModel, LinearModel, DeepModel, KernelModel, DamModel>;

std::string_view model_kind(const Model& m);
const std::vector<StateClass>& model_classes(const Model& m);
bool model_normalized(const Model& m);
std::size_t model_input_width(const Model& m);

/// Per-class scores, one row per profile. Checks width but not normalization.
Matrix scores(const Model& m, const Matrix& profiles);

/// Argmax of scores; ties go to the earliest class in the model's class set.
std::vector<std::size_t> argmax_rows(const Matrix& s);

/// Predicted class per row. Throws on width or normalization mismatch.
std::vector<StateClass> predict(const Model& m, const LabeledDataset& data);
StateClass predict(const Model& m, const EnergyProfile& profile);

/// Sum of squared parameters excluding biases.
double parameter_sq_norm(const Model& m);

}  // namespace hoplab
