#include "hoplab/models.hpp"

#include <stdexcept>
#include <string>

#include "hoplab/logistic.hpp"
#include "hoplab/svm.hpp"

namespace hoplab {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

Matrix affine(const Matrix& x, const Matrix& coef, const Vector& bias) {
  Matrix s = x * coef.transpose();
  s.rowwise() += bias.transpose();
  return s;
}

}  // namespace

std::string_view model_kind(const Model& m) {
  return std::visit(overloaded{
                        [](const StabilityRatioModel&) -> std::string_view { return "stability_ratio"; },
                        [](const LinearModel& lm) -> std::string_view {
                          return lm.kind == LinearKind::NeuralSoftmax ? "nn_linear" : "svm_linear";
                        },
                        [](const DeepModel&) -> std::string_view { return "nn_deep"; },
                        [](const KernelModel&) -> std::string_view { return "svm_rbf"; },
                        [](const DamModel&) -> std::string_view { return "dam"; },
                    },
                    m);
}

const std::vector<StateClass>& model_classes(const Model& m) {
  return std::visit([](const auto& x) -> const std::vector<StateClass>& { return x.class_set; }, m);
}

bool model_normalized(const Model& m) {
  return std::visit([](const auto& x) { return x.normalized; }, m);
}

std::size_t model_input_width(const Model& m) {
  return std::visit(overloaded{
                        [](const StabilityRatioModel& x) { return x.input_width; },
                        [](const LinearModel& x) { return static_cast<std::size_t>(x.coef.cols()); },
                        [](const DeepModel& x) { return x.layer_sizes.front(); },
                        [](const KernelModel& x) { return static_cast<std::size_t>(x.supports.cols()); },
                        [](const DamModel& x) { return static_cast<std::size_t>(x.memories.cols()); },
                    },
                    m);
}

Matrix scores(const Model& m, const Matrix& profiles) {
  const std::size_t width = model_input_width(m);
  if (static_cast<std::size_t>(profiles.cols()) != width)
    throw DimensionMismatch("predict: profile width " + std::to_string(profiles.cols()) +
                            " differs from model input width " + std::to_string(width));
  return std::visit(
      overloaded{
          [&](const StabilityRatioModel& x) {
            const auto f = ratio_features(profiles, x.k);
            Matrix s(profiles.rows(), x.coef.size());
            for (Eigen::Index i = 0; i < s.rows(); ++i)
              s.row(i) = (x.coef * f[static_cast<std::size_t>(i)] + x.bias).transpose();
            return s;
          },
          [&](const LinearModel& x) { return affine(profiles, x.coef, x.bias); },
          [&](const DeepModel& x) {
            Matrix a = profiles;
            for (std::size_t l = 0; l < x.weights.size(); ++l) {
              a = affine(a, x.weights[l], x.biases[l]);
              if (l + 1 < x.weights.size()) a = a.cwiseMax(0.0);
            }
            return a;
          },
          [&](const KernelModel& x) {
            Matrix s(profiles.rows(), x.dual.rows());
            constexpr Eigen::Index kChunk = 4096;
            for (Eigen::Index start = 0; start < profiles.rows(); start += kChunk) {
              const Eigen::Index len = std::min(kChunk, profiles.rows() - start);
              const Matrix block = profiles.middleRows(start, len);
              s.middleRows(start, len) = affine(rbf_kernel(block, x.supports, x.gamma), x.dual, x.bias);
            }
            return s;
          },
          [&](const DamModel& x) {
            Matrix hidden = affine(profiles, x.memories, x.memory_bias).cwiseMax(0.0);
            return affine(hidden, x.output, x.output_bias);
          },
      },
      m);
}

std::vector<std::size_t> argmax_rows(const Matrix& s) {
  std::vector<std::size_t> out(static_cast<std::size_t>(s.rows()));
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < s.cols(); ++c)
      if (s(i, c) > s(i, best)) best = c;
    out[static_cast<std::size_t>(i)] = static_cast<std::size_t>(best);
  }
  return out;
}

std::vector<StateClass> predict(const Model& m, const LabeledDataset& data) {
  if (data.normalized != model_normalized(m))
    throw std::invalid_argument(std::string("predict: profiles are ") +
                                (data.normalized ? "normalized" : "not normalized") + " but the model was trained " +
                                (model_normalized(m) ? "on normalized" : "on raw") + " profiles");
  const auto idx = argmax_rows(scores(m, data.profiles));
  const auto& classes = model_classes(m);
  std::vector<StateClass> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(classes[i]);
  return out;
}

StateClass predict(const Model& m, const EnergyProfile& profile) {
  LabeledDataset one;
  one.normalized = profile.normalized;
  one.profiles.resize(1, static_cast<Eigen::Index>(profile.size()));
  for (std::size_t j = 0; j < profile.size(); ++j) one.profiles(0, static_cast<Eigen::Index>(j)) = profile.values[j];
  return predict(m, one).front();
}

double parameter_sq_norm(const Model& m) {
  return std::visit(overloaded{
                        [](const StabilityRatioModel& x) { return x.coef.squaredNorm(); },
                        [](const LinearModel& x) { return x.coef.squaredNorm(); },
                        [](const DeepModel& x) {
                          double s = 0.0;
                          for (const auto& w : x.weights) s += w.squaredNorm();
                          return s;
                        },
                        [](const KernelModel& x) {
                          // RKHS norm: sum_c beta_c^T K beta_c.
                          const Matrix k = rbf_kernel(x.supports, x.supports, x.gamma);
                          return (x.dual * k * x.dual.transpose()).trace();
                        },
                        [](const DamModel& x) { return x.memories.squaredNorm() + x.output.squaredNorm(); },
                    },
                    m);
}

}  // namespace hoplab
