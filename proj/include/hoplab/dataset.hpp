#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "hoplab/harvest.hpp"

namespace hoplab {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// M labeled energy profiles. labels[i] indexes class_set.
struct LabeledDataset {
  Matrix profiles;
  std::vector<std::size_t> labels;
  std::vector<StateClass> class_set;
  bool normalized = false;

  std::size_t rows() const { return static_cast<std::size_t>(profiles.rows()); }
  std::size_t dimension() const { return static_cast<std::size_t>(profiles.cols()); }
  std::size_t num_classes() const { return class_set.size(); }
  StateClass label(std::size_t i) const { return class_set[labels[i]]; }
  std::vector<std::size_t> class_counts() const;

  /// Throws if the dataset is empty or a label is out of range.
  void validate() const;
};

/// Canonical order (Prototype, Learned, PlainLearned, Spurious) of the classes
/// that occur in the harvests.
std::vector<StateClass> classes_present(std::span<const HarvestSet> harvests);

/// Stacks harvest items into a dataset. With an explicit class_set, items of
/// other classes are an error. Profiles that are already normalized pass
/// through unchanged; mixing them with raw profiles requires `normalize`.
LabeledDataset dataset_from_harvests(std::span<const HarvestSet> harvests, bool normalize);
LabeledDataset dataset_from_harvests(std::span<const HarvestSet> harvests, bool normalize,
                                     std::vector<StateClass> class_set);

/// Rows selected by index, labels and class set preserved.
LabeledDataset subset(const LabeledDataset& data, std::span<const std::size_t> rows);

/// Per-class sample weights M / (|classes| * count_c).
struct ClassWeights {
  std::vector<double> weights;

  /// Weight of each dataset row according to its label.
  std::vector<double> per_row(const LabeledDataset& data) const;
};

ClassWeights class_weights(const LabeledDataset& data);

/// Largest k not exceeding 0.1 N (at least 1).
std::size_t default_ratio_k(std::size_t n);

inline constexpr double kRatioEpsilon = 1e-12;

/// Sum of the k smallest entries over the sum of the k largest. Expects an
/// ascending profile. The denominator is clamped away from zero, keeping its
/// sign.
double stability_ratio(std::span<const double> sorted_profile, std::size_t k);
inline double stability_ratio(const EnergyProfile& p, std::size_t k) {
  return stability_ratio(p.values, k);
}

}  // namespace hoplab
