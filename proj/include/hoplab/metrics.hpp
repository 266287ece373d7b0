#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hoplab/harvest.hpp"

namespace hoplab {

/// Rows are true classes, columns predicted classes, both in class_set order.
struct ConfusionMatrix {
  std::vector<StateClass> class_set;
  std::vector<std::vector<std::uint64_t>> counts;

  std::uint64_t total() const;
  std::uint64_t trace() const;
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

struct ClassScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::uint64_t support = 0;
  std::uint64_t predicted = 0;
};

struct ScoreReport {
  double accuracy = 0.0;
  double micro_f1 = 0.0;
  /// Mean over every class in the class set; absent classes score 0.
  double macro_f1 = 0.0;
  /// Mean over classes that occur among truths or predictions.
  double macro_f1_present = 0.0;
  std::vector<ClassScore> per_class;
};

ConfusionMatrix confuse(std::span<const StateClass> predictions, std::span<const StateClass> truths,
                        std::vector<StateClass> class_set);

/// Builds a matrix directly from counts; used for published tables.
ConfusionMatrix confusion_from_counts(std::vector<StateClass> class_set,
                                      std::vector<std::vector<std::uint64_t>> counts);

ScoreReport score(const ConfusionMatrix& cm);

}  // namespace hoplab
