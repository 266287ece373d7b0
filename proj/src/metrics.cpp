#include "hoplab/metrics.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace hoplab {

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t t = 0;
  for (const auto& row : counts)
    for (auto v : row) t += v;
  return t;
}

std::uint64_t ConfusionMatrix::trace() const {
  std::uint64_t t = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) t += counts[i][i];
  return t;
}

ConfusionMatrix confuse(std::span<const StateClass> predictions, std::span<const StateClass> truths,
                        std::vector<StateClass> class_set) {
  if (predictions.size() != truths.size())
    throw std::invalid_argument("confuse: prediction and truth counts differ");
  ConfusionMatrix cm;
  cm.class_set = std::move(class_set);
  const std::size_t k = cm.class_set.size();
  cm.counts.assign(k, std::vector<std::uint64_t>(k, 0));
  auto index_of = [&](StateClass c) {
    auto it = std::find(cm.class_set.begin(), cm.class_set.end(), c);
    if (it == cm.class_set.end())
      throw std::invalid_argument("confuse: label '" + std::string(to_token(c)) + "' outside class set");
    return static_cast<std::size_t>(it - cm.class_set.begin());
  };
  for (std::size_t i = 0; i < truths.size(); ++i) ++cm.counts[index_of(truths[i])][index_of(predictions[i])];
  return cm;
}

ConfusionMatrix confusion_from_counts(std::vector<StateClass> class_set,
                                      std::vector<std::vector<std::uint64_t>> counts) {
  if (counts.size() != class_set.size()) throw std::invalid_argument("confusion_from_counts: row count");
  for (const auto& row : counts)
    if (row.size() != class_set.size()) throw std::invalid_argument("confusion_from_counts: column count");
  return ConfusionMatrix{std::move(class_set), std::move(counts)};
}

ScoreReport score(const ConfusionMatrix& cm) {
  const std::uint64_t total = cm.total();
  if (total == 0) throw std::invalid_argument("score: empty confusion matrix");
  const std::size_t k = cm.class_set.size();
  ScoreReport r;
  r.accuracy = static_cast<double>(cm.trace()) / static_cast<double>(total);
  r.micro_f1 = r.accuracy;
  r.per_class.resize(k);
  double macro = 0.0;
  double present_sum = 0.0;
  std::size_t present = 0;
  for (std::size_t c = 0; c < k; ++c) {
    ClassScore& s = r.per_class[c];
    const std::uint64_t tp = cm.counts[c][c];
    for (std::size_t j = 0; j < k; ++j) {
      s.support += cm.counts[c][j];
      s.predicted += cm.counts[j][c];
    }
    s.precision = s.predicted == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(s.predicted);
    s.recall = s.support == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(s.support);
    s.f1 = (s.precision + s.recall) == 0.0 ? 0.0 : 2.0 * s.precision * s.recall / (s.precision + s.recall);
    macro += s.f1;
    if (s.support > 0 || s.predicted > 0) {
      present_sum += s.f1;
      ++present;
    }
  }
  r.macro_f1 = macro / static_cast<double>(k);
  r.macro_f1_present = present == 0 ? 0.0 : present_sum / static_cast<double>(present);
  return r;
}

}  // namespace hoplab
