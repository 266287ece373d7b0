#include "hoplab/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace hoplab {

std::vector<std::size_t> LabeledDataset::class_counts() const {
  std::vector<std::size_t> counts(class_set.size(), 0);
  for (auto l : labels) ++counts.at(l);
  return counts;
}

void LabeledDataset::validate() const {
  if (rows() == 0) throw std::invalid_argument("dataset: no rows");
  if (labels.size() != rows()) throw std::invalid_argument("dataset: label count differs from row count");
  for (auto l : labels)
    if (l >= class_set.size()) throw std::invalid_argument("dataset: label outside class set");
}

std::vector<StateClass> classes_present(std::span<const HarvestSet> harvests) {
  bool seen[4] = {false, false, false, false};
  for (const auto& h : harvests)
    for (const auto& it : h.items) seen[static_cast<int>(it.label)] = true;
  std::vector<StateClass> out;
  for (auto c : kAllClasses)
    if (seen[static_cast<int>(c)]) out.push_back(c);
  return out;
}

LabeledDataset dataset_from_harvests(std::span<const HarvestSet> harvests, bool normalize) {
  return dataset_from_harvests(harvests, normalize, classes_present(harvests));
}

LabeledDataset dataset_from_harvests(std::span<const HarvestSet> harvests, bool normalize,
                                     std::vector<StateClass> class_set) {
  std::size_t rows = 0;
  std::size_t n = 0;
  for (const auto& h : harvests) {
    for (const auto& it : h.items) {
      if (n == 0) n = it.profile.size();
      if (it.profile.size() != n) throw DimensionMismatch("dataset: inconsistent profile length");
      ++rows;
    }
  }
  LabeledDataset d;
  d.class_set = std::move(class_set);
  d.normalized = normalize;
  d.profiles.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(n));
  d.labels.reserve(rows);
  std::size_t r = 0;
  for (const auto& h : harvests) {
    for (const auto& it : h.items) {
      if (!normalize && it.profile.normalized != d.normalized) {
        if (r > 0) throw std::invalid_argument("dataset: normalized and raw profiles mixed");
        d.normalized = true;
      }
      auto pos = std::find(d.class_set.begin(), d.class_set.end(), it.label);
      if (pos == d.class_set.end())
        throw std::invalid_argument("dataset: label '" + std::string(to_token(it.label)) +
                                    "' outside class set");
      const EnergyProfile p = normalize && !it.profile.normalized ? normalize_profile(it.profile) : it.profile;
      for (std::size_t j = 0; j < n; ++j)
        d.profiles(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = p.values[j];
      d.labels.push_back(static_cast<std::size_t>(pos - d.class_set.begin()));
      ++r;
    }
  }
  return d;
}

LabeledDataset subset(const LabeledDataset& data, std::span<const std::size_t> rows) {
  LabeledDataset out;
  out.class_set = data.class_set;
  out.normalized = data.normalized;
  out.profiles.resize(static_cast<Eigen::Index>(rows.size()), data.profiles.cols());
  out.labels.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.profiles.row(static_cast<Eigen::Index>(i)) = data.profiles.row(static_cast<Eigen::Index>(rows[i]));
    out.labels.push_back(data.labels.at(rows[i]));
  }
  return out;
}

std::vector<double> ClassWeights::per_row(const LabeledDataset& data) const {
  std::vector<double> w(data.rows());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = weights.at(data.labels[i]);
  return w;
}

ClassWeights class_weights(const LabeledDataset& data) {
  data.validate();
  const auto counts = data.class_counts();
  if (counts.size() < 2) throw std::invalid_argument("class_weights: need at least two classes");
  ClassWeights cw;
  const double m = static_cast<double>(data.rows());
  const double k = static_cast<double>(counts.size());
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (counts[c] == 0)
      throw std::invalid_argument("class_weights: class '" + std::string(to_token(data.class_set[c])) +
                                  "' has no items");
    cw.weights.push_back(m / (k * static_cast<double>(counts[c])));
  }
  return cw;
}

std::size_t default_ratio_k(std::size_t n) {
  return std::max<std::size_t>(1, n / 10);
}

double stability_ratio(std::span<const double> sorted_profile, std::size_t k) {
  const std::size_t n = sorted_profile.size();
  if (k == 0 || 2 * k > n)
    throw std::invalid_argument("stability_ratio: k=" + std::to_string(k) + " out of range for N=" +
                                std::to_string(n));
  double low = 0.0;
  double high = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    low += sorted_profile[i];
    high += sorted_profile[n - 1 - i];
  }
  if (std::abs(high) < kRatioEpsilon) high = std::signbit(high) ? -kRatioEpsilon : kRatioEpsilon;
  return low / high;
}

}  // namespace hoplab
