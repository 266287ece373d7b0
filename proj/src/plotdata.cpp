#include "hoplab/plotdata.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <tuple>

#include "hoplab/dataset.hpp"
#include "hoplab/io.hpp"
#include "hoplab/random.hpp"
#include "hoplab/tsne.hpp"

namespace hoplab {

std::string_view to_token(PlotKind kind) {
  switch (kind) {
    case PlotKind::Profiles: return "profiles";
    case PlotKind::Boxes: return "boxes";
    case PlotKind::Ratio: return "ratio";
    case PlotKind::Coeffs: return "coeffs";
    case PlotKind::Tsne: return "tsne";
  }
  return "?";
}

PlotKind parse_plot_kind(std::string_view token) {
  for (auto k : {PlotKind::Profiles, PlotKind::Boxes, PlotKind::Ratio, PlotKind::Coeffs, PlotKind::Tsne})
    if (to_token(k) == token) return k;
  throw std::invalid_argument("unknown plot kind '" + std::string(token) + "'");
}

double quantile(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw std::invalid_argument("quantile: empty sample");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

void plot_profiles(std::ostream& out, std::span<const HarvestSet> harvests, bool normalize) {
  const LabeledDataset data = dataset_from_harvests(harvests, normalize);
  const std::size_t n = data.dimension();
  const std::size_t k = data.num_classes();
  Matrix sum = Matrix::Zero(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(n));
  Matrix sq = sum;
  const auto counts = data.class_counts();
  for (std::size_t i = 0; i < data.rows(); ++i) {
    const auto c = static_cast<Eigen::Index>(data.labels[i]);
    sum.row(c) += data.profiles.row(static_cast<Eigen::Index>(i));
    sq.row(c) += data.profiles.row(static_cast<Eigen::Index>(i)).cwiseAbs2();
  }
  out << "index";
  for (auto c : data.class_set) out << " mean_" << to_token(c) << " std_" << to_token(c);
  out << '\n';
  for (std::size_t j = 0; j < n; ++j) {
    out << j;
    for (std::size_t c = 0; c < k; ++c) {
      const double m = static_cast<double>(counts[c]);
      const double mean = sum(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(j)) / m;
      const double var = std::max(0.0, sq(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(j)) / m - mean * mean);
      out << ' ' << format_double(mean) << ' ' << format_double(std::sqrt(var));
    }
    out << '\n';
  }
}

void plot_boxes(std::ostream& out, const ResultsTable& table) {
  using Key = std::tuple<std::string, std::string, std::string>;
  std::vector<Key> order;
  std::map<Key, std::vector<double>> cells;
  for (const auto& r : table.rows) {
    if (!r.error.empty()) continue;
    Key key{r.classifier, r.train_variant, r.test_variant};
    auto [it, fresh] = cells.try_emplace(key);
    if (fresh) order.push_back(key);
    it->second.push_back(r.report.macro_f1);
  }
  out << "classifier train test n min whisker_low q1 median q3 whisker_high max mean\n";
  for (const auto& key : order) {
    auto v = cells[key];
    std::sort(v.begin(), v.end());
    const double q1 = quantile(v, 0.25);
    const double q3 = quantile(v, 0.75);
    const double iqr = q3 - q1;
    double lo = v.back();
    double hi = v.front();
    for (double x : v) {
      if (x >= q1 - 1.5 * iqr) lo = std::min(lo, x);
      if (x <= q3 + 1.5 * iqr) hi = std::max(hi, x);
    }
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    out << std::get<0>(key) << ' ' << std::get<1>(key) << ' ' << std::get<2>(key) << ' ' << v.size() << ' '
        << format_double(v.front()) << ' ' << format_double(lo) << ' ' << format_double(q1) << ' '
        << format_double(quantile(v, 0.5)) << ' ' << format_double(q3) << ' ' << format_double(hi) << ' '
        << format_double(v.back()) << ' ' << format_double(mean) << '\n';
  }
}

void plot_ratio(std::ostream& out, std::span<const HarvestSet> harvests, std::size_t k) {
  out << "network class ratio\n";
  for (const auto& h : harvests) {
    const std::size_t kk = k == 0 ? default_ratio_k(h.task_config.dimension) : k;
    for (const auto& item : h.items)
      out << h.network_id << ' ' << to_token(item.label) << ' ' << format_double(stability_ratio(item.profile, kk))
          << '\n';
  }
}

namespace {

void coeff_rows(std::ostream& out, const Matrix& coef, const std::vector<StateClass>& classes) {
  out << "class";
  for (Eigen::Index j = 0; j < coef.cols(); ++j) out << " w" << j;
  out << '\n';
  for (Eigen::Index c = 0; c < coef.rows(); ++c) {
    out << to_token(classes[static_cast<std::size_t>(c)]);
    for (Eigen::Index j = 0; j < coef.cols(); ++j) out << ' ' << format_double(coef(c, j));
    out << '\n';
  }
}

}  // namespace

void plot_coeffs(std::ostream& out, const Model& model, std::size_t top) {
  if (const auto* m = std::get_if<LinearModel>(&model)) {
    coeff_rows(out, m->coef, m->class_set);
  } else if (const auto* m = std::get_if<StabilityRatioModel>(&model)) {
    out << "class coef bias\n";
    for (std::size_t c = 0; c < m->class_set.size(); ++c)
      out << to_token(m->class_set[c]) << ' ' << format_double(m->coef[static_cast<Eigen::Index>(c)]) << ' '
          << format_double(m->bias[static_cast<Eigen::Index>(c)]) << '\n';
  } else if (const auto* m = std::get_if<DamModel>(&model)) {
    const Eigen::Index h = m->memories.rows();
    const Eigen::Index shown = top == 0 ? h : std::min<Eigen::Index>(h, static_cast<Eigen::Index>(top));
    out << "memory output_norm";
    for (auto c : m->class_set) out << " out_" << to_token(c);
    for (Eigen::Index j = 0; j < m->memories.cols(); ++j) out << " w" << j;
    out << '\n';
    for (Eigen::Index r = 0; r < shown; ++r) {
      out << r << ' ' << format_double(m->output.col(r).norm());
      for (Eigen::Index c = 0; c < m->output.rows(); ++c) out << ' ' << format_double(m->output(c, r));
      for (Eigen::Index j = 0; j < m->memories.cols(); ++j) out << ' ' << format_double(m->memories(r, j));
      out << '\n';
    }
  } else {
    throw std::invalid_argument("coeffs: model kind '" + std::string(model_kind(model)) +
                                "' has no per-class coefficients");
  }
}

void plot_tsne(std::ostream& out, std::span<const HarvestSet> harvests, const Model* model,
               const TsnePlotOptions& options) {
  LabeledDataset data = model ? dataset_from_harvests(harvests, options.normalize, model_classes(*model))
                              : dataset_from_harvests(harvests, options.normalize);
  if (data.rows() > options.max_points) {
    // Class-stratified subsample: each class keeps its share, at least one row.
    RandomStream rng(RandomStream::derive(options.seed, {1}));
    std::vector<std::vector<std::size_t>> by_class(data.num_classes());
    for (std::size_t i = 0; i < data.rows(); ++i) by_class[data.labels[i]].push_back(i);
    std::vector<std::size_t> keep;
    for (auto& rows : by_class) {
      if (rows.empty()) continue;
      const double share = static_cast<double>(rows.size()) / static_cast<double>(data.rows());
      const std::size_t take =
          std::min(rows.size(), std::max<std::size_t>(1, static_cast<std::size_t>(share * options.max_points)));
      for (std::size_t i = 0; i < take; ++i) std::swap(rows[i], rows[i + rng.index(rows.size() - i)]);
      keep.insert(keep.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(take));
    }
    std::sort(keep.begin(), keep.end());
    data = subset(data, keep);
  }
  TsneOptions t;
  t.perplexity = options.perplexity;
  t.iterations = options.iterations;
  t.seed = options.seed;
  const TsneResult embedded = tsne(data.profiles, t);
  std::vector<StateClass> predicted;
  if (model) predicted = predict(*model, data);
  out << "x y true" << (model ? " predicted" : "") << '\n';
  for (std::size_t i = 0; i < data.rows(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    out << format_double(embedded.embedding(r, 0)) << ' ' << format_double(embedded.embedding(r, 1)) << ' '
        << to_token(data.label(i));
    if (model) out << ' ' << to_token(predicted[i]);
    out << '\n';
  }
}

}  // namespace hoplab
