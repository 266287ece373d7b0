#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>

#include "hoplab/experiments.hpp"
#include "hoplab/harvest.hpp"
#include "hoplab/models.hpp"

namespace hoplab {

enum class PlotKind { Profiles, Boxes, Ratio, Coeffs, Tsne };

std::string_view to_token(PlotKind kind);
PlotKind parse_plot_kind(std::string_view token);

/// Whitespace-separated tables with a header line.

/// Per-class mean and standard deviation at every sorted index.
void plot_profiles(std::ostream& out, std::span<const HarvestSet> harvests, bool normalize);

/// Five-number summary of macro F1 per (classifier, train, test) cell. Whiskers
/// reach the most extreme values within 1.5 IQR of the quartiles.
void plot_boxes(std::ostream& out, const ResultsTable& table);

/// Stability ratio of every state with its class.
void plot_ratio(std::ostream& out, std::span<const HarvestSet> harvests, std::size_t k);

/// Coefficient rows per class for linear models, memory vectors with their
/// output weights for DAM models, ratio coefficients for the ratio model.
void plot_coeffs(std::ostream& out, const Model& model, std::size_t top = 0);

struct TsnePlotOptions {
  double perplexity = 30.0;
  std::size_t iterations = 1000;
  std::size_t max_points = 2000;
  std::uint64_t seed = 0;
  bool normalize = false;
};

/// Embeds a class-stratified subsample and writes x, y, true class and, with a
/// model, the predicted class.
void plot_tsne(std::ostream& out, std::span<const HarvestSet> harvests, const Model* model,
               const TsnePlotOptions& options);

/// Quantile with linear interpolation between order statistics.
double quantile(std::span<const double> sorted, double q);

}  // namespace hoplab
