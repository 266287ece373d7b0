#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hoplab/harvest.hpp"
#include "hoplab/metrics.hpp"
#include "hoplab/models.hpp"
#include "hoplab/task.hpp"

namespace hoplab {

enum class Preset { Desk, Paper };

/// Task parameter varied by an experiment.
enum class VariantAxis { TrainNetworks, Prototypes, BernoulliP, Instances, PlainLearned };

std::string_view to_token(VariantAxis axis);
VariantAxis axis_for_experiment(int experiment_id);

struct ExperimentSpec {
  int experiment_id = 2;
  /// Values along the experiment's axis. For experiment 1 these are the
  /// training-network counts.
  std::vector<double> values;
  /// Experiment 5 tests on a standard prototype-regime variant as well.
  bool include_standard = false;
  TaskConfig base = standard_conditions();
  std::size_t probes = 10'000;
  std::size_t trains_per_variant = 10;
  std::size_t tests_per_variant = 100;
  std::size_t repetitions = 10;
  bool normalize = false;
  /// Tokens accepted by make_classifier; ignored by experiment 1.
  std::vector<std::string> classifiers;
  /// Experiment 1 only: full layer sizes, input first.
  std::vector<std::vector<std::size_t>> architectures;
  std::vector<std::size_t> deep_hidden = {128, 64};
  std::size_t dam_memories = 128;
  LearnRule rule = LearnRule::Hebbian;
  std::uint64_t seed = 0;
  std::size_t threads = 1;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

/// Defaults for an experiment at the given scale.
ExperimentSpec preset_spec(int experiment_id, Preset preset, std::uint64_t seed = 0);

inline const std::vector<std::string> kDefaultRoster = {"stability_ratio", "nn_linear", "svm_linear",
                                                        "svm_rbf"};

/// Dataset variant: a task configuration and its display label.
struct Variant {
  std::string label;
  TaskConfig config;
};

/// Task variants in order, excluding combined. Experiment 1 has a single
/// standard variant.
std::vector<Variant> experiment_variants(const ExperimentSpec& spec);
/// Class set shared by every model of the experiment.
std::vector<StateClass> experiment_classes(const ExperimentSpec& spec);

enum class Role { Train = 0, Test = 1 };

/// Harvest of network `index` in the (variant, role, repetition) pool.
HarvestSet build_network(const ExperimentSpec& spec, std::size_t variant, Role role,
                         std::size_t repetition, std::size_t index);
std::vector<HarvestSet> build_variant_pool(const ExperimentSpec& spec, std::size_t variant, Role role,
                                           std::size_t repetition);
/// Concatenation of every variant's pool.
std::vector<HarvestSet> build_combined(const ExperimentSpec& spec, Role role, std::size_t repetition);

/// Trains the named classifier. Tokens: stability_ratio, nn_linear, nn_deep,
/// svm_linear, svm_rbf, dam, or nn:<sizes joined by '-'>.
Model make_classifier(const std::string& name, const LabeledDataset& data, const ExperimentSpec& spec,
                      std::uint64_t seed);

struct ResultRow {
  std::size_t repetition = 0;
  std::string classifier;
  std::string train_variant;
  std::string test_variant;
  ScoreReport report;
  ConfusionMatrix confusion;
  double train_seconds = 0.0;
  double eval_seconds = 0.0;
  std::size_t train_rows = 0;
  std::size_t test_rows = 0;
  /// Empty on success, otherwise the training or evaluation error.
  std::string error;

  double wall_time() const { return train_seconds + eval_seconds; }
};

struct ResultsTable {
  std::vector<ResultRow> rows;
};

struct RunOptions {
  /// Completed cells are read from and written to this directory when set.
  std::optional<std::filesystem::path> cell_dir;
  std::function<void(const std::string&)> log;
};

ResultsTable run_experiment(const ExperimentSpec& spec, const RunOptions& options = {});

/// Number of rows run_experiment produces.
std::size_t expected_rows(const ExperimentSpec& spec);

}  // namespace hoplab
