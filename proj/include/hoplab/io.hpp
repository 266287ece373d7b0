#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "hoplab/experiments.hpp"
#include "hoplab/harvest.hpp"
#include "hoplab/metrics.hpp"
#include "hoplab/models.hpp"
#include "hoplab/task.hpp"

namespace hoplab {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shortest text that reads back to the same double (17 significant digits).
std::string format_double(double v);
double parse_double(const std::string& s);

/// `key = value` lines; blank lines and lines starting with '#' are skipped.
/// Duplicate keys are an error.
using KeyValues = std::map<std::string, std::string>;
KeyValues read_key_values(std::istream& in);

/// Every TaskConfig field must be present; errors name the missing field.
TaskConfig task_config_from_kv(const KeyValues& kv);
void write_task_config(std::ostream& out, const TaskConfig& c);

/// `experiment` is required. `preset` (desk or paper) selects defaults; the
/// remaining keys override them.
ExperimentSpec experiment_spec_from_kv(const KeyValues& kv);
void write_experiment_spec(std::ostream& out, const ExperimentSpec& spec);

void write_task(std::ostream& out, const PrototypeTask& task);
PrototypeTask read_task(std::istream& in);

void write_harvest(std::ostream& out, const HarvestSet& h);
HarvestSet read_harvest(std::istream& in);

void write_model(std::ostream& out, const Model& m);
Model read_model(std::istream& in);

void write_confusion(std::ostream& out, const ConfusionMatrix& cm);
ConfusionMatrix read_confusion(std::istream& in);

/// Results CSV. Columns, in order:
///   repetition, classifier, train_variant, test_variant, accuracy, micro_f1,
///   macro_f1, macro_f1_present, then for each class token c in
///   (prototype, learned, plain_learned, spurious): precision_c, recall_c, f1_c,
///   support_c, predicted_c (zero when c is not in the class set), then
///   class_set (tokens joined by ';'), train_rows, test_rows, train_seconds,
///   eval_seconds, wall_time, status ("ok" or the error text).
std::string results_header();
std::string results_line(const ResultRow& row);
/// Confusion matrices are not part of the CSV; rows read back carry an empty one.
ResultRow parse_results_line(const std::string& line);
void write_results(std::ostream& out, const ResultsTable& table);
ResultsTable read_results(std::istream& in);

/// One completed grid cell: its result rows and confusion matrices.
void write_cell(std::ostream& out, const std::vector<ResultRow>& rows);
std::vector<ResultRow> read_cell(std::istream& in);

/// Writes to a temporary sibling and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

std::string read_file(const std::filesystem::path& path);

}  // namespace hoplab
