// hoplab command-line driver.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "hoplab/experiments.hpp"
#include "hoplab/feedforward.hpp"
#include "hoplab/io.hpp"
#include "hoplab/logistic.hpp"
#include "hoplab/parallel.hpp"
#include "hoplab/plotdata.hpp"
#include "hoplab/svm.hpp"

namespace fs = std::filesystem;
using namespace hoplab;

namespace {

struct Globals {
  std::optional<std::uint64_t> seed;
  std::string preset = "desk";
  bool normalize = false;
  std::size_t threads = 0;

  Preset preset_value() const { return preset == "paper" ? Preset::Paper : Preset::Desk; }
  std::size_t thread_count() const { return threads == 0 ? default_threads() : threads; }
};

std::vector<HarvestSet> load_harvests(const std::vector<std::string>& paths) {
  std::vector<HarvestSet> out;
  for (const auto& p : paths) {
    std::istringstream in(read_file(p));
    try {
      out.push_back(read_harvest(in));
    } catch (const FormatError& e) {
      throw FormatError(p + ": " + e.what());
    }
  }
  return out;
}

Model load_model(const std::string& path) {
  std::istringstream in(read_file(path));
  try {
    return read_model(in);
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  }
}

template <typename Fn>
void write_to(const std::string& path, Fn&& fn) {
  std::ostringstream out;
  fn(out);
  write_file_atomic(path, out.str());
}

int cmd_synth(const Globals& g, const std::string& config_path, const std::string& output) {
  std::ifstream in(config_path);
  if (!in) throw std::runtime_error("cannot read " + config_path);
  KeyValues kv = read_key_values(in);
  if (g.seed) kv["seed"] = std::to_string(*g.seed);
  const TaskConfig config = task_config_from_kv(kv);
  const PrototypeTask task = build_task(config);
  write_to(output, [&](std::ostream& out) { write_task(out, task); });
  std::cout << "task: " << task.prototypes.size() << " prototypes, " << task.learned.size()
            << " learned states\n";
  return 0;
}

int cmd_harvest(const Globals& g, const std::string& task_path, std::optional<std::size_t> probes,
                const std::string& rule, const std::string& output) {
  std::istringstream in(read_file(task_path));
  const PrototypeTask task = read_task(in);
  HarvestOptions options;
  options.rule = parse_learn_rule(rule);
  options.threads = g.thread_count();
  const std::size_t n = probes ? *probes : (g.preset_value() == Preset::Paper ? 10'000 : 2000);
  HarvestSet h = harvest(task, n, RandomStream(g.seed.value_or(0)), options);
  if (g.normalize)
    for (auto& item : h.items) item.profile = normalize_profile(item.profile);
  write_to(output, [&](std::ostream& out) { write_harvest(out, h); });
  const ProbeStats& s = h.stats;
  std::cout << "probes " << s.probes << "\nspurious_found " << s.spurious_unique << "\nspurious_hits "
            << s.spurious_hits << "\nprototype_hits " << s.prototype_hits << "\nlearned_hits " << s.learned_hits
            << "\nnegated_matches " << s.negated_hits << "\ncapped " << s.capped << "\nmean_flips "
            << s.mean_flips() << "\nrows " << h.items.size() << '\n';
  return 0;
}

struct TrainArgs {
  std::string kind;
  std::vector<std::string> profiles;
  std::string output;
  std::string layers;
  std::size_t memories = 128;
  double lambda = 10.0;
  double learning_rate = 1e-3;
  std::size_t epochs = 200;
  double C = 0.001;
  std::optional<double> gamma;
  double l2 = 1.0;
};

std::vector<std::size_t> parse_layers(const std::string& s) {
  std::vector<std::size_t> out;
  std::stringstream in(s);
  std::string part;
  while (std::getline(in, part, '-')) out.push_back(std::stoul(part));
  return out;
}

int cmd_train(const Globals& g, const TrainArgs& a) {
  const auto harvests = load_harvests(a.profiles);
  const LabeledDataset data = dataset_from_harvests(harvests, g.normalize);
  const std::uint64_t seed = g.seed.value_or(0);
  Model model;
  NnOptions nn;
  nn.seed = seed;
  nn.lambda = a.lambda;
  nn.learning_rate = a.learning_rate;
  nn.epochs = a.epochs;
  if (a.kind == "stability_ratio") {
    LogisticOptions o;
    o.l2 = a.l2;
    model = train_stability_ratio(data, o);
  } else if (a.kind == "nn_linear" || a.kind == "nn_deep") {
    if (!a.layers.empty()) nn.layer_sizes = parse_layers(a.layers);
    else if (a.kind == "nn_deep") nn.layer_sizes = {data.dimension(), 128, 64, data.num_classes()};
    model = train_nn(data, nn);
  } else if (a.kind == "svm_linear" || a.kind == "svm_rbf") {
    SvmOptions o;
    o.kernel = a.kind == "svm_rbf" ? KernelKind::Rbf : KernelKind::Linear;
    o.C = a.C;
    o.gamma = a.gamma;
    o.seed = seed;
    model = train_svm(data, o);
  } else if (a.kind == "dam") {
    model = train_dam(data, a.memories, nn);
  } else {
    throw std::invalid_argument("unknown model kind '" + a.kind + "'");
  }
  write_to(a.output, [&](std::ostream& out) { write_model(out, model); });
  std::cout << "trained " << model_kind(model) << " on " << data.rows() << " profiles\n";
  return 0;
}

int cmd_eval(const Globals& g, const std::string& model_path, const std::vector<std::string>& profiles,
             const std::string& report, const std::string& confusion_path) {
  const Model model = load_model(model_path);
  const auto harvests = load_harvests(profiles);
  const LabeledDataset data = dataset_from_harvests(harvests, g.normalize, model_classes(model));
  const auto preds = predict(model, data);
  std::vector<StateClass> truths(data.rows());
  for (std::size_t i = 0; i < data.rows(); ++i) truths[i] = data.label(i);
  ResultRow row;
  row.classifier = std::string(model_kind(model));
  row.train_variant = fs::path(model_path).filename().string();
  row.test_variant = "eval";
  row.confusion = confuse(preds, truths, model_classes(model));
  row.report = score(row.confusion);
  row.test_rows = data.rows();
  ResultsTable table;
  table.rows.push_back(row);
  write_to(report, [&](std::ostream& out) { write_results(out, table); });
  if (!confusion_path.empty())
    write_to(confusion_path, [&](std::ostream& out) { write_confusion(out, row.confusion); });
  std::cout << "accuracy " << row.report.accuracy << "\nmacro_f1 " << row.report.macro_f1 << '\n';
  return 0;
}

int cmd_experiment(const Globals& g, const std::string& spec_path, const std::string& outdir) {
  std::ifstream in(spec_path);
  if (!in) throw std::runtime_error("cannot read " + spec_path);
  KeyValues kv = read_key_values(in);
  if (!kv.count("preset")) kv["preset"] = g.preset;
  if (g.seed) kv["seed"] = std::to_string(*g.seed);
  if (g.normalize) kv["normalize"] = "1";
  ExperimentSpec spec = experiment_spec_from_kv(kv);
  if (!kv.count("threads") || g.threads != 0) spec.threads = g.thread_count();

  const fs::path dir(outdir);
  fs::create_directories(dir / "confusion");
  write_to((dir / "spec.txt").string(), [&](std::ostream& out) { write_experiment_spec(out, spec); });
  RunOptions options;
  options.cell_dir = dir / "cells";
  options.log = [](const std::string& msg) { std::cerr << msg << '\n'; };
  const ResultsTable table = run_experiment(spec, options);
  for (const auto& row : table.rows) {
    std::string name = "rep" + std::to_string(row.repetition) + "__" + row.classifier + "__" + row.train_variant +
                       "__" + row.test_variant;
    for (char& c : name)
      if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.')) c = '_';
    write_to((dir / "confusion" / (name + ".txt")).string(),
             [&](std::ostream& out) { write_confusion(out, row.confusion); });
  }
  write_to((dir / "results.csv").string(), [&](std::ostream& out) { write_results(out, table); });
  std::size_t failed = 0;
  for (const auto& row : table.rows) failed += row.error.empty() ? 0 : 1;
  std::cout << "rows " << table.rows.size() << "\nfailed " << failed << '\n';
  return 0;
}

struct PlotArgs {
  std::string kind;
  std::vector<std::string> inputs;
  std::string output;
  std::string model;
  std::size_t top = 0;
  std::size_t k = 0;
  double perplexity = 30.0;
  std::size_t iterations = 1000;
  std::size_t max_points = 2000;
};

int cmd_plotdata(const Globals& g, const PlotArgs& a) {
  const PlotKind kind = parse_plot_kind(a.kind);
  write_to(a.output, [&](std::ostream& out) {
    switch (kind) {
      case PlotKind::Profiles: plot_profiles(out, load_harvests(a.inputs), g.normalize); break;
      case PlotKind::Ratio: plot_ratio(out, load_harvests(a.inputs), a.k); break;
      case PlotKind::Boxes: {
        ResultsTable all;
        for (const auto& p : a.inputs) {
          std::istringstream in(read_file(p));
          auto t = read_results(in);
          all.rows.insert(all.rows.end(), t.rows.begin(), t.rows.end());
        }
        plot_boxes(out, all);
        break;
      }
      case PlotKind::Coeffs:
        if (a.inputs.size() != 1) throw std::invalid_argument("coeffs: expects exactly one model file");
        plot_coeffs(out, load_model(a.inputs[0]), a.top);
        break;
      case PlotKind::Tsne: {
        TsnePlotOptions o;
        o.perplexity = a.perplexity;
        o.iterations = a.iterations;
        o.max_points = a.max_points;
        o.seed = g.seed.value_or(0);
        o.normalize = g.normalize;
        std::optional<Model> model;
        if (!a.model.empty()) model = load_model(a.model);
        plot_tsne(out, load_harvests(a.inputs), model ? &*model : nullptr, o);
        break;
      }
    }
  });
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hopfield state classification laboratory"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "Random seed");
  app.add_option("--preset", g.preset, "Experiment scale")->check(CLI::IsMember({"desk", "paper"}));
  app.add_flag("--normalize", g.normalize, "Min-max normalize energy profiles to [-1, 1]");
  app.add_option("--threads", g.threads, "Worker threads (0 = all cores)");

  std::function<int()> run;

  auto* synth = app.add_subcommand("synth", "Generate a prototype task from a config file");
  std::string synth_config, synth_out;
  synth->add_option("config", synth_config)->required();
  synth->add_option("output", synth_out)->required();
  synth->callback([&] { run = [&] { return cmd_synth(g, synth_config, synth_out); }; });

  auto* harv = app.add_subcommand("harvest", "Train a network on a task and harvest energy profiles");
  std::string harv_task, harv_out, harv_rule = "hebbian";
  std::optional<std::size_t> harv_probes;
  harv->add_option("task", harv_task)->required();
  harv->add_option("output", harv_out)->required();
  harv->add_option("--probes", harv_probes, "Random probes (default: 2000 desk, 10000 paper)");
  harv->add_option("--rule", harv_rule)->check(CLI::IsMember({"hebbian", "thermal"}));
  harv->callback([&] { run = [&] { return cmd_harvest(g, harv_task, harv_probes, harv_rule, harv_out); }; });

  auto* train = app.add_subcommand("train", "Train a classifier on profile files");
  TrainArgs ta;
  train->add_option("--model", ta.kind, "stability_ratio|nn_linear|nn_deep|svm_linear|svm_rbf|dam")->required();
  train->add_option("-o,--output", ta.output)->required();
  train->add_option("profiles", ta.profiles)->required();
  train->add_option("--layers", ta.layers, "Layer sizes joined by '-', e.g. 256-64-3");
  train->add_option("--memories", ta.memories);
  train->add_option("--lambda", ta.lambda);
  train->add_option("--lr", ta.learning_rate);
  train->add_option("--epochs", ta.epochs);
  train->add_option("--C", ta.C);
  train->add_option("--gamma", ta.gamma);
  train->add_option("--l2", ta.l2);
  train->callback([&] { run = [&] { return cmd_train(g, ta); }; });

  auto* eval = app.add_subcommand("eval", "Score a model on profile files");
  std::string eval_model, eval_report, eval_confusion;
  std::vector<std::string> eval_profiles;
  eval->add_option("--model", eval_model)->required();
  eval->add_option("--report", eval_report)->required();
  eval->add_option("--confusion", eval_confusion);
  eval->add_option("profiles", eval_profiles)->required();
  eval->callback([&] { run = [&] { return cmd_eval(g, eval_model, eval_profiles, eval_report, eval_confusion); }; });

  auto* exp = app.add_subcommand("experiment", "Run an experiment grid");
  std::string exp_spec, exp_out;
  exp->add_option("spec", exp_spec)->required();
  exp->add_option("output", exp_out)->required();
  exp->callback([&] { run = [&] { return cmd_experiment(g, exp_spec, exp_out); }; });

  auto* plot = app.add_subcommand("plotdata", "Emit plot tables");
  PlotArgs pa;
  plot->add_option("--kind", pa.kind)->required()->check(CLI::IsMember({"profiles", "boxes", "ratio", "coeffs", "tsne"}));
  plot->add_option("-o,--output", pa.output)->required();
  plot->add_option("inputs", pa.inputs)->required();
  plot->add_option("--model", pa.model, "Model for predicted classes (tsne)");
  plot->add_option("--top", pa.top, "Memory vectors to emit (coeffs on dam models)");
  plot->add_option("--k", pa.k, "Stability ratio k (0 = 10% of N)");
  plot->add_option("--perplexity", pa.perplexity);
  plot->add_option("--iterations", pa.iterations);
  plot->add_option("--max-points", pa.max_points);
  plot->callback([&] { run = [&] { return cmd_plotdata(g, pa); }; });

  CLI11_PARSE(app, argc, argv);
  try {
    return run();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
