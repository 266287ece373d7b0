#include "hoplab/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <iterator>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>

#include "hoplab/feedforward.hpp"
#include "hoplab/io.hpp"
#include "hoplab/logistic.hpp"
#include "hoplab/parallel.hpp"
#include "hoplab/svm.hpp"

namespace hoplab {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string format_value(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

bool is_count(double v) { return v >= 1.0 && std::floor(v) == v; }

std::string join_sizes(const std::vector<std::size_t>& sizes) {
  std::string s;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (i) s += '-';
    s += std::to_string(sizes[i]);
  }
  return s;
}

std::vector<std::size_t> parse_sizes(const std::string& s) {
  std::vector<std::size_t> out;
  std::stringstream in(s);
  std::string part;
  while (std::getline(in, part, '-')) {
    if (part.empty() || part.find_first_not_of("0123456789") != std::string::npos)
      throw std::invalid_argument("classifier: bad layer size list '" + s + "'");
    out.push_back(std::stoul(part));
  }
  return out;
}

void add_into(ConfusionMatrix& acc, const ConfusionMatrix& cm) {
  for (std::size_t i = 0; i < acc.counts.size(); ++i)
    for (std::size_t j = 0; j < acc.counts.size(); ++j) acc.counts[i][j] += cm.counts[i][j];
}

ConfusionMatrix empty_confusion(const std::vector<StateClass>& classes) {
  return ConfusionMatrix{classes, std::vector<std::vector<std::uint64_t>>(
                                      classes.size(), std::vector<std::uint64_t>(classes.size(), 0))};
}

/// One trained model of a repetition, evaluated on every test variant.
struct Job {
  std::string classifier;
  std::string train_label;
  std::size_t train_variant = 0;  // index into variants; variants.size() means combined
  std::size_t train_count = 0;    // experiment 1 only
  std::size_t ordinal = 0;
};

std::string cell_name(std::size_t rep, const Job& job) {
  std::string s = "rep" + std::to_string(rep) + "__" + job.classifier + "__" + job.train_label;
  for (char& c : s)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.')) c = '_';
  return s + ".cell";
}

}  // namespace

std::string_view to_token(VariantAxis axis) {
  switch (axis) {
    case VariantAxis::TrainNetworks: return "networks";
    case VariantAxis::Prototypes: return "prototypes";
    case VariantAxis::BernoulliP: return "bernoulli_p";
    case VariantAxis::Instances: return "instances";
    case VariantAxis::PlainLearned: return "plain_learned";
  }
  return "?";
}

VariantAxis axis_for_experiment(int id) {
  switch (id) {
    case 1: return VariantAxis::TrainNetworks;
    case 2: return VariantAxis::Prototypes;
    case 3: return VariantAxis::BernoulliP;
    case 4: return VariantAxis::Instances;
    case 5: return VariantAxis::PlainLearned;
  }
  throw std::invalid_argument("experiment: id must be 1-5, got " + std::to_string(id));
}

void ExperimentSpec::validate() const {
  const VariantAxis axis = axis_for_experiment(experiment_id);
  if (values.empty()) throw std::invalid_argument("values: must be non-empty");
  if (repetitions < 1) throw std::invalid_argument("repetitions: must be at least 1");
  if (tests_per_variant < 1) throw std::invalid_argument("tests_per_variant: must be at least 1");
  if (trains_per_variant < 1) throw std::invalid_argument("trains_per_variant: must be at least 1");
  for (double v : values) {
    if (axis == VariantAxis::BernoulliP) {
      if (!(v >= 0.0 && v <= 0.5)) throw std::invalid_argument("values: bernoulli_p must lie in [0, 0.5]");
    } else if (!is_count(v)) {
      throw std::invalid_argument("values: " + format_value(v) + " is not a positive integer");
    }
  }
  base.validate();
  if (!base.prototype_regime()) throw std::invalid_argument("base: must be a prototype-regime task");
  if (experiment_id == 1) {
    if (architectures.empty()) throw std::invalid_argument("architectures: must be non-empty");
    for (const auto& a : architectures)
      if (a.size() < 2 || a.front() != base.dimension)
        throw std::invalid_argument("architectures: each must start at the dimension and have 2+ layers");
  } else {
    if (classifiers.empty()) throw std::invalid_argument("classifiers: must be non-empty");
  }
  if (experiment_id >= 2 && experiment_id <= 4 && values.size() + (include_standard ? 1 : 0) < 2)
    throw std::invalid_argument("values: combined pools need at least two variants");
}

ExperimentSpec preset_spec(int id, Preset preset, std::uint64_t seed) {
  ExperimentSpec s;
  s.experiment_id = id;
  s.seed = seed;
  s.base = standard_conditions();
  const bool desk = preset == Preset::Desk;
  s.probes = desk ? 2000 : 10'000;
  s.trains_per_variant = desk ? 3 : 10;
  s.tests_per_variant = desk ? 10 : 100;
  s.repetitions = desk ? 2 : 10;
  s.classifiers = kDefaultRoster;
  s.architectures = {{256, 3}, {256, 64, 3}, {256, 128, 64, 3}, {256, 256, 128, 64, 3}};
  switch (axis_for_experiment(id)) {
    case VariantAxis::TrainNetworks:
      s.values = desk ? std::vector<double>{1, 3} : std::vector<double>{1, 10, 25};
      s.classifiers.clear();
      break;
    case VariantAxis::Prototypes: s.values = {10, 20}; break;
    case VariantAxis::BernoulliP: s.values = {0.1, 0.2, 0.3}; break;
    case VariantAxis::Instances: s.values = {10, 20, 50, 100}; break;
    case VariantAxis::PlainLearned:
      s.values = {10, 20, 30};
      s.include_standard = true;
      break;
  }
  return s;
}

std::vector<Variant> experiment_variants(const ExperimentSpec& spec) {
  const VariantAxis axis = axis_for_experiment(spec.experiment_id);
  std::vector<Variant> out;
  if (axis == VariantAxis::TrainNetworks) {
    out.push_back({"standard", spec.base});
    return out;
  }
  for (double v : spec.values) {
    TaskConfig c = spec.base;
    switch (axis) {
      case VariantAxis::Prototypes: c.num_prototypes = static_cast<std::size_t>(v); break;
      case VariantAxis::BernoulliP: c.bernoulli_p = v; break;
      case VariantAxis::Instances: c.instances_per_prototype = static_cast<std::size_t>(v); break;
      case VariantAxis::PlainLearned:
        c.num_prototypes = 0;
        c.num_plain_learned = static_cast<std::size_t>(v);
        break;
      case VariantAxis::TrainNetworks: break;
    }
    out.push_back({std::string(to_token(axis)) + "=" + format_value(v), c});
  }
  if (spec.include_standard) out.push_back({"standard", spec.base});
  return out;
}

std::vector<StateClass> experiment_classes(const ExperimentSpec& spec) {
  if (spec.experiment_id == 5)
    return {StateClass::Prototype, StateClass::Learned, StateClass::PlainLearned, StateClass::Spurious};
  return {StateClass::Prototype, StateClass::Learned, StateClass::Spurious};
}

static std::size_t pool_size(const ExperimentSpec& spec, Role role) {
  if (role == Role::Test) return spec.tests_per_variant;
  if (spec.experiment_id == 1) {
    double most = 0;
    for (double v : spec.values) most = std::max(most, v);
    return static_cast<std::size_t>(most);
  }
  return spec.trains_per_variant;
}

HarvestSet build_network(const ExperimentSpec& spec, std::size_t variant, Role role,
                         std::size_t repetition, std::size_t index) {
  const auto variants = experiment_variants(spec);
  if (variant >= variants.size()) throw std::out_of_range("build_network: variant index");
  TaskConfig config = variants[variant].config;
  config.seed = RandomStream::derive(
      spec.seed, {variant, static_cast<std::uint64_t>(role), repetition, index});
  const PrototypeTask task = build_task(config);
  HarvestOptions options;
  options.rule = spec.rule;
  return harvest(task, spec.probes, RandomStream(config.seed).split({7}), options);
}

std::vector<HarvestSet> build_variant_pool(const ExperimentSpec& spec, std::size_t variant, Role role,
                                           std::size_t repetition) {
  std::vector<HarvestSet> pool(pool_size(spec, role));
  parallel_for(pool.size(), spec.threads,
               [&](std::size_t k) { pool[k] = build_network(spec, variant, role, repetition, k); });
  return pool;
}

std::vector<HarvestSet> build_combined(const ExperimentSpec& spec, Role role, std::size_t repetition) {
  const std::size_t nv = experiment_variants(spec).size();
  if (nv < 2) throw std::invalid_argument("build_combined: needs at least two variants");
  std::vector<HarvestSet> out;
  for (std::size_t v = 0; v < nv; ++v) {
    auto pool = build_variant_pool(spec, v, role, repetition);
    std::move(pool.begin(), pool.end(), std::back_inserter(out));
  }
  return out;
}

Model make_classifier(const std::string& name, const LabeledDataset& data, const ExperimentSpec& spec,
                      std::uint64_t seed) {
  const std::size_t n = data.dimension();
  const std::size_t k = data.num_classes();
  NnOptions nn;
  nn.seed = seed;
  if (name == "stability_ratio") return train_stability_ratio(data);
  if (name == "nn_linear") {
    nn.layer_sizes = {n, k};
    return train_nn(data, nn);
  }
  if (name == "nn_deep") {
    nn.layer_sizes = {n};
    nn.layer_sizes.insert(nn.layer_sizes.end(), spec.deep_hidden.begin(), spec.deep_hidden.end());
    nn.layer_sizes.push_back(k);
    return train_nn(data, nn);
  }
  if (name.rfind("nn:", 0) == 0) {
    nn.layer_sizes = parse_sizes(name.substr(3));
    return train_nn(data, nn);
  }
  if (name == "svm_linear" || name == "svm_rbf") {
    SvmOptions svm;
    svm.kernel = name == "svm_rbf" ? KernelKind::Rbf : KernelKind::Linear;
    svm.seed = seed;
    return train_svm(data, svm);
  }
  if (name == "dam") return train_dam(data, spec.dam_memories, nn);
  throw std::invalid_argument("classifier: unknown '" + name + "'");
}

std::size_t expected_rows(const ExperimentSpec& spec) {
  const std::size_t nv = experiment_variants(spec).size();
  if (spec.experiment_id == 1) return spec.architectures.size() * spec.values.size() * spec.repetitions;
  if (spec.experiment_id == 5) return spec.classifiers.size() * (nv + 1) * spec.repetitions;
  return spec.classifiers.size() * (nv + 1) * (nv + 1) * spec.repetitions;
}

ResultsTable run_experiment(const ExperimentSpec& spec, const RunOptions& options) {
  spec.validate();
  const auto variants = experiment_variants(spec);
  const std::size_t nv = variants.size();
  const auto classes = experiment_classes(spec);
  const bool exp1 = spec.experiment_id == 1;
  const bool has_combined = !exp1;
  auto log = [&](const std::string& msg) {
    if (options.log) options.log(msg);
  };

  std::vector<Job> jobs;
  if (exp1) {
    for (const auto& arch : spec.architectures)
      for (double v : spec.values)
        jobs.push_back({"nn:" + join_sizes(arch), "networks=" + format_value(v), 0,
                        static_cast<std::size_t>(v), jobs.size()});
  } else {
    for (const auto& c : spec.classifiers) {
      if (spec.experiment_id != 5)
        for (std::size_t v = 0; v < nv; ++v) jobs.push_back({c, variants[v].label, v, 0, jobs.size()});
      jobs.push_back({c, "combined", nv, 0, jobs.size()});
    }
  }
  std::vector<std::string> test_labels;
  for (const auto& v : variants) test_labels.push_back(v.label);
  if (has_combined) test_labels.push_back("combined");

  if (options.cell_dir) std::filesystem::create_directories(*options.cell_dir);

  ResultsTable table;
  for (std::size_t rep = 0; rep < spec.repetitions; ++rep) {
    std::vector<std::vector<ResultRow>> done(jobs.size());
    std::vector<std::size_t> pending;
    for (const Job& job : jobs) {
      if (options.cell_dir) {
        const auto path = *options.cell_dir / cell_name(rep, job);
        if (std::filesystem::exists(path)) {
          std::istringstream in(read_file(path));
          done[job.ordinal] = read_cell(in);
          continue;
        }
      }
      pending.push_back(job.ordinal);
    }
    if (!pending.empty()) {
      log("repetition " + std::to_string(rep + 1) + "/" + std::to_string(spec.repetitions) + ": " +
          std::to_string(pending.size()) + " cells to run");

      // Training pools, one flat parallel loop over every network needed.
      std::vector<bool> need(nv + 1, false);
      for (std::size_t j : pending) need[jobs[j].train_variant] = true;
      if (need[nv]) std::fill(need.begin(), need.end(), true);
      const std::size_t per = pool_size(spec, Role::Train);
      std::vector<std::vector<HarvestSet>> pools(nv);
      std::vector<std::pair<std::size_t, std::size_t>> work;
      for (std::size_t v = 0; v < nv; ++v)
        if (need[v]) {
          pools[v].resize(per);
          for (std::size_t k = 0; k < per; ++k) work.emplace_back(v, k);
        }
      parallel_for(work.size(), spec.threads, [&](std::size_t w) {
        const auto [v, k] = work[w];
        pools[v][k] = build_network(spec, v, Role::Train, rep, k);
      });

      std::vector<Model> models(jobs.size());
      std::vector<std::string> errors(jobs.size());
      std::vector<double> train_seconds(jobs.size(), 0.0);
      std::vector<std::size_t> train_rows(jobs.size(), 0);
      parallel_for(pending.size(), spec.threads, [&](std::size_t p) {
        const Job& job = jobs[pending[p]];
        const auto t0 = Clock::now();
        try {
          std::vector<HarvestSet> train;
          if (exp1) {
            train.assign(pools[0].begin(), pools[0].begin() + static_cast<std::ptrdiff_t>(job.train_count));
          } else if (job.train_variant == nv) {
            for (const auto& pool : pools) train.insert(train.end(), pool.begin(), pool.end());
          } else {
            train = pools[job.train_variant];
          }
          const LabeledDataset data = dataset_from_harvests(train, spec.normalize, classes);
          train_rows[job.ordinal] = data.rows();
          const std::uint64_t seed = RandomStream::derive(spec.seed, {100, rep, job.ordinal});
          models[job.ordinal] = make_classifier(job.classifier, data, spec, seed);
        } catch (const std::exception& e) {
          errors[job.ordinal] = e.what();
        }
        train_seconds[job.ordinal] = seconds_since(t0);
      });
      pools.clear();

      // Test networks are harvested once and scored by every pending model;
      // confusion counts are additive, so the combined pool is the sum.
      const std::size_t nt = spec.tests_per_variant;
      struct Partial {
        std::vector<ConfusionMatrix> cm;
        std::vector<double> seconds;
        std::vector<std::string> errors;
        std::size_t rows = 0;
      };
      std::vector<Partial> partial(nv * nt);
      parallel_for(nv * nt, spec.threads, [&](std::size_t w) {
        const std::size_t v = w / nt;
        const std::size_t k = w % nt;
        const HarvestSet h = build_network(spec, v, Role::Test, rep, k);
        const LabeledDataset data = dataset_from_harvests(std::span(&h, 1), spec.normalize, classes);
        Partial& out = partial[w];
        out.rows = data.rows();
        out.cm.resize(jobs.size());
        out.seconds.assign(jobs.size(), 0.0);
        out.errors.resize(jobs.size());
        std::vector<StateClass> truths(data.rows());
        for (std::size_t i = 0; i < data.rows(); ++i) truths[i] = data.label(i);
        for (std::size_t j : pending) {
          if (!errors[j].empty()) continue;
          const auto t0 = Clock::now();
          try {
            const auto preds = predict(models[j], data);
            out.cm[j] = confuse(preds, truths, classes);
          } catch (const std::exception& e) {
            out.errors[j] = e.what();
          }
          out.seconds[j] = seconds_since(t0);
        }
      });

      for (std::size_t j : pending) {
        const Job& job = jobs[j];
        std::vector<ResultRow> rows;
        ConfusionMatrix all = empty_confusion(classes);
        double all_seconds = 0.0;
        std::size_t all_rows = 0;
        std::string all_error = errors[j];
        for (std::size_t v = 0; v < nv; ++v) {
          ResultRow row;
          row.repetition = rep;
          row.classifier = job.classifier;
          row.train_variant = job.train_label;
          row.test_variant = test_labels[v];
          row.train_seconds = train_seconds[j];
          row.train_rows = train_rows[j];
          row.confusion = empty_confusion(classes);
          row.error = errors[j];
          for (std::size_t k = 0; k < nt; ++k) {
            const Partial& part = partial[v * nt + k];
            row.test_rows += part.rows;
            row.eval_seconds += part.seconds[j];
            if (row.error.empty() && !part.errors[j].empty()) row.error = part.errors[j];
            if (row.error.empty()) add_into(row.confusion, part.cm[j]);
          }
          if (row.error.empty()) {
            row.report = score(row.confusion);
            add_into(all, row.confusion);
          } else {
            row.report.per_class.resize(classes.size());
            if (all_error.empty()) all_error = row.error;
          }
          all_seconds += row.eval_seconds;
          all_rows += row.test_rows;
          rows.push_back(std::move(row));
        }
        if (has_combined) {
          ResultRow row;
          row.repetition = rep;
          row.classifier = job.classifier;
          row.train_variant = job.train_label;
          row.test_variant = "combined";
          row.train_seconds = train_seconds[j];
          row.train_rows = train_rows[j];
          row.eval_seconds = all_seconds;
          row.test_rows = all_rows;
          row.error = all_error;
          row.confusion = all;
          if (row.error.empty())
            row.report = score(row.confusion);
          else
            row.report.per_class.resize(classes.size());
          rows.push_back(std::move(row));
        }
        if (options.cell_dir) {
          std::ostringstream out;
          write_cell(out, rows);
          write_file_atomic(*options.cell_dir / cell_name(rep, job), out.str());
        }
        if (!errors[j].empty()) log("cell " + job.classifier + " / " + job.train_label + " failed: " + errors[j]);
        done[j] = std::move(rows);
      }
    }
    for (auto& rows : done)
      for (auto& r : rows) table.rows.push_back(std::move(r));
  }
  return table;
}

}  // namespace hoplab
