#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <sstream>

#include "hoplab/feedforward.hpp"
#include "hoplab/io.hpp"
#include "hoplab/logistic.hpp"
#include "hoplab/plotdata.hpp"
#include "hoplab/svm.hpp"

using namespace hoplab;

namespace {

std::string missing_field(const std::string& text) {
  std::istringstream in(text);
  try {
    task_config_from_kv(read_key_values(in));
  } catch (const std::invalid_argument& e) {
    return e.what();
  }
  return "";
}

const char* kStandard =
    "dimension = 256\nnum_prototypes = 20\ninstances_per_prototype = 100\nbernoulli_p = 0.2\n"
    "num_plain_learned = 0\nseed = 4\n";

HarvestSet small_harvest() {
  TaskConfig c;
  c.dimension = 32;
  c.num_prototypes = 2;
  c.instances_per_prototype = 5;
  c.seed = 9;
  return harvest(build_task(c), 30, RandomStream(2));
}

LabeledDataset small_data() {
  std::vector<HarvestSet> hs{small_harvest()};
  return dataset_from_harvests(hs, false);
}

template <typename T, typename W, typename R>
T round_trip(const T& v, W write, R read) {
  std::stringstream ss;
  write(ss, v);
  return read(ss);
}

Model model_round_trip(const Model& m) {
  std::stringstream ss;
  write_model(ss, m);
  return read_model(ss);
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("doubles round trip exactly") {
  RandomStream rng(1);
  for (int i = 0; i < 1000; ++i) {
    const double v = rng.normal() * std::pow(10.0, static_cast<double>(rng.index(40)) - 20.0);
    CHECK(parse_double(format_double(v)) == v);
  }
  CHECK_THROWS_AS(parse_double("1.5x"), FormatError);
  CHECK_THROWS_AS(parse_double(""), FormatError);
}

TEST_CASE("task config files") {
  std::istringstream in(kStandard);
  const TaskConfig c = task_config_from_kv(read_key_values(in));
  CHECK(c == standard_conditions(4));
  std::string no_seed(kStandard);
  no_seed = no_seed.substr(0, no_seed.find("seed"));
  CHECK(missing_field(no_seed).find("seed") != std::string::npos);
  CHECK(missing_field(std::string(kStandard) + "colour = red\n").find("colour") != std::string::npos);
  std::string bad(kStandard);
  bad.replace(bad.find("0.2"), 3, "0.9");
  CHECK(missing_field(bad).find("bernoulli_p") != std::string::npos);
  std::istringstream dup("a = 1\na = 2\n");
  CHECK_THROWS_AS(read_key_values(dup), FormatError);
  std::ostringstream out;
  write_task_config(out, c);
  std::istringstream back(out.str());
  CHECK(task_config_from_kv(read_key_values(back)) == c);
}

TEST_CASE("task files round trip") {
  TaskConfig c;
  c.dimension = 16;
  c.num_prototypes = 2;
  c.instances_per_prototype = 3;
  c.seed = 5;
  const auto task = build_task(c);
  const auto back = round_trip(task, write_task, read_task);
  CHECK(back == task);
  std::ostringstream a, b;
  write_task(a, task);
  write_task(b, build_task(c));
  CHECK(a.str() == b.str());
  std::string corrupt = a.str();
  corrupt[corrupt.rfind('+')] = 'x';
  std::istringstream in(corrupt);
  CHECK_THROWS(read_task(in));
  std::istringstream truncated(a.str().substr(0, a.str().size() / 2));
  CHECK_THROWS_AS(read_task(truncated), FormatError);
}

TEST_CASE("profile files round trip") {
  const auto h = small_harvest();
  CHECK(round_trip(h, write_harvest, read_harvest) == h);
  HarvestSet n = h;
  for (auto& item : n.items) item.profile = normalize_profile(item.profile);
  CHECK(round_trip(n, write_harvest, read_harvest) == n);
  std::ostringstream out;
  write_harvest(out, h);
  std::string text = out.str();
  CHECK(text.find("hoplab-profiles 1\ndimension 32\nnormalized 0\nnetwork_id") == 0);
  // A spurious row with a positive energy is rejected.
  const auto pos = text.find("\nspurious ");
  REQUIRE(pos != std::string::npos);
  text.replace(pos + 10, text.find(' ', pos + 10) - pos - 10, "5");
  std::istringstream in(text);
  CHECK_THROWS_AS(read_harvest(in), FormatError);
}

TEST_CASE("model files round trip") {
  const auto d = small_data();
  NnOptions nn;
  nn.epochs = 5;
  std::vector<Model> models;
  models.push_back(train_stability_ratio(d));
  models.push_back(train_nn(d, nn));
  nn.layer_sizes = {32, 6, 3};
  models.push_back(train_nn(d, nn));
  models.push_back(train_svm(d, SvmOptions{}));
  SvmOptions rbf;
  rbf.kernel = KernelKind::Rbf;
  models.push_back(train_svm(d, rbf));
  models.push_back(train_dam(d, 4, nn));
  for (const auto& m : models) {
    const Model back = model_round_trip(m);
    CHECK(model_kind(back) == model_kind(m));
    CHECK(model_classes(back) == model_classes(m));
    CHECK(scores(back, d.profiles) == scores(m, d.profiles));
    CHECK(parameter_sq_norm(back) == parameter_sq_norm(m));
  }
  std::istringstream junk("hoplab-model 1\nkind wizard\nnormalized 0\nclasses learned\nend\n");
  CHECK_THROWS_AS(read_model(junk), FormatError);
}

TEST_CASE("results and confusion files round trip") {
  ResultRow row;
  row.repetition = 3;
  row.classifier = "svm_rbf";
  row.train_variant = "prototypes=10";
  row.test_variant = "combined";
  row.confusion = confusion_from_counts({StateClass::Prototype, StateClass::Learned, StateClass::Spurious},
                                        {{5, 1, 0}, {2, 90, 3}, {0, 4, 50}});
  row.report = score(row.confusion);
  row.train_rows = 123;
  row.test_rows = 155;
  row.train_seconds = 0.1;
  row.eval_seconds = 1.0 / 3.0;
  ResultRow failed = row;
  failed.error = "training diverged";
  ResultsTable t;
  t.rows = {row, failed};
  std::stringstream ss;
  write_results(ss, t);
  const auto back = read_results(ss);
  REQUIRE(back.rows.size() == 2);
  const auto& r = back.rows[0];
  CHECK(r.classifier == row.classifier);
  CHECK(r.report.macro_f1 == row.report.macro_f1);
  CHECK(r.report.per_class.size() == 3);
  CHECK(r.report.per_class[2].f1 == row.report.per_class[2].f1);
  CHECK(r.report.per_class[1].support == 95);
  CHECK(r.eval_seconds == row.eval_seconds);
  CHECK(back.rows[1].error == "training diverged");
  CHECK(results_header().rfind("repetition,classifier,train_variant,test_variant,accuracy", 0) == 0);
  CHECK(round_trip(row.confusion, write_confusion, read_confusion) == row.confusion);
  // Confusion output reproduces the metrics exactly.
  CHECK(score(round_trip(row.confusion, write_confusion, read_confusion)).macro_f1 == row.report.macro_f1);

  std::vector<ResultRow> cell{row, failed};
  const auto cell_back = round_trip(cell, write_cell, read_cell);
  REQUIRE(cell_back.size() == 2);
  CHECK(cell_back[0].confusion == row.confusion);
  CHECK(cell_back[1].error == failed.error);
}

TEST_CASE("experiment spec files") {
  std::istringstream in("experiment = 3\npreset = paper\nclassifiers = nn_linear,svm_rbf\nbase.seed = 4\n");
  const auto s = experiment_spec_from_kv(read_key_values(in));
  CHECK(s.experiment_id == 3);
  CHECK(s.tests_per_variant == 100);
  CHECK(s.classifiers == std::vector<std::string>{"nn_linear", "svm_rbf"});
  CHECK(s.base.seed == 4);
  CHECK(s.base.num_prototypes == 20);
  std::stringstream ss;
  write_experiment_spec(ss, s);
  const auto back = experiment_spec_from_kv(read_key_values(ss));
  CHECK(back.values == s.values);
  CHECK(back.base == s.base);
  CHECK(back.architectures == s.architectures);
  CHECK(back.classifiers == s.classifiers);
  CHECK(back.repetitions == s.repetitions);
  std::istringstream none("preset = desk\n");
  CHECK_THROWS(experiment_spec_from_kv(read_key_values(none)));
  std::istringstream unknown("experiment = 2\nflavour = 1\n");
  CHECK_THROWS(experiment_spec_from_kv(read_key_values(unknown)));
}

TEST_CASE("atomic writes") {
  const auto p = std::filesystem::temp_directory_path() / "hoplab_atomic.txt";
  write_file_atomic(p, "abc");
  CHECK(read_file(p) == "abc");
  write_file_atomic(p, "de");
  CHECK(read_file(p) == "de");
  CHECK_FALSE(std::filesystem::exists(p.string() + ".tmp"));
  std::filesystem::remove(p);
}

}

TEST_SUITE("plotdata") {

TEST_CASE("quantiles") {
  std::vector<double> v{1, 2, 3, 4};
  CHECK(quantile(v, 0.5) == doctest::Approx(2.5));
  CHECK(quantile(v, 0.0) == 1.0);
  CHECK(quantile(v, 1.0) == 4.0);
  CHECK(quantile(v, 0.25) == doctest::Approx(1.75));
}

TEST_CASE("profile curves") {
  std::vector<HarvestSet> hs{small_harvest()};
  std::ostringstream out;
  plot_profiles(out, hs, false);
  std::istringstream in(out.str());
  std::string header;
  std::getline(in, header);
  CHECK(header == "index mean_prototype std_prototype mean_learned std_learned mean_spurious std_spurious");
  std::size_t lines = 0;
  for (std::string l; std::getline(in, l);) ++lines;
  CHECK(lines == 32);
}

TEST_CASE("boxes group by cell") {
  ResultsTable t;
  for (std::size_t rep = 0; rep < 4; ++rep)
    for (const char* test : {"a", "b"}) {
      ResultRow r;
      r.repetition = rep;
      r.classifier = "nn_linear";
      r.train_variant = "a";
      r.test_variant = test;
      r.report.macro_f1 = 0.1 * static_cast<double>(rep);
      t.rows.push_back(r);
    }
  std::ostringstream out;
  plot_boxes(out, t);
  std::istringstream in(out.str());
  std::string l;
  std::size_t lines = 0;
  std::getline(in, l);
  while (std::getline(in, l)) ++lines;
  CHECK(lines == 2);
  CHECK(out.str().find("nn_linear a a 4 0 0 0.075") != std::string::npos);
}

TEST_CASE("ratio, coeffs and tsne tables") {
  std::vector<HarvestSet> hs{small_harvest()};
  std::ostringstream ratio;
  plot_ratio(ratio, hs, 0);
  CHECK(ratio.str().rfind("network class ratio\n", 0) == 0);
  const auto d = small_data();
  std::ostringstream coeffs;
  plot_coeffs(coeffs, train_svm(d, SvmOptions{}), 0);
  CHECK(coeffs.str().find("\nspurious ") != std::string::npos);
  SvmOptions rbf;
  rbf.kernel = KernelKind::Rbf;
  std::ostringstream none;
  CHECK_THROWS(plot_coeffs(none, train_svm(d, rbf), 0));
  const Model m = train_svm(d, SvmOptions{});
  TsnePlotOptions o;
  o.perplexity = 5;
  o.iterations = 100;
  o.max_points = 20;
  std::ostringstream ts;
  plot_tsne(ts, hs, &m, o);
  std::istringstream in(ts.str());
  std::string l;
  std::getline(in, l);
  CHECK(l == "x y true predicted");
  std::size_t lines = 0;
  while (std::getline(in, l)) ++lines;
  CHECK(lines <= 22);
  CHECK(lines >= 18);
  CHECK(parse_plot_kind("tsne") == PlotKind::Tsne);
  CHECK_THROWS(parse_plot_kind("pie"));
}

}
