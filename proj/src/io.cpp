#include "hoplab/io.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace hoplab {

namespace {

constexpr const char* kTaskMagic = "hoplab-task";
constexpr const char* kProfileMagic = "hoplab-profiles";
constexpr const char* kModelMagic = "hoplab-model";
constexpr const char* kConfusionMagic = "hoplab-confusion";
constexpr const char* kCellMagic = "hoplab-cell";
constexpr int kVersion = 1;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string part;
  std::stringstream in(s);
  while (std::getline(in, part, sep)) out.push_back(trim(part));
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

std::vector<std::string> words(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

std::uint64_t parse_u64(const std::string& s, const std::string& what) {
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
    throw std::invalid_argument(what + ": expected a non-negative integer, got '" + s + "'");
  errno = 0;
  const unsigned long long v = std::strtoull(s.c_str(), nullptr, 10);
  if (errno == ERANGE) throw std::invalid_argument(what + ": integer out of range");
  return v;
}

bool parse_bool(const std::string& s, const std::string& what) {
  if (s == "1" || s == "true" || s == "yes") return true;
  if (s == "0" || s == "false" || s == "no") return false;
  throw std::invalid_argument(what + ": expected a boolean, got '" + s + "'");
}

double parse_field_double(const std::string& s, const std::string& what) {
  try {
    return parse_double(s);
  } catch (const FormatError&) {
    throw std::invalid_argument(what + ": expected a number, got '" + s + "'");
  }
}

/// Line reader that reports line numbers in errors.
class Lines {
 public:
  explicit Lines(std::istream& in) : in_(in) {}

  std::string next(const char* what) {
    std::string line;
    if (!std::getline(in_, line)) fail(std::string("unexpected end of input, expected ") + what);
    ++number_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
  }

  bool peek_eof() {
    return in_.peek() == std::char_traits<char>::eof();
  }

  /// Reads "<key> <rest>" and returns rest.
  std::string keyed(const std::string& key) {
    const std::string line = next(key.c_str());
    if (line.rfind(key + " ", 0) != 0 && line != key) fail("expected '" + key + "'");
    return line.size() > key.size() ? line.substr(key.size() + 1) : "";
  }

  void magic(const char* tag) {
    const auto w = words(next(tag));
    if (w.size() != 2 || w[0] != tag) fail(std::string("missing '") + tag + "' header");
    if (w[1] != std::to_string(kVersion)) fail("unsupported format version " + w[1]);
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw FormatError("line " + std::to_string(number_) + ": " + msg);
  }

 private:
  std::istream& in_;
  std::size_t number_ = 0;
};

std::vector<double> parse_doubles(const std::string& line, std::size_t expected, const Lines& lines) {
  const auto w = words(line);
  if (w.size() != expected)
    lines.fail("expected " + std::to_string(expected) + " values, found " + std::to_string(w.size()));
  std::vector<double> out(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    try {
      out[i] = parse_double(w[i]);
    } catch (const FormatError& e) {
      lines.fail(e.what());
    }
  }
  return out;
}

std::string join_doubles(const double* v, std::size_t n) {
  std::string s;
  for (std::size_t i = 0; i < n; ++i) {
    if (i) s += ' ';
    s += format_double(v[i]);
  }
  return s;
}

std::string task_inline(const TaskConfig& c) {
  return "dimension=" + std::to_string(c.dimension) + " num_prototypes=" + std::to_string(c.num_prototypes) +
         " instances_per_prototype=" + std::to_string(c.instances_per_prototype) +
         " bernoulli_p=" + format_double(c.bernoulli_p) +
         " num_plain_learned=" + std::to_string(c.num_plain_learned) + " seed=" + std::to_string(c.seed);
}

KeyValues inline_kv(const std::string& rest, const Lines& lines) {
  KeyValues kv;
  for (const auto& w : words(rest)) {
    const auto eq = w.find('=');
    if (eq == std::string::npos) lines.fail("expected key=value, got '" + w + "'");
    kv[w.substr(0, eq)] = w.substr(eq + 1);
  }
  return kv;
}

std::string classes_line(const std::vector<StateClass>& classes) {
  std::string s = "classes";
  for (auto c : classes) s += " " + std::string(to_token(c));
  return s;
}

std::vector<StateClass> parse_classes(const std::string& rest, const Lines& lines) {
  std::vector<StateClass> out;
  for (const auto& w : words(rest)) {
    try {
      out.push_back(parse_state_class(w));
    } catch (const std::exception& e) {
      lines.fail(e.what());
    }
  }
  if (out.empty()) lines.fail("empty class list");
  return out;
}

// Model sections.

void put_scalar(std::ostream& out, const char* name, double v) {
  out << "scalar " << name << ' ' << format_double(v) << '\n';
}

void put_vector(std::ostream& out, const std::string& name, const Vector& v) {
  out << "vector " << name << ' ' << v.size() << '\n' << join_doubles(v.data(), static_cast<std::size_t>(v.size())) << '\n';
}

void put_matrix(std::ostream& out, const std::string& name, const Matrix& m) {
  out << "matrix " << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    out << join_doubles(m.data() + r * m.cols(), static_cast<std::size_t>(m.cols())) << '\n';
}

struct Sections {
  std::map<std::string, double> scalars;
  std::map<std::string, Vector> vectors;
  std::map<std::string, Matrix> matrices;
  const Lines* lines = nullptr;

  double scalar(const std::string& n) const {
    auto it = scalars.find(n);
    if (it == scalars.end()) lines->fail("model: missing scalar '" + n + "'");
    return it->second;
  }
  const Vector& vector(const std::string& n) const {
    auto it = vectors.find(n);
    if (it == vectors.end()) lines->fail("model: missing vector '" + n + "'");
    return it->second;
  }
  const Matrix& matrix(const std::string& n) const {
    auto it = matrices.find(n);
    if (it == matrices.end()) lines->fail("model: missing matrix '" + n + "'");
    return it->second;
  }
};

std::size_t to_size(double v, const Lines& lines, const char* what) {
  if (!(v >= 0.0) || v != std::floor(v)) lines.fail(std::string(what) + ": expected a count");
  return static_cast<std::size_t>(v);
}

std::string sanitize(std::string s) {
  for (char& c : s)
    if (c == ',') c = ';';
    else if (c == '\n' || c == '\r') c = ' ';
  return s;
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& s) {
  if (s.empty()) throw FormatError("empty number");
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size()) throw FormatError("bad number '" + s + "'");
  return v;
}

KeyValues read_key_values(std::istream& in) {
  KeyValues kv;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw FormatError("line " + std::to_string(number) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw FormatError("line " + std::to_string(number) + ": empty key");
    if (!kv.emplace(key, trim(line.substr(eq + 1))).second)
      throw FormatError("line " + std::to_string(number) + ": duplicate key '" + key + "'");
  }
  return kv;
}

static const char* const kTaskFields[] = {"dimension", "num_prototypes", "instances_per_prototype",
                                          "bernoulli_p", "num_plain_learned", "seed"};

static TaskConfig task_fields(const KeyValues& kv, const std::string& prefix) {
  auto get = [&](const char* f) -> const std::string& {
    auto it = kv.find(prefix + f);
    if (it == kv.end()) throw std::invalid_argument(prefix + f + ": missing field");
    return it->second;
  };
  TaskConfig c;
  c.dimension = parse_u64(get("dimension"), prefix + "dimension");
  c.num_prototypes = parse_u64(get("num_prototypes"), prefix + "num_prototypes");
  c.instances_per_prototype = parse_u64(get("instances_per_prototype"), prefix + "instances_per_prototype");
  c.bernoulli_p = parse_field_double(get("bernoulli_p"), prefix + "bernoulli_p");
  c.num_plain_learned = parse_u64(get("num_plain_learned"), prefix + "num_plain_learned");
  c.seed = parse_u64(get("seed"), prefix + "seed");
  return c;
}

TaskConfig task_config_from_kv(const KeyValues& kv) {
  for (const auto& [k, v] : kv) {
    bool known = false;
    for (const char* f : kTaskFields) known = known || k == f;
    if (!known) throw std::invalid_argument(k + ": unknown field");
  }
  TaskConfig c = task_fields(kv, "");
  c.validate();
  return c;
}

void write_task_config(std::ostream& out, const TaskConfig& c) {
  out << "dimension = " << c.dimension << '\n'
      << "num_prototypes = " << c.num_prototypes << '\n'
      << "instances_per_prototype = " << c.instances_per_prototype << '\n'
      << "bernoulli_p = " << format_double(c.bernoulli_p) << '\n'
      << "num_plain_learned = " << c.num_plain_learned << '\n'
      << "seed = " << c.seed << '\n';
}

ExperimentSpec experiment_spec_from_kv(const KeyValues& kv) {
  auto it = kv.find("experiment");
  if (it == kv.end()) throw std::invalid_argument("experiment: missing field");
  const int id = static_cast<int>(parse_u64(it->second, "experiment"));
  Preset preset = Preset::Desk;
  if (auto p = kv.find("preset"); p != kv.end()) {
    if (p->second == "desk") preset = Preset::Desk;
    else if (p->second == "paper") preset = Preset::Paper;
    else throw std::invalid_argument("preset: expected desk or paper");
  }
  ExperimentSpec s = preset_spec(id, preset);
  bool any_base = false;
  for (const auto& [k, v] : kv) {
    if (k == "experiment" || k == "preset") continue;
    if (k.rfind("base.", 0) == 0) {
      bool known = false;
      for (const char* f : kTaskFields) known = known || k.substr(5) == f;
      if (!known) throw std::invalid_argument(k + ": unknown field");
      any_base = true;
    } else if (k == "values") {
      s.values.clear();
      for (const auto& part : split(v, ',')) s.values.push_back(parse_field_double(part, "values"));
    } else if (k == "include_standard") {
      s.include_standard = parse_bool(v, k);
    } else if (k == "probes") {
      s.probes = parse_u64(v, k);
    } else if (k == "trains_per_variant") {
      s.trains_per_variant = parse_u64(v, k);
    } else if (k == "tests_per_variant") {
      s.tests_per_variant = parse_u64(v, k);
    } else if (k == "repetitions") {
      s.repetitions = parse_u64(v, k);
    } else if (k == "normalize") {
      s.normalize = parse_bool(v, k);
    } else if (k == "classifiers") {
      s.classifiers.clear();
      for (const auto& part : split(v, ','))
        if (!part.empty()) s.classifiers.push_back(part);
    } else if (k == "architectures") {
      s.architectures.clear();
      for (const auto& arch : split(v, ';')) {
        if (arch.empty()) continue;
        std::vector<std::size_t> sizes;
        for (const auto& n : split(arch, '-')) sizes.push_back(parse_u64(n, k));
        s.architectures.push_back(std::move(sizes));
      }
    } else if (k == "deep_hidden") {
      s.deep_hidden.clear();
      for (const auto& n : split(v, '-'))
        if (!n.empty()) s.deep_hidden.push_back(parse_u64(n, k));
    } else if (k == "dam_memories") {
      s.dam_memories = parse_u64(v, k);
    } else if (k == "rule") {
      s.rule = parse_learn_rule(v);
    } else if (k == "seed") {
      s.seed = parse_u64(v, k);
    } else if (k == "threads") {
      s.threads = parse_u64(v, k);
    } else {
      throw std::invalid_argument(k + ": unknown field");
    }
  }
  if (any_base) {
    KeyValues merged;
    std::ostringstream defaults;
    write_task_config(defaults, s.base);
    std::istringstream din(defaults.str());
    for (const auto& [k, v] : read_key_values(din)) merged["base." + k] = v;
    for (const auto& [k, v] : kv)
      if (k.rfind("base.", 0) == 0) merged[k] = v;
    s.base = task_fields(merged, "base.");
  }
  s.validate();
  return s;
}

void write_experiment_spec(std::ostream& out, const ExperimentSpec& s) {
  out << "experiment = " << s.experiment_id << '\n';
  out << "values = ";
  for (std::size_t i = 0; i < s.values.size(); ++i) out << (i ? "," : "") << format_double(s.values[i]);
  out << '\n' << "include_standard = " << (s.include_standard ? 1 : 0) << '\n';
  std::ostringstream base;
  write_task_config(base, s.base);
  std::istringstream bin(base.str());
  for (const auto& [k, v] : read_key_values(bin)) out << "base." << k << " = " << v << '\n';
  out << "probes = " << s.probes << '\n'
      << "trains_per_variant = " << s.trains_per_variant << '\n'
      << "tests_per_variant = " << s.tests_per_variant << '\n'
      << "repetitions = " << s.repetitions << '\n'
      << "normalize = " << (s.normalize ? 1 : 0) << '\n';
  out << "classifiers = ";
  for (std::size_t i = 0; i < s.classifiers.size(); ++i) out << (i ? "," : "") << s.classifiers[i];
  out << '\n' << "architectures = ";
  for (std::size_t i = 0; i < s.architectures.size(); ++i) {
    out << (i ? ";" : "");
    for (std::size_t j = 0; j < s.architectures[i].size(); ++j) out << (j ? "-" : "") << s.architectures[i][j];
  }
  out << '\n' << "deep_hidden = ";
  for (std::size_t j = 0; j < s.deep_hidden.size(); ++j) out << (j ? "-" : "") << s.deep_hidden[j];
  out << '\n'
      << "dam_memories = " << s.dam_memories << '\n'
      << "rule = " << to_token(s.rule) << '\n'
      << "seed = " << s.seed << '\n'
      << "threads = " << s.threads << '\n';
}

void write_task(std::ostream& out, const PrototypeTask& task) {
  out << kTaskMagic << ' ' << kVersion << '\n';
  write_task_config(out, task.config);
  out << "prototypes " << task.prototypes.size() << '\n';
  for (const auto& s : task.prototypes) out << s.to_string() << '\n';
  out << "learned " << task.learned.size() << '\n';
  for (const auto& s : task.learned) out << s.to_string() << '\n';
}

PrototypeTask read_task(std::istream& in) {
  Lines lines(in);
  lines.magic(kTaskMagic);
  KeyValues kv;
  std::string line;
  for (;;) {
    line = lines.next("task field or 'prototypes'");
    if (line.rfind("prototypes ", 0) == 0) break;
    const auto eq = line.find('=');
    if (eq == std::string::npos) lines.fail("expected 'key = value'");
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  PrototypeTask task;
  try {
    task.config = task_config_from_kv(kv);
  } catch (const std::invalid_argument& e) {
    lines.fail(e.what());
  }
  auto read_states = [&](std::size_t count, std::vector<BipolarState>& out) {
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
      const std::string s = trim(lines.next("state"));
      if (s.size() != task.config.dimension) lines.fail("state length differs from dimension");
      try {
        out.push_back(BipolarState::parse(s));
      } catch (const std::exception& e) {
        lines.fail(e.what());
      }
    }
  };
  std::size_t np = 0;
  try {
    np = parse_u64(trim(line.substr(11)), "prototypes");
  } catch (const std::invalid_argument& e) {
    lines.fail(e.what());
  }
  read_states(np, task.prototypes);
  std::size_t nl = 0;
  try {
    nl = parse_u64(trim(lines.keyed("learned")), "learned");
  } catch (const std::invalid_argument& e) {
    lines.fail(e.what());
  }
  read_states(nl, task.learned);
  const TaskConfig& c = task.config;
  const std::size_t expect_learned =
      c.prototype_regime() ? c.num_prototypes * c.instances_per_prototype : c.num_plain_learned;
  if (np != c.num_prototypes || nl != expect_learned)
    throw FormatError("task: state counts disagree with the configuration");
  return task;
}

void write_harvest(std::ostream& out, const HarvestSet& h) {
  const bool normalized = !h.items.empty() && h.items.front().profile.normalized;
  out << kProfileMagic << ' ' << kVersion << '\n'
      << "dimension " << h.task_config.dimension << '\n'
      << "normalized " << (normalized ? 1 : 0) << '\n'
      << "network_id " << h.network_id << '\n'
      << "task " << task_inline(h.task_config) << '\n';
  const ProbeStats& s = h.stats;
  out << "stats probes=" << s.probes << " prototype_hits=" << s.prototype_hits
      << " learned_hits=" << s.learned_hits << " negated_hits=" << s.negated_hits
      << " spurious_hits=" << s.spurious_hits << " spurious_unique=" << s.spurious_unique
      << " capped=" << s.capped << " total_flips=" << s.total_flips << " total_updates=" << s.total_updates
      << '\n';
  out << "rows " << h.items.size() << '\n';
  for (const auto& item : h.items) {
    if (item.profile.normalized != normalized) throw std::invalid_argument("write_harvest: mixed normalization");
    out << to_token(item.label);
    for (double v : item.profile.values) out << ' ' << format_double(v);
    out << '\n';
  }
}

HarvestSet read_harvest(std::istream& in) {
  Lines lines(in);
  lines.magic(kProfileMagic);
  HarvestSet h;
  std::size_t n = 0;
  bool normalized = false;
  try {
    n = parse_u64(trim(lines.keyed("dimension")), "dimension");
    normalized = parse_bool(trim(lines.keyed("normalized")), "normalized");
    h.network_id = trim(lines.keyed("network_id"));
    KeyValues tkv = inline_kv(lines.keyed("task"), lines);
    h.task_config = task_config_from_kv(tkv);
    KeyValues skv = inline_kv(lines.keyed("stats"), lines);
    auto stat = [&](const char* f) {
      auto it = skv.find(f);
      if (it == skv.end()) throw std::invalid_argument(std::string("stats.") + f + ": missing field");
      return static_cast<std::size_t>(parse_u64(it->second, f));
    };
    h.stats.probes = stat("probes");
    h.stats.prototype_hits = stat("prototype_hits");
    h.stats.learned_hits = stat("learned_hits");
    h.stats.negated_hits = stat("negated_hits");
    h.stats.spurious_hits = stat("spurious_hits");
    h.stats.spurious_unique = stat("spurious_unique");
    h.stats.capped = stat("capped");
    h.stats.total_flips = stat("total_flips");
    h.stats.total_updates = stat("total_updates");
  } catch (const std::invalid_argument& e) {
    lines.fail(e.what());
  }
  if (n != h.task_config.dimension) lines.fail("dimension differs from the task configuration");
  std::size_t rows = 0;
  try {
    rows = parse_u64(trim(lines.keyed("rows")), "rows");
  } catch (const std::invalid_argument& e) {
    lines.fail(e.what());
  }
  h.items.reserve(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const std::string line = lines.next("profile row");
    const auto sp = line.find(' ');
    HarvestItem item;
    try {
      item.label = parse_state_class(line.substr(0, sp));
    } catch (const std::exception& e) {
      lines.fail(e.what());
    }
    item.profile.values = parse_doubles(sp == std::string::npos ? "" : line.substr(sp + 1), n, lines);
    item.profile.normalized = normalized;
    if (item.label == StateClass::Spurious && !normalized)
      for (double v : item.profile.values)
        if (v > 0.0) lines.fail("spurious row with a positive energy");
    h.items.push_back(std::move(item));
  }
  return h;
}

void write_model(std::ostream& out, const Model& model) {
  out << kModelMagic << ' ' << kVersion << '\n'
      << "kind " << model_kind(model) << '\n'
      << "normalized " << (model_normalized(model) ? 1 : 0) << '\n'
      << classes_line(model_classes(model)) << '\n';
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, StabilityRatioModel>) {
          put_scalar(out, "k", static_cast<double>(m.k));
          put_scalar(out, "input_width", static_cast<double>(m.input_width));
          put_scalar(out, "l2_strength", m.l2_strength);
          put_vector(out, "coef", m.coef);
          put_vector(out, "bias", m.bias);
        } else if constexpr (std::is_same_v<T, LinearModel>) {
          put_matrix(out, "coef", m.coef);
          put_vector(out, "bias", m.bias);
        } else if constexpr (std::is_same_v<T, DeepModel>) {
          put_scalar(out, "layers", static_cast<double>(m.weights.size()));
          for (std::size_t l = 0; l < m.weights.size(); ++l) {
            put_matrix(out, "weight_" + std::to_string(l), m.weights[l]);
            put_vector(out, "bias_" + std::to_string(l), m.biases[l]);
          }
        } else if constexpr (std::is_same_v<T, KernelModel>) {
          put_scalar(out, "gamma", m.gamma);
          put_matrix(out, "supports", m.supports);
          put_matrix(out, "dual", m.dual);
          put_vector(out, "bias", m.bias);
        } else {
          put_matrix(out, "memories", m.memories);
          put_vector(out, "memory_bias", m.memory_bias);
          put_matrix(out, "output", m.output);
          put_vector(out, "output_bias", m.output_bias);
        }
      },
      model);
  out << "end\n";
}

Model read_model(std::istream& in) {
  Lines lines(in);
  lines.magic(kModelMagic);
  const std::string kind = trim(lines.keyed("kind"));
  bool normalized = false;
  try {
    normalized = parse_bool(trim(lines.keyed("normalized")), "normalized");
  } catch (const std::invalid_argument& e) {
    lines.fail(e.what());
  }
  const auto classes = parse_classes(lines.keyed("classes"), lines);
  Sections sec;
  sec.lines = &lines;
  for (;;) {
    const auto w = words(lines.next("model section or 'end'"));
    if (w.size() == 1 && w[0] == "end") break;
    if (w.size() == 3 && w[0] == "scalar") {
      try {
        sec.scalars[w[1]] = parse_double(w[2]);
      } catch (const FormatError& e) {
        lines.fail(e.what());
      }
    } else if (w.size() == 3 && w[0] == "vector") {
      const std::size_t n = to_size(parse_double(w[2]), lines, "vector size");
      const auto v = parse_doubles(lines.next("vector values"), n, lines);
      sec.vectors[w[1]] = Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(n));
    } else if (w.size() == 4 && w[0] == "matrix") {
      const std::size_t r = to_size(parse_double(w[2]), lines, "matrix rows");
      const std::size_t c = to_size(parse_double(w[3]), lines, "matrix cols");
      Matrix m(r, c);
      for (std::size_t i = 0; i < r; ++i) {
        const auto v = parse_doubles(lines.next("matrix row"), c, lines);
        for (std::size_t j = 0; j < c; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v[j];
      }
      sec.matrices[w[1]] = std::move(m);
    } else {
      lines.fail("unrecognized model section");
    }
  }
  const auto k = static_cast<Eigen::Index>(classes.size());
  auto check_rows = [&](Eigen::Index got, const char* what) {
    if (got != k) lines.fail(std::string("model: ") + what + " does not match the class count");
  };
  if (kind == "stability_ratio") {
    StabilityRatioModel m;
    m.k = to_size(sec.scalar("k"), lines, "k");
    m.input_width = to_size(sec.scalar("input_width"), lines, "input_width");
    m.l2_strength = sec.scalar("l2_strength");
    m.coef = sec.vector("coef");
    m.bias = sec.vector("bias");
    check_rows(m.coef.size(), "coef");
    check_rows(m.bias.size(), "bias");
    m.class_set = classes;
    m.normalized = normalized;
    return m;
  }
  if (kind == "nn_linear" || kind == "svm_linear") {
    LinearModel m;
    m.kind = kind == "nn_linear" ? LinearKind::NeuralSoftmax : LinearKind::SvmOvr;
    m.coef = sec.matrix("coef");
    m.bias = sec.vector("bias");
    check_rows(m.coef.rows(), "coef");
    check_rows(m.bias.size(), "bias");
    m.class_set = classes;
    m.normalized = normalized;
    return m;
  }
  if (kind == "nn_deep") {
    DeepModel m;
    const std::size_t layers = to_size(sec.scalar("layers"), lines, "layers");
    if (layers == 0) lines.fail("model: no layers");
    for (std::size_t l = 0; l < layers; ++l) {
      m.weights.push_back(sec.matrix("weight_" + std::to_string(l)));
      m.biases.push_back(sec.vector("bias_" + std::to_string(l)));
      if (m.biases.back().size() != m.weights.back().rows()) lines.fail("model: bias size mismatch");
      if (l == 0) m.layer_sizes.push_back(static_cast<std::size_t>(m.weights[0].cols()));
      else if (m.weights[l].cols() != m.weights[l - 1].rows()) lines.fail("model: layer size mismatch");
      m.layer_sizes.push_back(static_cast<std::size_t>(m.weights[l].rows()));
    }
    check_rows(m.weights.back().rows(), "output layer");
    m.class_set = classes;
    m.normalized = normalized;
    return m;
  }
  if (kind == "svm_rbf") {
    KernelModel m;
    m.gamma = sec.scalar("gamma");
    m.supports = sec.matrix("supports");
    m.dual = sec.matrix("dual");
    m.bias = sec.vector("bias");
    check_rows(m.dual.rows(), "dual");
    check_rows(m.bias.size(), "bias");
    if (m.dual.cols() != m.supports.rows()) lines.fail("model: dual/support count mismatch");
    if (!(m.gamma > 0.0)) lines.fail("model: gamma must be positive");
    m.class_set = classes;
    m.normalized = normalized;
    return m;
  }
  if (kind == "dam") {
    DamModel m;
    m.memories = sec.matrix("memories");
    m.memory_bias = sec.vector("memory_bias");
    m.output = sec.matrix("output");
    m.output_bias = sec.vector("output_bias");
    check_rows(m.output.rows(), "output");
    check_rows(m.output_bias.size(), "output_bias");
    if (m.output.cols() != m.memories.rows() || m.memory_bias.size() != m.memories.rows())
      lines.fail("model: memory count mismatch");
    m.class_set = classes;
    m.normalized = normalized;
    return m;
  }
  lines.fail("unknown model kind '" + kind + "'");
}

void write_confusion(std::ostream& out, const ConfusionMatrix& cm) {
  out << kConfusionMagic << ' ' << kVersion << '\n' << classes_line(cm.class_set) << '\n';
  for (const auto& row : cm.counts) {
    for (std::size_t j = 0; j < row.size(); ++j) out << (j ? " " : "") << row[j];
    out << '\n';
  }
}

ConfusionMatrix read_confusion(std::istream& in) {
  Lines lines(in);
  lines.magic(kConfusionMagic);
  ConfusionMatrix cm;
  cm.class_set = parse_classes(lines.keyed("classes"), lines);
  const std::size_t k = cm.class_set.size();
  for (std::size_t i = 0; i < k; ++i) {
    const auto w = words(lines.next("confusion row"));
    if (w.size() != k) lines.fail("confusion row width");
    std::vector<std::uint64_t> row(k);
    try {
      for (std::size_t j = 0; j < k; ++j) row[j] = parse_u64(w[j], "count");
    } catch (const std::invalid_argument& e) {
      lines.fail(e.what());
    }
    cm.counts.push_back(std::move(row));
  }
  return cm;
}

std::string results_header() {
  std::string h = "repetition,classifier,train_variant,test_variant,accuracy,micro_f1,macro_f1,macro_f1_present";
  for (auto c : kAllClasses) {
    const std::string t(to_token(c));
    h += ",precision_" + t + ",recall_" + t + ",f1_" + t + ",support_" + t + ",predicted_" + t;
  }
  h += ",class_set,train_rows,test_rows,train_seconds,eval_seconds,wall_time,status";
  return h;
}

std::string results_line(const ResultRow& row) {
  std::ostringstream out;
  const ScoreReport& r = row.report;
  out << row.repetition << ',' << sanitize(row.classifier) << ',' << sanitize(row.train_variant) << ','
      << sanitize(row.test_variant) << ',' << format_double(r.accuracy) << ',' << format_double(r.micro_f1) << ','
      << format_double(r.macro_f1) << ',' << format_double(r.macro_f1_present);
  const auto& classes = row.confusion.class_set;
  for (auto c : kAllClasses) {
    ClassScore s;
    auto it = std::find(classes.begin(), classes.end(), c);
    if (it != classes.end()) {
      const auto idx = static_cast<std::size_t>(it - classes.begin());
      if (idx < r.per_class.size()) s = r.per_class[idx];
    }
    out << ',' << format_double(s.precision) << ',' << format_double(s.recall) << ',' << format_double(s.f1)
        << ',' << s.support << ',' << s.predicted;
  }
  out << ',';
  for (std::size_t i = 0; i < classes.size(); ++i) out << (i ? ";" : "") << to_token(classes[i]);
  out << ',' << row.train_rows << ',' << row.test_rows << ',' << format_double(row.train_seconds) << ','
      << format_double(row.eval_seconds) << ',' << format_double(row.wall_time()) << ','
      << (row.error.empty() ? std::string("ok") : sanitize(row.error));
  return out.str();
}

ResultRow parse_results_line(const std::string& line) {
  const auto f = split(line, ',');
  const std::size_t expected = 8 + 5 * std::size(kAllClasses) + 7;
  if (f.size() != expected)
    throw FormatError("results: expected " + std::to_string(expected) + " fields, found " + std::to_string(f.size()));
  ResultRow row;
  try {
    row.repetition = parse_u64(f[0], "repetition");
    row.classifier = f[1];
    row.train_variant = f[2];
    row.test_variant = f[3];
    row.report.accuracy = parse_double(f[4]);
    row.report.micro_f1 = parse_double(f[5]);
    row.report.macro_f1 = parse_double(f[6]);
    row.report.macro_f1_present = parse_double(f[7]);
    std::vector<ClassScore> all(std::size(kAllClasses));
    for (std::size_t c = 0; c < all.size(); ++c) {
      const std::size_t b = 8 + 5 * c;
      all[c].precision = parse_double(f[b]);
      all[c].recall = parse_double(f[b + 1]);
      all[c].f1 = parse_double(f[b + 2]);
      all[c].support = parse_u64(f[b + 3], "support");
      all[c].predicted = parse_u64(f[b + 4], "predicted");
    }
    const std::size_t t = 8 + 5 * all.size();
    std::vector<StateClass> classes;
    for (const auto& tok : split(f[t], ';')) classes.push_back(parse_state_class(tok));
    for (auto c : classes) row.report.per_class.push_back(all[static_cast<std::size_t>(c)]);
    row.confusion.class_set = classes;
    row.train_rows = parse_u64(f[t + 1], "train_rows");
    row.test_rows = parse_u64(f[t + 2], "test_rows");
    row.train_seconds = parse_double(f[t + 3]);
    row.eval_seconds = parse_double(f[t + 4]);
    row.error = f[t + 6] == "ok" ? "" : f[t + 6];
  } catch (const FormatError&) {
    throw;
  } catch (const std::exception& e) {
    throw FormatError(std::string("results: ") + e.what());
  }
  return row;
}

void write_results(std::ostream& out, const ResultsTable& table) {
  out << results_header() << '\n';
  for (const auto& row : table.rows) out << results_line(row) << '\n';
}

ResultsTable read_results(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || trim(line) != results_header()) throw FormatError("results: bad header");
  ResultsTable t;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    t.rows.push_back(parse_results_line(trim(line)));
  }
  return t;
}

void write_cell(std::ostream& out, const std::vector<ResultRow>& rows) {
  out << kCellMagic << ' ' << kVersion << '\n' << "rows " << rows.size() << '\n';
  for (const auto& row : rows) {
    out << results_line(row) << '\n';
    write_confusion(out, row.confusion);
  }
}

std::vector<ResultRow> read_cell(std::istream& in) {
  Lines lines(in);
  lines.magic(kCellMagic);
  std::size_t n = 0;
  try {
    n = parse_u64(trim(lines.keyed("rows")), "rows");
  } catch (const std::invalid_argument& e) {
    lines.fail(e.what());
  }
  std::vector<ResultRow> rows;
  for (std::size_t i = 0; i < n; ++i) {
    ResultRow row = parse_results_line(lines.next("result row"));
    std::ostringstream block;
    block << lines.next("confusion header") << '\n';
    const std::string classes = lines.next("confusion classes");
    block << classes << '\n';
    const std::size_t k = words(classes).size() - 1;
    for (std::size_t r = 0; r < k; ++r) block << lines.next("confusion row") << '\n';
    std::istringstream bin(block.str());
    row.confusion = read_confusion(bin);
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace hoplab
