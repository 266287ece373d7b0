// Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any FAIL.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "hoplab/dataset.hpp"
#include "hoplab/experiments.hpp"
#include "hoplab/feedforward.hpp"
#include "hoplab/harvest.hpp"
#include "hoplab/logistic.hpp"
#include "hoplab/metrics.hpp"
#include "hoplab/parallel.hpp"
#include "hoplab/task.hpp"

using namespace hoplab;

namespace {

int failures = 0;

void report(int id, bool ok, const std::string& what, double seconds) {
  std::printf("%s %2d  %s  [%.1fs]\n", ok ? "PASS" : "FAIL", id, what.c_str(), seconds);
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double median(std::vector<double> v) {
  if (v.empty()) return NAN;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
};

double max_energy(const WeightMatrix& w, const BipolarState& s) {
  const auto e = energy(w, s);
  return *std::max_element(e.begin(), e.end());
}

WeightMatrix network_for(const PrototypeTask& task) {
  return train_network(task, HarvestOptions{}, RandomStream(task.config.seed));
}

// ||a - n|| / max(||a||, ||n||)
double relative_error(const std::vector<double>& a, const std::vector<double>& n) {
  double diff = 0.0, na = 0.0, nn = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - n[i]) * (a[i] - n[i]);
    na += a[i] * a[i];
    nn += n[i] * n[i];
  }
  const double den = std::max({std::sqrt(na), std::sqrt(nn), 1e-300});
  return std::sqrt(diff) / den;
}

void metric_oracle() {
  Timer t;
  const std::vector<StateClass> classes = {StateClass::Prototype, StateClass::Learned,
                                           StateClass::Spurious};
  const auto cm = confusion_from_counts(classes, {{2869, 31, 100}, {77582, 222304, 114}, {3683, 0, 434678}});
  const auto r = score(cm);
  const double recalls[] = {0.956, 0.741, 0.992};
  bool ok = std::abs(r.accuracy - 0.8901) <= 5e-5 && std::abs(r.micro_f1 - 0.8901) <= 5e-5 &&
            std::abs(r.macro_f1 - 0.6375) <= 5e-5;
  for (int c = 0; c < 3; ++c) ok = ok && std::abs(r.per_class[c].recall - recalls[c]) <= 5e-4;
  const double secs = t.seconds();
  ok = ok && secs < 1.0;
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "metric oracle: acc %.5f micro %.5f macro %.5f recalls %.2f%%/%.2f%%/%.2f%% (tol 5e-5, 0.05%%)",
                r.accuracy, r.micro_f1, r.macro_f1, 100 * r.per_class[0].recall, 100 * r.per_class[1].recall,
                100 * r.per_class[2].recall);
  report(1, ok, buf, secs);
}

void lyapunov() {
  Timer t;
  const auto task = build_task(standard_conditions(11));
  std::size_t flips = 0, rises = 0;
  double worst = -INFINITY;
  HarvestOptions o;
  o.on_flip = [&](const FlipEvent& e) {
    ++flips;
    const double d = e.total_after - e.total_before;
    worst = std::max(worst, d);
    if (d > 1e-9) ++rises;
  };
  const auto h = harvest(task, 10'000, RandomStream(12), o);
  // Recheck the incremental energy bookkeeping against a direct evaluation.
  const auto w = network_for(task);
  double drift = 0.0;
  RandomStream rng(13);
  for (int k = 0; k < 20; ++k) {
    auto probe = BipolarState::random(task.config.dimension, rng);
    double last = total_energy(w, probe);
    RelaxOptions ro;
    ro.on_flip = [&](const FlipEvent& e) {
      drift = std::max(drift, std::abs(e.total_before - last));
      last = e.total_after;
    };
    const auto r = relax(w, probe, rng, ro);
    drift = std::max(drift, std::abs(total_energy(w, r.state) - last));
  }
  const bool ok = h.stats.probes == 10'000 && h.stats.capped == 0 && rises == 0 && drift < 1e-6;
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "energy descent: %zu probes, %zu capped, %zu flips, %zu rises, max dE %.3g, bookkeeping drift %.3g",
                h.stats.probes, h.stats.capped, flips, rises, worst, drift);
  report(2, ok, buf, t.seconds());
}

void capacity() {
  Timer t;
  std::map<std::size_t, std::vector<double>> frac;
  for (std::size_t count : {10u, 60u})
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      TaskConfig c = standard_conditions(1000 + seed);
      c.num_prototypes = 0;
      c.num_plain_learned = count;
      const auto task = build_task(c);
      const auto w = network_for(task);
      std::size_t stable = 0;
      for (const auto& s : task.learned) stable += is_stable(w, s) ? 1 : 0;
      frac[count].push_back(static_cast<double>(stable) / static_cast<double>(count));
    }
  const double lo = median(frac[10]), hi = median(frac[60]);
  char buf[200];
  std::snprintf(buf, sizeof buf, "capacity: median stable fraction %.3f at 10 states (>= 0.95), %.3f at 60 (< 0.10)",
                lo, hi);
  report(3, lo >= 0.95 && hi < 0.10 && t.seconds() < 60, buf, t.seconds());
}

void prototype_formation() {
  Timer t;
  std::size_t good = 0, proto_ok = 0, learned_ok = 0, protos = 0, proto_stable = 0, learned = 0,
              learned_unstable = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto task = build_task(standard_conditions(2000 + seed));
    const auto w = network_for(task);
    std::size_t ps = 0, lu = 0;
    for (const auto& p : task.prototypes) ps += is_stable(w, p) ? 1 : 0;
    for (const auto& s : task.learned) lu += is_stable(w, s) ? 0 : 1;
    protos += task.prototypes.size();
    proto_stable += ps;
    learned += task.learned.size();
    learned_unstable += lu;
    const bool p_all = ps == task.prototypes.size(), l_all = lu == task.learned.size();
    proto_ok += p_all;
    learned_ok += l_all;
    good += p_all && l_all;
  }
  double sum = 0.0;
  std::size_t n = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    TaskConfig c = standard_conditions(3000 + seed);
    c.bernoulli_p = 0.3;
    const auto task = build_task(c);
    const auto w = network_for(task);
    for (const auto& p : task.prototypes) {
      sum += max_energy(w, p);
      ++n;
    }
  }
  const double mean_max = sum / static_cast<double>(n);
  char buf[400];
  std::snprintf(buf, sizeof buf,
                "prototype formation: %zu/10 networks fully formed (>= 9; prototypes all stable in %zu, "
                "learned all unstable in %zu; pooled %.4f of prototypes stable, %.4f of learned unstable); "
                "p=0.3 mean max prototype energy %.2f (> 0)",
                good, proto_ok, learned_ok, double(proto_stable) / double(protos),
                double(learned_unstable) / double(learned), mean_max);
  report(4, good >= 9 && mean_max > 0.0, buf, t.seconds());
}

void strength_ordering() {
  Timer t;
  std::vector<double> med;
  std::string detail;
  for (std::size_t inst : {20u, 50u, 100u}) {
    std::vector<double> margins;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      TaskConfig c = standard_conditions(4000 + seed);
      c.instances_per_prototype = inst;
      const auto task = build_task(c);
      const auto w = network_for(task);
      for (const auto& p : task.prototypes) margins.push_back(-max_energy(w, p));
    }
    med.push_back(median(margins));
    detail += " " + std::to_string(inst) + ":" + fmt("%.1f", med.back());
  }
  const bool ok = med[0] < med[1] && med[1] < med[2];
  report(5, ok, "prototype margin medians by instance count" + detail + " (strictly increasing)", t.seconds());
}

const ResultRow* find_row(const ResultsTable& t, std::size_t rep, const std::string& cls, const std::string& train,
                          const std::string& test) {
  for (const auto& r : t.rows)
    if (r.repetition == rep && r.classifier == cls && r.train_variant == train && r.test_variant == test) return &r;
  return nullptr;
}

// Median macro F1 over repetitions; NAN if a row is missing or failed.
double median_f1(const ResultsTable& t, const ExperimentSpec& s, const std::string& cls, const std::string& train,
                 const std::string& test) {
  std::vector<double> v;
  for (std::size_t rep = 0; rep < s.repetitions; ++rep) {
    const auto* r = find_row(t, rep, cls, train, test);
    if (!r || !r->error.empty()) return NAN;
    v.push_back(r->report.macro_f1);
  }
  return median(v);
}

void desk_classifiers() {
  Timer t;
  ExperimentSpec s = preset_spec(4, Preset::Desk, 1);
  s.threads = default_threads();
  const auto table = run_experiment(s);
  const std::string std_label = "instances=100", weak = "instances=10";
  const double nn = median_f1(table, s, "nn_linear", std_label, std_label);
  const double svm = median_f1(table, s, "svm_linear", std_label, std_label);
  double best = -INFINITY;
  std::string best_name;
  for (const auto& c : s.classifiers) {
    if (c == "stability_ratio") continue;
    const double f = median_f1(table, s, c, weak, weak);
    if (f > best) {
      best = f;
      best_name = c;
    }
  }
  const double ratio = median_f1(table, s, "stability_ratio", weak, weak);
  char buf[300];
  std::snprintf(buf, sizeof buf,
                "desk classifiers: standard macro F1 nn_linear %.4f svm_linear %.4f (>= 0.6); "
                "10-instance stability_ratio %.4f < best %s %.4f",
                nn, svm, ratio, best_name.c_str(), best);
  report(6, nn >= 0.6 && svm >= 0.6 && ratio < best, buf, t.seconds());
}

struct Toy {
  Matrix x;
  std::vector<std::size_t> labels;
  std::vector<double> weights;
};

Toy toy(std::size_t rows, std::size_t dim, std::size_t classes, RandomStream& rng) {
  Toy d;
  d.x.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < d.x.size(); ++i) d.x.data()[i] = rng.normal();
  for (std::size_t i = 0; i < rows; ++i) {
    d.labels.push_back(i % classes);
    d.weights.push_back(0.5 + rng.uniform());
  }
  return d;
}

double mlp_check(std::vector<std::size_t> sizes, RandomStream& rng) {
  const auto d = toy(12, sizes.front(), sizes.back(), rng);
  MlpParams p = init_mlp(sizes, rng);
  for (auto& b : p.biases)
    for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = 0.1 * rng.normal();
  MlpParams g;
  mlp_loss(p, d.x, d.labels, d.weights, 0.3, &g);
  auto flat = p.flatten();
  std::vector<double> numeric(flat.size());
  const double h = 1e-6;
  for (std::size_t i = 0; i < flat.size(); ++i) {
    MlpParams q = p;
    const double keep = flat[i];
    flat[i] = keep + h;
    q.assign(flat);
    const double up = mlp_loss(q, d.x, d.labels, d.weights, 0.3);
    flat[i] = keep - h;
    q.assign(flat);
    const double down = mlp_loss(q, d.x, d.labels, d.weights, 0.3);
    flat[i] = keep;
    numeric[i] = (up - down) / (2 * h);
  }
  return relative_error(g.flatten(), numeric);
}

double logistic_check(RandomStream& rng) {
  const std::size_t k = 3;
  auto d = toy(12, 8, k, rng);
  for (Eigen::Index r = 0; r < d.x.rows(); ++r) std::sort(d.x.row(r).begin(), d.x.row(r).end());
  const auto feats = ratio_features(d.x, 1);
  std::vector<double> params(2 * k);
  for (auto& p : params) p = rng.normal();
  std::vector<double> grad, numeric(params.size());
  logistic_loss(params, feats, d.labels, d.weights, k, 0.3, &grad);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto up = params, down = params;
    up[i] += 1e-6;
    down[i] -= 1e-6;
    numeric[i] = (logistic_loss(up, feats, d.labels, d.weights, k, 0.3) -
                  logistic_loss(down, feats, d.labels, d.weights, k, 0.3)) / 2e-6;
  }
  return relative_error(grad, numeric);
}

void gradients() {
  Timer t;
  RandomStream rng(7);
  double nn = 0.0, deep = 0.0, dam = 0.0, lr = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    nn = std::max(nn, mlp_check({8, 3}, rng));
    deep = std::max(deep, mlp_check({8, 6, 5, 3}, rng));
    dam = std::max(dam, mlp_check({8, 12, 3}, rng));
    lr = std::max(lr, logistic_check(rng));
  }
  char buf[200];
  std::snprintf(buf, sizeof buf, "gradient checks, worst relative error: nn %.2g deep %.2g dam %.2g logistic %.2g (< 1e-4)",
                nn, deep, dam, lr);
  const double secs = t.seconds();
  report(7, std::max({nn, deep, dam, lr}) < 1e-4 && secs < 10, buf, secs);
}

void permutation() {
  Timer t;
  RandomStream rng(8);
  std::size_t bad = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng.index(63);
    std::vector<double> entries(n * n);
    // Integer weights keep every field sum exact whatever the summation order.
    for (auto& e : entries) e = static_cast<double>(static_cast<int>(rng.index(41)) - 20);
    const WeightMatrix w(n, entries);
    const auto s = BipolarState::random(n, rng);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    for (std::size_t k = n; k > 1; --k) std::swap(perm[k - 1], perm[rng.index(k)]);
    std::vector<std::int8_t> ps(n);
    for (std::size_t i = 0; i < n; ++i) ps[i] = static_cast<std::int8_t>(s[perm[i]]);
    const auto a = energy_profile(w, s);
    const auto b = energy_profile(w.permuted(perm), BipolarState(ps));
    bad += a.values == b.values ? 0 : 1;
  }
  report(8, bad == 0, std::to_string(100 - bad) + "/100 permuted (W, xi) pairs give identical profiles", t.seconds());
}

void normalization() {
  Timer t;
  RandomStream rng(9);
  double extreme = 0.0, idem = 0.0, constant = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    EnergyProfile p;
    const std::size_t n = 2 + rng.index(300);
    const double scale = std::pow(10.0, static_cast<double>(rng.index(9)) - 4.0);
    for (std::size_t i = 0; i < n; ++i) p.values.push_back(scale * rng.normal());
    std::sort(p.values.begin(), p.values.end());
    const auto q = normalize_profile(p);
    const auto [lo, hi] = std::minmax_element(q.values.begin(), q.values.end());
    extreme = std::max({extreme, std::abs(*lo + 1.0), std::abs(*hi - 1.0)});
    const auto r = normalize_profile(q);
    for (std::size_t i = 0; i < n; ++i) idem = std::max(idem, std::abs(r.values[i] - q.values[i]));
    EnergyProfile c;
    c.values.assign(n, scale * rng.normal());
    for (double v : normalize_profile(c).values) constant = std::max(constant, std::abs(v));
  }
  char buf[200];
  std::snprintf(buf, sizeof buf, "normalization: extreme error %.2g, idempotence error %.2g, constant output %.2g (<= 1e-12)",
                extreme, idem, constant);
  report(9, extreme <= 1e-12 && idem <= 1e-12 && constant == 0.0, buf, t.seconds());
}

void generalization() {
  Timer t;
  ExperimentSpec s = preset_spec(2, Preset::Desk, 1);
  s.repetitions = 5;
  s.threads = default_threads();
  const auto table = run_experiment(s);
  bool ok = true;
  std::string detail;
  for (const auto& c : s.classifiers) {
    const double same = median_f1(table, s, c, "prototypes=10", "prototypes=10");
    const double cross = median_f1(table, s, c, "prototypes=10", "prototypes=20");
    ok = ok && cross < same;
    char buf[120];
    std::snprintf(buf, sizeof buf, " %s %.4f->%.4f", c.c_str(), same, cross);
    detail += buf;
  }
  report(10, ok, "train 10 prototypes, median macro F1 on 10 -> 20:" + detail + " (must drop)", t.seconds());
}

}  // namespace

int main() {
  metric_oracle();
  lyapunov();
  capacity();
  prototype_formation();
  strength_ordering();
  desk_classifiers();
  gradients();
  permutation();
  normalization();
  generalization();
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
