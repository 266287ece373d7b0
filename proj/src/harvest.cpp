#include "hoplab/harvest.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "hoplab/parallel.hpp"

namespace hoplab {

namespace {

constexpr std::uint64_t kLearnTag = 11;
constexpr std::uint64_t kProbeTag = 12;

struct PackedHash {
  std::size_t operator()(const std::vector<std::uint64_t>& v) const noexcept {
    std::uint64_t h = 0x9e3779b97f4a7c15ULL;
    for (auto w : v) h = splitmix64(h ^ w);
    return static_cast<std::size_t>(h);
  }
};

using StateKey = std::vector<std::uint64_t>;

// Exact-match lookup over a task's prototypes and learned states.
class TaskIndex {
 public:
  explicit TaskIndex(const PrototypeTask& task) {
    const StateClass learned =
        task.config.prototype_regime() ? StateClass::Learned : StateClass::PlainLearned;
    for (const auto& p : task.prototypes) {
      exact_.emplace(p.packed(), StateClass::Prototype);
      negated_.insert(p.negated().packed());
    }
    for (const auto& s : task.learned) {
      exact_.emplace(s.packed(), learned);  // keeps Prototype on collision
      negated_.insert(s.negated().packed());
    }
  }

  std::optional<StateClass> match(const StateKey& key) const {
    auto it = exact_.find(key);
    if (it == exact_.end()) return std::nullopt;
    return it->second;
  }
  bool is_negation(const StateKey& key) const { return negated_.count(key) != 0; }

 private:
  std::unordered_map<StateKey, StateClass, PackedHash> exact_;
  std::unordered_set<StateKey, PackedHash> negated_;
};

}  // namespace

std::string_view to_token(StateClass c) {
  switch (c) {
    case StateClass::Prototype: return "prototype";
    case StateClass::Learned: return "learned";
    case StateClass::PlainLearned: return "plain_learned";
    case StateClass::Spurious: return "spurious";
  }
  throw std::invalid_argument("to_token: bad StateClass");
}

StateClass parse_state_class(std::string_view token) {
  for (auto c : kAllClasses)
    if (to_token(c) == token) return c;
  throw std::invalid_argument("unknown class label '" + std::string(token) + "'");
}

std::string_view to_token(LearnRule rule) {
  return rule == LearnRule::Hebbian ? "hebbian" : "thermal";
}

LearnRule parse_learn_rule(std::string_view token) {
  if (token == "hebbian") return LearnRule::Hebbian;
  if (token == "thermal") return LearnRule::ThermalPerceptron;
  throw std::invalid_argument("unknown learning rule '" + std::string(token) + "'");
}

EnergyProfile energy_profile(const WeightMatrix& w, const BipolarState& state) {
  EnergyProfile p;
  p.values = energy(w, state);
  std::sort(p.values.begin(), p.values.end());
  return p;
}

EnergyProfile normalize_profile(const EnergyProfile& profile) {
  EnergyProfile out;
  out.normalized = true;
  out.values.resize(profile.values.size(), 0.0);
  if (profile.values.empty()) return out;
  const auto [lo_it, hi_it] = std::minmax_element(profile.values.begin(), profile.values.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  if (!(hi > lo)) return out;
  const double span = hi - lo;
  for (std::size_t i = 0; i < profile.values.size(); ++i)
    out.values[i] = -1.0 + 2.0 * (profile.values[i] - lo) / span;
  // Pin the extremes so rounding in the division cannot move them.
  out.values[lo_it - profile.values.begin()] = -1.0;
  out.values[hi_it - profile.values.begin()] = 1.0;
  return out;
}

StateClass label_state(const BipolarState& state, const PrototypeTask& task) {
  for (const auto& p : task.prototypes)
    if (p.size() == state.size() && p == state) return StateClass::Prototype;
  for (const auto& s : task.learned)
    if (s.size() == state.size() && s == state)
      return task.config.prototype_regime() ? StateClass::Learned : StateClass::PlainLearned;
  return StateClass::Spurious;
}

std::size_t HarvestSet::count(StateClass c) const {
  return static_cast<std::size_t>(
      std::count_if(items.begin(), items.end(), [c](const HarvestItem& it) { return it.label == c; }));
}

WeightMatrix train_network(const PrototypeTask& task, const HarvestOptions& options,
                           const RandomStream& rng) {
  if (options.rule == LearnRule::Hebbian)
    return hebbian_learn(task.learned, task.config.dimension, options.diagonal);
  RandomStream learn_rng = rng.split({kLearnTag});
  WeightMatrix w = thermal_perceptron_learn(task.learned, options.thermal, learn_rng);
  if (options.diagonal == Diagonal::Zero) w.zero_diagonal();
  return w;
}

HarvestSet harvest(const PrototypeTask& task, std::size_t num_probes, const RandomStream& rng,
                   const HarvestOptions& options) {
  task.config.validate();
  const std::size_t n = task.config.dimension;
  for (const auto& s : task.prototypes)
    if (s.size() != n) throw DimensionMismatch("harvest: prototype length");
  for (const auto& s : task.learned)
    if (s.size() != n) throw DimensionMismatch("harvest: learned state length");

  const WeightMatrix w = train_network(task, options, rng);
  const TaskIndex index(task);

  HarvestSet out;
  out.task_config = task.config;
  out.network_id = "net-" + std::to_string(rng.seed());
  const StateClass learned_label =
      task.config.prototype_regime() ? StateClass::Learned : StateClass::PlainLearned;
  out.items.reserve(task.prototypes.size() + task.learned.size());
  for (const auto& p : task.prototypes) out.items.push_back({energy_profile(w, p), StateClass::Prototype});
  for (const auto& s : task.learned) out.items.push_back({energy_profile(w, s), learned_label});

  struct ProbeOutcome {
    std::optional<BipolarState> attractor;
    std::size_t flips = 0;
    std::size_t updates = 0;
  };
  std::vector<ProbeOutcome> outcomes(num_probes);
  RelaxOptions relax_options;
  relax_options.max_flips = options.max_flips;
  relax_options.on_flip = options.on_flip;

  parallel_for(num_probes, options.threads, [&](std::size_t k) {
    RandomStream probe_rng = rng.split({kProbeTag, k});
    BipolarState probe = BipolarState::random(n, probe_rng);
    try {
      RelaxResult r = relax(w, std::move(probe), probe_rng, relax_options);
      outcomes[k] = {std::move(r.state), r.flips, r.updates};
    } catch (const RelaxationCapExceeded& e) {
      outcomes[k] = {std::nullopt, e.flips(), 0};
    }
  });

  // Sequential reduction in probe order keeps deduplication deterministic.
  std::unordered_set<StateKey, PackedHash> seen;
  ProbeStats& st = out.stats;
  st.probes = num_probes;
  for (auto& o : outcomes) {
    if (!o.attractor) {
      ++st.capped;
      continue;
    }
    st.total_flips += o.flips;
    st.total_updates += o.updates;
    const StateKey key = o.attractor->packed();
    if (auto cls = index.match(key)) {
      if (*cls == StateClass::Prototype) ++st.prototype_hits;
      else ++st.learned_hits;
      continue;
    }
    if (index.is_negation(key)) ++st.negated_hits;
    ++st.spurious_hits;
    if (seen.insert(key).second) {
      out.items.push_back({energy_profile(w, *o.attractor), StateClass::Spurious});
      ++st.spurious_unique;
    }
  }
  return out;
}

}  // namespace hoplab
