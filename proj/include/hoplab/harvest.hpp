#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hoplab/hopfield.hpp"
#include "hoplab/task.hpp"

namespace hoplab {

enum class StateClass { Prototype = 0, Learned = 1, PlainLearned = 2, Spurious = 3 };

inline constexpr StateClass kAllClasses[] = {StateClass::Prototype, StateClass::Learned,
                                            StateClass::PlainLearned, StateClass::Spurious};

std::string_view to_token(StateClass c);
/// Accepts the tokens produced by to_token.
StateClass parse_state_class(std::string_view token);

/// Per-neuron energies sorted ascending (most stable first).
struct EnergyProfile {
  std::vector<double> values;
  bool normalized = false;

  std::size_t size() const { return values.size(); }
  friend bool operator==(const EnergyProfile&, const EnergyProfile&) = default;
};

EnergyProfile energy_profile(const WeightMatrix& w, const BipolarState& state);
/// Affine map onto [-1, 1]; constant profiles map to all zeros.
EnergyProfile normalize_profile(const EnergyProfile& profile);

StateClass label_state(const BipolarState& state, const PrototypeTask& task);

struct ProbeStats {
  std::size_t probes = 0;
  std::size_t prototype_hits = 0;
  std::size_t learned_hits = 0;
  /// Attractors equal to the negation of a prototype or learned state.
  std::size_t negated_hits = 0;
  /// Spurious attractors counted with multiplicity.
  std::size_t spurious_hits = 0;
  std::size_t spurious_unique = 0;
  /// Probes abandoned because relaxation hit the flip cap.
  std::size_t capped = 0;
  std::size_t total_flips = 0;
  std::size_t total_updates = 0;

  double mean_flips() const {
    const std::size_t done = probes - capped;
    return done == 0 ? 0.0 : static_cast<double>(total_flips) / static_cast<double>(done);
  }
  friend bool operator==(const ProbeStats&, const ProbeStats&) = default;
};

struct HarvestItem {
  EnergyProfile profile;
  StateClass label;
  friend bool operator==(const HarvestItem&, const HarvestItem&) = default;
};

struct HarvestSet {
  std::string network_id;
  TaskConfig task_config;
  std::vector<HarvestItem> items;
  ProbeStats stats;

  std::size_t count(StateClass c) const;
  friend bool operator==(const HarvestSet&, const HarvestSet&) = default;
};

enum class LearnRule { Hebbian, ThermalPerceptron };

std::string_view to_token(LearnRule rule);
LearnRule parse_learn_rule(std::string_view token);

struct HarvestOptions {
  LearnRule rule = LearnRule::Hebbian;
  Diagonal diagonal = Diagonal::Zero;
  ThermalParams thermal;
  std::size_t max_flips = 1'000'000;
  std::size_t threads = 1;
  /// Forwarded to every relax call; must be thread-safe when threads > 1.
  std::function<void(const FlipEvent&)> on_flip;
};

WeightMatrix train_network(const PrototypeTask& task, const HarvestOptions& options,
                           const RandomStream& rng);

/// The stream's seed determines the learning-rule stream (thermal rule only)
/// and the per-probe streams; probe k uses a stream split on k, so results do
/// not depend on the thread count.
HarvestSet harvest(const PrototypeTask& task, std::size_t num_probes, const RandomStream& rng,
                   const HarvestOptions& options = {});

}  // namespace hoplab
