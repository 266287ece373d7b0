#pragma once

#include <cstdint>
#include <vector>

#include "hoplab/hopfield.hpp"
#include "hoplab/random.hpp"

namespace hoplab {

struct TaskConfig {
  std::size_t dimension = 256;
  std::size_t num_prototypes = 20;
  std::size_t instances_per_prototype = 100;
  double bernoulli_p = 0.2;
  std::size_t num_plain_learned = 0;
  std::uint64_t seed = 0;

  bool prototype_regime() const { return num_prototypes > 0; }
  /// Throws std::invalid_argument naming the offending field.
  void validate() const;

  friend bool operator==(const TaskConfig&, const TaskConfig&) = default;
};

/// 256 neurons, 20 prototypes × 100 instances, p = 0.2.
TaskConfig standard_conditions(std::uint64_t seed = 0);

struct PrototypeTask {
  TaskConfig config;
  std::vector<BipolarState> prototypes;
  /// Prototype regime: instances in prototype-ordered blocks. Otherwise the
  /// plain learned states.
  std::vector<BipolarState> learned;

  friend bool operator==(const PrototypeTask&, const PrototypeTask&) = default;
};

std::vector<BipolarState> generate_prototypes(std::size_t count, std::size_t n, RandomStream& rng);
std::vector<BipolarState> generate_instances(const BipolarState& prototype, std::size_t count,
                                             double p, RandomStream& rng);
PrototypeTask build_task(const TaskConfig& config);

}  // namespace hoplab
