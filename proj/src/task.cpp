#include "hoplab/task.hpp"

#include <stdexcept>
#include <string>

namespace hoplab {

namespace {
constexpr std::uint64_t kPrototypeTag = 1;
constexpr std::uint64_t kInstanceTag = 2;
constexpr std::uint64_t kPlainTag = 3;
}  // namespace

void TaskConfig::validate() const {
  if (dimension == 0) throw std::invalid_argument("dimension: must be positive");
  if (!(bernoulli_p >= 0.0 && bernoulli_p <= 0.5))
    throw std::invalid_argument("bernoulli_p: must lie in [0, 0.5]");
  if (num_prototypes > 0 && num_plain_learned > 0)
    throw std::invalid_argument(
        "num_plain_learned: mixed prototype and plain-learned tasks are not supported");
  if (num_prototypes > 0 && instances_per_prototype == 0)
    throw std::invalid_argument("instances_per_prototype: must be positive");
}

TaskConfig standard_conditions(std::uint64_t seed) {
  TaskConfig c;
  c.seed = seed;
  return c;
}

std::vector<BipolarState> generate_prototypes(std::size_t count, std::size_t n, RandomStream& rng) {
  std::vector<BipolarState> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) out.push_back(BipolarState::random(n, rng));
  return out;
}

std::vector<BipolarState> generate_instances(const BipolarState& prototype, std::size_t count,
                                             double p, RandomStream& rng) {
  if (!(p >= 0.0 && p <= 0.5)) throw std::invalid_argument("generate_instances: p must lie in [0, 0.5]");
  std::vector<BipolarState> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    BipolarState s = prototype;
    for (std::size_t i = 0; i < s.size(); ++i)
      if (rng.bernoulli(p)) s.flip(i);
    out.push_back(std::move(s));
  }
  return out;
}

PrototypeTask build_task(const TaskConfig& config) {
  config.validate();
  PrototypeTask task;
  task.config = config;
  const RandomStream root(config.seed);
  if (config.prototype_regime()) {
    task.prototypes.reserve(config.num_prototypes);
    task.learned.reserve(config.num_prototypes * config.instances_per_prototype);
    for (std::size_t j = 0; j < config.num_prototypes; ++j) {
      RandomStream proto_rng = root.split({kPrototypeTag, j});
      task.prototypes.push_back(BipolarState::random(config.dimension, proto_rng));
    }
    for (std::size_t j = 0; j < config.num_prototypes; ++j) {
      for (std::size_t k = 0; k < config.instances_per_prototype; ++k) {
        RandomStream inst_rng = root.split({kInstanceTag, j, k});
        auto one = generate_instances(task.prototypes[j], 1, config.bernoulli_p, inst_rng);
        task.learned.push_back(std::move(one.front()));
      }
    }
  } else {
    for (std::size_t k = 0; k < config.num_plain_learned; ++k) {
      RandomStream plain_rng = root.split({kPlainTag, k});
      task.learned.push_back(BipolarState::random(config.dimension, plain_rng));
    }
  }
  return task;
}

}  // namespace hoplab
