#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hoplab/random.hpp"

namespace hoplab {

class DimensionMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Length-N vector of spins in {-1, +1}.
class BipolarState {
 public:
  BipolarState() = default;
  explicit BipolarState(std::vector<std::int8_t> values);

  static BipolarState from_ints(std::span<const int> values);
  /// Parses a string of '+' and '-' characters.
  static BipolarState parse(std::string_view text);
  static BipolarState random(std::size_t n, RandomStream& rng);

  std::size_t size() const { return values_.size(); }
  int operator[](std::size_t i) const { return values_[i]; }
  std::span<const std::int8_t> values() const { return values_; }

  void flip(std::size_t i) { values_[i] = static_cast<std::int8_t>(-values_[i]); }
  BipolarState negated() const;
  std::size_t hamming(const BipolarState& other) const;
  std::string to_string() const;

  /// Packs spins into 64-bit words; used as a hash-set key.
  std::vector<std::uint64_t> packed() const;

  friend bool operator==(const BipolarState&, const BipolarState&) = default;

 private:
  std::vector<std::int8_t> values_;
};

/// Dense N×N synaptic matrix, row-major.
class WeightMatrix {
 public:
  WeightMatrix() = default;
  explicit WeightMatrix(std::size_t n) : n_(n), w_(n * n, 0.0) {}
  WeightMatrix(std::size_t n, std::vector<double> entries);

  std::size_t dimension() const { return n_; }
  double operator()(std::size_t i, std::size_t j) const { return w_[i * n_ + j]; }
  double& operator()(std::size_t i, std::size_t j) { return w_[i * n_ + j]; }
  std::span<const double> row(std::size_t i) const { return {w_.data() + i * n_, n_}; }
  std::span<const double> entries() const { return w_; }

  bool is_symmetric() const;
  void zero_diagonal();
  /// Copy with rows and columns reordered: result(i, j) = w(perm[i], perm[j]).
  WeightMatrix permuted(std::span<const std::size_t> perm) const;

  friend bool operator==(const WeightMatrix&, const WeightMatrix&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<double> w_;
};

/// Per-neuron energies in original neuron order.
using EnergyVector = std::vector<double>;

enum class Diagonal { Retain, Zero };

WeightMatrix hebbian_learn(std::span<const BipolarState> states, std::size_t dimension,
                           Diagonal diagonal = Diagonal::Retain);

/// E_i = -1/2 * xi_i * h_i with h_i = sum_j W_ji xi_j, the field the update
/// rule reads. Equals -1/2 * xi_i * (W xi)_i for symmetric W.
EnergyVector energy(const WeightMatrix& w, const BipolarState& state);
double total_energy(const WeightMatrix& w, const BipolarState& state);

/// Stable iff no neuron has strictly positive energy.
bool is_stable(const WeightMatrix& w, const BipolarState& state);

struct FlipEvent {
  std::size_t neuron;
  double total_before;
  double total_after;
};

struct RelaxOptions {
  std::size_t max_flips = 1'000'000;
  /// Called after every accepted flip. Leave empty outside of tests: computing
  /// the total-energy delta costs an extra O(N) pass per flip.
  std::function<void(const FlipEvent&)> on_flip;
};

struct RelaxResult {
  BipolarState state;
  std::size_t flips = 0;
  std::size_t updates = 0;
};

class RelaxationCapExceeded : public std::runtime_error {
 public:
  RelaxationCapExceeded(std::size_t flips);
  std::size_t flips() const { return flips_; }

 private:
  std::size_t flips_;
};

/// Asynchronous relaxation. Neuron indices are drawn uniformly with
/// replacement; a zero local field leaves the neuron unchanged. After every N
/// consecutive non-flipping updates the local fields are recomputed from
/// scratch and the state is returned if no neuron wants to flip.
RelaxResult relax(const WeightMatrix& w, BipolarState probe, RandomStream& rng,
                  const RelaxOptions& options = {});

struct ThermalParams {
  double learning_rate = 0.1;
  double temperature = 10.0;
  std::size_t epochs = 10;

  void validate() const;
};

/// Iterative error-correcting rule: for each visited state the one-step
/// retrieval is compared with the state and every column i whose neuron is not
/// retrieved is moved by alpha * (xi_i - out_i) * xi_j * exp(-|h_i| / T).
/// A neuron whose field is exactly zero counts as not retrieved.
WeightMatrix thermal_perceptron_learn(std::span<const BipolarState> states,
                                      const ThermalParams& params, RandomStream& rng);
WeightMatrix thermal_perceptron_learn(std::span<const BipolarState> states,
                                      const ThermalParams& params, RandomStream& rng,
                                      WeightMatrix initial);

/// |eta| * (1 - 4p + 4p^2)
double prototype_strength(std::size_t num_instances, double p);

}  // namespace hoplab
