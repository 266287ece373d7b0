#include "hoplab/hopfield.hpp"

#include <algorithm>
#include <cmath>

namespace hoplab {

namespace {

void require_dimension(const WeightMatrix& w, const BipolarState& s, const char* where) {
  if (w.dimension() != s.size()) {
    throw DimensionMismatch(std::string(where) + ": matrix dimension " +
                            std::to_string(w.dimension()) + " vs state length " +
                            std::to_string(s.size()));
  }
}

// h_i = sum_j W_ji xi_j, accumulated row by row.
std::vector<double> column_fields(const WeightMatrix& w, const BipolarState& s) {
  const std::size_t n = w.dimension();
  std::vector<double> h(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    const auto row = w.row(j);
    const double sj = s[j];
    for (std::size_t i = 0; i < n; ++i) h[i] += sj * row[i];
  }
  return h;
}

double row_dot(const WeightMatrix& w, std::size_t i, const BipolarState& s) {
  const auto row = w.row(i);
  double acc = 0.0;
  for (std::size_t j = 0; j < row.size(); ++j) acc += row[j] * s[j];
  return acc;
}

}  // namespace

BipolarState::BipolarState(std::vector<std::int8_t> values) : values_(std::move(values)) {
  for (auto v : values_) {
    if (v != 1 && v != -1) throw std::invalid_argument("BipolarState: entries must be -1 or +1");
  }
}

BipolarState BipolarState::from_ints(std::span<const int> values) {
  std::vector<std::int8_t> v;
  v.reserve(values.size());
  for (int x : values) {
    if (x != 1 && x != -1) throw std::invalid_argument("BipolarState: entries must be -1 or +1");
    v.push_back(static_cast<std::int8_t>(x));
  }
  return BipolarState(std::move(v));
}

BipolarState BipolarState::parse(std::string_view text) {
  std::vector<std::int8_t> v;
  v.reserve(text.size());
  for (char c : text) {
    if (c == '+') v.push_back(1);
    else if (c == '-') v.push_back(-1);
    else throw std::invalid_argument(std::string("BipolarState: unexpected character '") + c + "'");
  }
  return BipolarState(std::move(v));
}

BipolarState BipolarState::random(std::size_t n, RandomStream& rng) {
  std::vector<std::int8_t> v(n);
  for (auto& x : v) x = static_cast<std::int8_t>(rng.spin());
  return BipolarState(std::move(v));
}

BipolarState BipolarState::negated() const {
  BipolarState out = *this;
  for (auto& x : out.values_) x = static_cast<std::int8_t>(-x);
  return out;
}

std::size_t BipolarState::hamming(const BipolarState& other) const {
  if (other.size() != size()) throw DimensionMismatch("hamming: length mismatch");
  std::size_t d = 0;
  for (std::size_t i = 0; i < size(); ++i) d += values_[i] != other.values_[i];
  return d;
}

std::string BipolarState::to_string() const {
  std::string s(values_.size(), '+');
  for (std::size_t i = 0; i < values_.size(); ++i)
    if (values_[i] < 0) s[i] = '-';
  return s;
}

std::vector<std::uint64_t> BipolarState::packed() const {
  std::vector<std::uint64_t> words((values_.size() + 63) / 64, 0);
  for (std::size_t i = 0; i < values_.size(); ++i)
    if (values_[i] > 0) words[i / 64] |= std::uint64_t{1} << (i % 64);
  return words;
}

WeightMatrix::WeightMatrix(std::size_t n, std::vector<double> entries)
    : n_(n), w_(std::move(entries)) {
  if (w_.size() != n * n) throw DimensionMismatch("WeightMatrix: entry count is not N*N");
}

bool WeightMatrix::is_symmetric() const {
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = i + 1; j < n_; ++j)
      if ((*this)(i, j) != (*this)(j, i)) return false;
  return true;
}

void WeightMatrix::zero_diagonal() {
  for (std::size_t i = 0; i < n_; ++i) (*this)(i, i) = 0.0;
}

WeightMatrix WeightMatrix::permuted(std::span<const std::size_t> perm) const {
  if (perm.size() != n_) throw DimensionMismatch("WeightMatrix::permuted: permutation length");
  WeightMatrix out(n_);
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = 0; j < n_; ++j) out(i, j) = (*this)(perm[i], perm[j]);
  return out;
}

WeightMatrix hebbian_learn(std::span<const BipolarState> states, std::size_t dimension,
                           Diagonal diagonal) {
  WeightMatrix w(dimension);
  // Accumulate the upper triangle then mirror; entries are integer sums so the
  // result is exact and exactly symmetric.
  std::vector<double> acc(dimension * dimension, 0.0);
  std::vector<double> x(dimension);
  for (const auto& s : states) {
    if (s.size() != dimension) {
      throw DimensionMismatch("hebbian_learn: state of length " + std::to_string(s.size()) +
                              ", expected " + std::to_string(dimension));
    }
    for (std::size_t i = 0; i < dimension; ++i) x[i] = s[i];
    for (std::size_t i = 0; i < dimension; ++i) {
      const double xi = x[i];
      double* row = acc.data() + i * dimension;
      for (std::size_t j = i; j < dimension; ++j) row[j] += xi * x[j];
    }
  }
  for (std::size_t i = 0; i < dimension; ++i) {
    for (std::size_t j = i; j < dimension; ++j) {
      w(i, j) = acc[i * dimension + j];
      w(j, i) = acc[i * dimension + j];
    }
  }
  if (diagonal == Diagonal::Zero) w.zero_diagonal();
  return w;
}

EnergyVector energy(const WeightMatrix& w, const BipolarState& state) {
  require_dimension(w, state, "energy");
  const std::size_t n = w.dimension();
  EnergyVector e = column_fields(w, state);
  for (std::size_t i = 0; i < n; ++i) e[i] *= -0.5 * state[i];
  return e;
}

double total_energy(const WeightMatrix& w, const BipolarState& state) {
  const auto e = energy(w, state);
  double sum = 0.0;
  for (double v : e) sum += v;
  return sum;
}

bool is_stable(const WeightMatrix& w, const BipolarState& state) {
  const auto e = energy(w, state);
  return std::none_of(e.begin(), e.end(), [](double v) { return v > 0.0; });
}

RelaxationCapExceeded::RelaxationCapExceeded(std::size_t flips)
    : std::runtime_error("relax: exceeded " + std::to_string(flips) +
                         " flips without reaching a stable state"),
      flips_(flips) {}

RelaxResult relax(const WeightMatrix& w, BipolarState probe, RandomStream& rng,
                  const RelaxOptions& options) {
  require_dimension(w, probe, "relax");
  const std::size_t n = w.dimension();
  RelaxResult result;
  if (n == 0) {
    result.state = std::move(probe);
    return result;
  }

  std::vector<double> h = column_fields(w, probe);
  double total = 0.0;
  if (options.on_flip) total = total_energy(w, probe);

  std::size_t quiet = 0;
  for (;;) {
    const std::size_t i = rng.index(n);
    ++result.updates;
    const double field = h[i];
    const int current = probe[i];
    const bool flips = (field > 0.0 && current < 0) || (field < 0.0 && current > 0);
    if (flips) {
      if (result.flips >= options.max_flips) throw RelaxationCapExceeded(result.flips);
      double delta = 0.0;
      if (options.on_flip) {
        // dE = s (r_i + h_i) - 2 W_ii for a flip of spin s at neuron i.
        delta = current * (row_dot(w, i, probe) + field) - 2.0 * w(i, i);
      }
      probe.flip(i);
      const double step = 2.0 * probe[i];
      const auto row = w.row(i);
      for (std::size_t k = 0; k < n; ++k) h[k] += step * row[k];
      ++result.flips;
      quiet = 0;
      if (options.on_flip) {
        const double before = total;
        total += delta;
        options.on_flip(FlipEvent{i, before, total});
      }
      continue;
    }
    if (++quiet < n) continue;

    // Full verification pass on freshly computed fields.
    h = column_fields(w, probe);
    bool stable = true;
    for (std::size_t k = 0; k < n; ++k) {
      if (probe[k] * h[k] < 0.0) {
        stable = false;
        break;
      }
    }
    if (stable) break;
    quiet = 0;
  }
  result.state = std::move(probe);
  return result;
}

void ThermalParams::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
    throw std::invalid_argument("ThermalParams: learning_rate must be finite and non-negative");
  if (!(temperature > 0.0) || !std::isfinite(temperature))
    throw std::invalid_argument("ThermalParams: temperature must be positive");
  if (epochs < 1) throw std::invalid_argument("ThermalParams: epochs must be at least 1");
}

WeightMatrix thermal_perceptron_learn(std::span<const BipolarState> states,
                                      const ThermalParams& params, RandomStream& rng) {
  if (states.empty()) throw std::invalid_argument("thermal_perceptron_learn: no states");
  return thermal_perceptron_learn(states, params, rng, WeightMatrix(states.front().size()));
}

WeightMatrix thermal_perceptron_learn(std::span<const BipolarState> states,
                                      const ThermalParams& params, RandomStream& rng,
                                      WeightMatrix w) {
  params.validate();
  if (states.empty()) throw std::invalid_argument("thermal_perceptron_learn: no states");
  const std::size_t n = w.dimension();
  for (const auto& s : states)
    if (s.size() != n) throw DimensionMismatch("thermal_perceptron_learn: state length");

  std::vector<std::size_t> order(states.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;

  for (std::size_t epoch = 0; epoch < params.epochs; ++epoch) {
    // Fisher-Yates with the provided stream.
    for (std::size_t k = order.size(); k > 1; --k) std::swap(order[k - 1], order[rng.index(k)]);
    for (std::size_t idx : order) {
      const BipolarState& s = states[idx];
      const std::vector<double> h = column_fields(w, s);
      for (std::size_t i = 0; i < n; ++i) {
        const int target = s[i];
        const int out = h[i] > 0.0 ? 1 : (h[i] < 0.0 ? -1 : -target);
        if (out == target) continue;
        const double scale =
            params.learning_rate * (target - out) * std::exp(-std::abs(h[i]) / params.temperature);
        for (std::size_t j = 0; j < n; ++j) w(j, i) += scale * s[j];
      }
    }
  }
  return w;
}

double prototype_strength(std::size_t num_instances, double p) {
  if (!(p >= 0.0 && p <= 0.5)) throw std::invalid_argument("prototype_strength: p must lie in [0, 0.5]");
  return static_cast<double>(num_instances) * (1.0 - 4.0 * p + 4.0 * p * p);
}

}  // namespace hoplab
