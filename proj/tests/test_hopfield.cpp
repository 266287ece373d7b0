#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hoplab/harvest.hpp"
#include "hoplab/hopfield.hpp"
#include "hoplab/task.hpp"

using namespace hoplab;

namespace {

BipolarState st(std::initializer_list<int> v) {
  std::vector<int> x(v);
  return BipolarState::from_ints(x);
}

std::size_t count_stable(std::size_t n, std::size_t states, std::uint64_t seed) {
  RandomStream rng(seed);
  auto learned = generate_prototypes(states, n, rng);
  const auto w = hebbian_learn(learned, n, Diagonal::Zero);
  std::size_t stable = 0;
  for (const auto& s : learned) stable += is_stable(w, s) ? 1 : 0;
  return stable;
}

}  // namespace

TEST_SUITE("hopfield") {

TEST_CASE("bipolar state parsing and validation") {
  const auto s = BipolarState::parse("+-+");
  CHECK(s.size() == 3);
  CHECK(s[0] == 1);
  CHECK(s[1] == -1);
  CHECK(s.to_string() == "+-+");
  CHECK(s.negated().to_string() == "-+-");
  CHECK(s.hamming(s.negated()) == 3);
  CHECK_THROWS(BipolarState::parse("+0-"));
  std::vector<int> bad{1, 0, -1};
  CHECK_THROWS(BipolarState::from_ints(bad));
}

TEST_CASE("hebbian single outer product") {
  std::vector<BipolarState> s{st({1, -1})};
  const auto w = hebbian_learn(s, 2);
  CHECK(w(0, 0) == 1.0);
  CHECK(w(0, 1) == -1.0);
  CHECK(w(1, 0) == -1.0);
  CHECK(w(1, 1) == 1.0);
}

TEST_CASE("hebbian empty sum is zero") {
  const auto w = hebbian_learn(std::span<const BipolarState>{}, 4);
  CHECK(w.dimension() == 4);
  for (double v : w.entries()) CHECK(v == 0.0);
}

TEST_CASE("hebbian two states sum entrywise") {
  std::vector<BipolarState> s{st({1, 1, -1, -1}), st({1, -1, 1, -1})};
  const auto w = hebbian_learn(s, 4);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) CHECK(w(i, j) == s[0][i] * s[0][j] + s[1][i] * s[1][j]);
  CHECK(w(0, 1) == 0.0);
  CHECK(w(0, 0) == 2.0);
  const auto z = hebbian_learn(s, 4, Diagonal::Zero);
  for (std::size_t i = 0; i < 4; ++i) CHECK(z(i, i) == 0.0);
  CHECK(z(0, 3) == w(0, 3));
}

TEST_CASE("hebbian rejects wrong dimension") {
  std::vector<BipolarState> s{st({1, -1, 1})};
  CHECK_THROWS_AS(hebbian_learn(s, 4), DimensionMismatch);
}

TEST_CASE("hebbian matrices are symmetric") {
  RandomStream rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    auto states = generate_prototypes(7, 33, rng);
    CHECK(hebbian_learn(states, 33).is_symmetric());
  }
}

TEST_CASE("energy of zero matrix is zero") {
  RandomStream rng(1);
  const auto s = BipolarState::random(10, rng);
  for (double e : energy(WeightMatrix(10), s)) CHECK(e == 0.0);
  CHECK(is_stable(WeightMatrix(10), s));
}

TEST_CASE("energy of the stored state is -N/2 per neuron") {
  RandomStream rng(2);
  const std::size_t n = 16;
  std::vector<BipolarState> s{BipolarState::random(n, rng)};
  const auto w = hebbian_learn(s, n);
  for (double e : energy(w, s[0])) CHECK(e == doctest::Approx(-8.0));
  CHECK(is_stable(w, s[0]));
  auto flipped = s[0];
  flipped.flip(3);
  CHECK_FALSE(is_stable(w, flipped));
}

TEST_CASE("energy by hand") {
  // W = [[0, 2], [2, 0]], xi = (+, -): (W xi) = (-2, 2), E = -1/2 * xi * (W xi) = (1, 1).
  WeightMatrix w(2, {0.0, 2.0, 2.0, 0.0});
  const auto e = energy(w, st({1, -1}));
  CHECK(e[0] == 1.0);
  CHECK(e[1] == 1.0);
  CHECK(total_energy(w, st({1, -1})) == 2.0);
  CHECK_THROWS_AS(energy(w, st({1, -1, 1})), DimensionMismatch);
}

TEST_CASE("energy is invariant under global sign flip") {
  RandomStream rng(4);
  auto states = generate_prototypes(5, 40, rng);
  const auto w = hebbian_learn(states, 40);
  for (int t = 0; t < 10; ++t) {
    const auto s = BipolarState::random(40, rng);
    CHECK(energy(w, s) == energy(w, s.negated()));
  }
}

TEST_CASE("profile is invariant under neuron permutation") {
  RandomStream rng(5);
  const std::size_t n = 30;
  auto states = generate_prototypes(4, n, rng);
  const auto w = hebbian_learn(states, n);
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  for (std::size_t k = n; k > 1; --k) std::swap(perm[k - 1], perm[rng.index(k)]);
  const auto wp = w.permuted(perm);
  for (int t = 0; t < 5; ++t) {
    const auto s = BipolarState::random(n, rng);
    std::vector<std::int8_t> moved(n);
    for (std::size_t i = 0; i < n; ++i) moved[i] = static_cast<std::int8_t>(s[perm[i]]);
    CHECK(energy_profile(w, s) == energy_profile(wp, BipolarState(moved)));
  }
}

TEST_CASE("relax returns a stable probe unchanged") {
  RandomStream rng(6);
  std::vector<BipolarState> s{BipolarState::random(20, rng)};
  const auto w = hebbian_learn(s, 20);
  const auto r = relax(w, s[0], rng);
  CHECK(r.state == s[0]);
  CHECK(r.flips == 0);
}

TEST_CASE("relax repairs a one-bit corruption") {
  RandomStream rng(7);
  std::vector<BipolarState> s{BipolarState::random(16, rng)};
  const auto w = hebbian_learn(s, 16);
  for (std::size_t i = 0; i < 16; ++i) {
    auto probe = s[0];
    probe.flip(i);
    CHECK(relax(w, probe, rng).state == s[0]);
  }
}

TEST_CASE("relax decreases total energy at every flip and ends stable") {
  RandomStream rng(8);
  auto task = build_task(standard_conditions(8));
  const auto w = hebbian_learn(task.learned, 256, Diagonal::Zero);
  std::size_t violations = 0;
  std::size_t flips = 0;
  RelaxOptions o;
  o.on_flip = [&](const FlipEvent& e) {
    ++flips;
    if (!(e.total_after < e.total_before)) ++violations;
  };
  for (int t = 0; t < 100; ++t) {
    const auto r = relax(w, BipolarState::random(256, rng), rng, o);
    CHECK(is_stable(w, r.state));
  }
  CHECK(flips > 0);
  CHECK(violations == 0);
}

TEST_CASE("flip events report exact energy deltas") {
  RandomStream rng(9);
  auto states = generate_prototypes(3, 24, rng);
  const auto w = hebbian_learn(states, 24);
  auto probe = BipolarState::random(24, rng);
  BipolarState current = probe;
  RelaxOptions o;
  o.on_flip = [&](const FlipEvent& e) {
    CHECK(total_energy(w, current) == doctest::Approx(e.total_before));
    current.flip(e.neuron);
    CHECK(total_energy(w, current) == doctest::Approx(e.total_after));
  };
  const auto r = relax(w, probe, rng, o);
  CHECK(r.state == current);
}

TEST_CASE("relax enforces the flip cap") {
  RandomStream rng(10);
  auto states = generate_prototypes(3, 64, rng);
  const auto w = hebbian_learn(states, 64, Diagonal::Zero);
  RelaxOptions o;
  o.max_flips = 1;
  bool thrown = false;
  for (int t = 0; t < 20 && !thrown; ++t) {
    try {
      relax(w, BipolarState::random(64, rng), rng, o);
    } catch (const RelaxationCapExceeded& e) {
      thrown = true;
      CHECK(e.flips() == 1);
    }
  }
  CHECK(thrown);
}

TEST_CASE("capacity phase change") {
  std::vector<double> few, many;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    few.push_back(static_cast<double>(count_stable(256, 10, seed)) / 10.0);
    many.push_back(static_cast<double>(count_stable(256, 60, seed)) / 60.0);
  }
  std::sort(few.begin(), few.end());
  std::sort(many.begin(), many.end());
  CHECK(few[2] >= 0.95);
  CHECK(many[2] < 0.10);
}

TEST_CASE("thermal rule from zero weights") {
  RandomStream rng(11);
  const auto s = st({1, -1, -1, 1});
  std::vector<BipolarState> states{s};
  ThermalParams p;
  p.learning_rate = 0.25;
  p.epochs = 1;
  const auto w = thermal_perceptron_learn(states, p, rng);
  for (std::size_t j = 0; j < 4; ++j)
    for (std::size_t i = 0; i < 4; ++i) CHECK(w(j, i) == doctest::Approx(2 * 0.25 * s[i] * s[j]));
  // Retrieved exactly from here on, so more epochs change nothing.
  p.epochs = 5;
  CHECK(thermal_perceptron_learn(states, p, rng, w) == w);
}

TEST_CASE("thermal rule with zero learning rate leaves W unchanged") {
  RandomStream rng(12);
  auto states = generate_prototypes(5, 12, rng);
  ThermalParams p;
  p.learning_rate = 0.0;
  const auto w0 = hebbian_learn(states, 12);
  CHECK(thermal_perceptron_learn(states, p, rng, w0) == w0);
}

TEST_CASE("thermal rule stores states") {
  RandomStream rng(13);
  auto states = generate_prototypes(20, 64, rng);
  ThermalParams p;
  p.epochs = 50;
  const auto w = thermal_perceptron_learn(states, p, rng);
  std::size_t stable = 0;
  for (const auto& s : states) stable += is_stable(w, s) ? 1 : 0;
  CHECK(stable >= 18);
}

TEST_CASE("prototype strength") {
  CHECK(prototype_strength(100, 0.2) == doctest::Approx(36.0));
  CHECK(prototype_strength(50, 0.5) == doctest::Approx(0.0));
  CHECK(prototype_strength(50, 0.0) == doctest::Approx(50.0));
  CHECK(prototype_strength(100, 0.1) > prototype_strength(100, 0.3));
  CHECK_THROWS(prototype_strength(10, 0.6));
  CHECK_THROWS(prototype_strength(10, -0.1));
}

}
