#ifndef ADCBOUND_TESTS_SUPPORT_HPP
#define ADCBOUND_TESTS_SUPPORT_HPP

#include <cstring>
#include <random>
#include <unordered_map>

#include "adcbound/bellman_engine.hpp"
#include "adcbound/grid_geometry.hpp"
#include "adcbound/system_model.hpp"

namespace adcbound::testing {

// Second-order example: H(z) = (z+1)/(z(z-1)), alphabet {-1.5, 0, 1.5},
// absolute-value penalty, strip |x1 - x2| <= 2.5.
inline SystemModel example_model() {
  return canonical_realization({1.0, 1.0}, {1.0, -1.0, 0.0});
}

inline QuantizerAlphabet example_alphabet() {
  return QuantizerAlphabet({-1.5, 0.0, 1.5});
}

inline InvariantStrip example_strip() {
  InvariantStrip strip;
  strip.normal = Vector(2);
  strip.normal << 1.0, -1.0;
  strip.halfwidth = 2.5;
  return strip;
}

// First-order toy: A = [0.5], B = [1], C = [1], alphabet {-2, 2}.
inline SystemModel toy_model() {
  Matrix A(1, 1);
  A << 0.5;
  Vector B(1);
  B << 1.0;
  RowVector C(1);
  C << 1.0;
  return SystemModel(A, B, C);
}

inline QuantizerAlphabet toy_alphabet() { return QuantizerAlphabet({-2.0, 2.0}); }

// Finite point-state instance: states are exact reachable points of the
// dynamics, successors are exact images.  Value sweeps on this table follow
// the plain point recursion, which is what the exhaustive game oracle
// computes.
struct PointStateInstance {
  std::vector<Vector> states;
  std::vector<int> depth;                 // BFS depth of each state
  ExplicitTransitionTable table;
  std::vector<std::size_t> seed_indices;  // depth-0 states
};

inline PointStateInstance build_point_instance(
    const SystemModel& model, const QuantizerAlphabet& alphabet,
    const std::vector<double>& input_set, const PenaltyFunction& penalty,
    const std::vector<Vector>& seeds, int max_depth) {
  struct Key {
    std::vector<std::uint64_t> bits;
    bool operator==(const Key&) const = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const {
      std::size_t h = 1469598103934665603ull;
      for (auto b : k.bits) h = (h ^ b) * 1099511628211ull;
      return h;
    }
  };
  auto key_of = [&](const Vector& x) {
    Key k;
    k.bits.resize(static_cast<std::size_t>(x.size()));
    std::memcpy(k.bits.data(), x.data(), sizeof(double) * x.size());
    return k;
  };

  std::vector<Vector> states;
  std::vector<int> depth;
  std::unordered_map<Key, std::size_t, KeyHash> index;
  std::vector<std::size_t> frontier;
  std::vector<std::size_t> seed_idx;

  auto intern = [&](const Vector& x, int d) {
    auto [it, fresh] = index.try_emplace(key_of(x), states.size());
    if (fresh) {
      states.push_back(x);
      depth.push_back(d);
    }
    return it->second;
  };
  for (const auto& s : seeds) seed_idx.push_back(intern(s, 0));
  for (std::size_t i = 0; i < states.size(); ++i) frontier.push_back(i);

  for (std::size_t i = 0; i < states.size(); ++i) {
    if (depth[i] >= max_depth) continue;
    for (double r : input_set)
      for (double u : alphabet.levels)
        intern(model.step(states[i], r, u), depth[i] + 1);
  }

  std::vector<double> phi_min(states.size());
  for (std::size_t i = 0; i < states.size(); ++i)
    phi_min[i] = penalty(model.C * states[i]);

  ExplicitTransitionTable table(phi_min, input_set.size());
  for (std::size_t i = 0; i < states.size(); ++i) {
    for (std::size_t j = 0; j < input_set.size(); ++j) {
      ExplicitTransitionTable::Entry e;
      if (depth[i] >= max_depth) {
        e.touches_outside = true;  // fringe: successors are not materialized
      } else {
        for (double u : alphabet.levels) {
          Vector x = model.step(states[i], input_set[j], u);
          auto it = index.find(key_of(x));
          e.successors.push_back(static_cast<std::int32_t>(it->second));
        }
        std::sort(e.successors.begin(), e.successors.end());
        e.successors.erase(
            std::unique(e.successors.begin(), e.successors.end()),
            e.successors.end());
      }
      table.set_entry(i, j, std::move(e));
    }
  }
  return PointStateInstance{std::move(states), std::move(depth),
                            std::move(table), std::move(seed_idx)};
}

// Region over all tiles meeting [-extent, extent]^m.
inline std::shared_ptr<const Region> box_region(const Grid& grid, double extent) {
  AlignedBox window;
  window.lo = Vector::Constant(grid.dim, -extent);
  window.hi = Vector::Constant(grid.dim, extent);
  return std::make_shared<const Region>(grid, window, cover_test_all());
}

}  // namespace adcbound::testing

#endif
