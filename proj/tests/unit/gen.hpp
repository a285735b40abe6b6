#pragma once

// Small seeded generators for the property tests. Each case draws from its
// own stream so a failing case can be replayed by index.

#include <cstdint>
#include <vector>

#include "ni_swarm/geometry.hpp"
#include "ni_swarm/rng.hpp"

namespace gen {

inline ni_swarm::Rng stream(std::uint64_t suite, std::uint64_t index) {
  return ni_swarm::Rng::split(suite, index, 0);
}

inline std::vector<ni_swarm::Vec2> points(ni_swarm::Rng& r, std::size_t n, double half) {
  std::vector<ni_swarm::Vec2> out(n);
  for (auto& p : out) p = {r.uniform(-half, half), r.uniform(-half, half)};
  return out;
}

// Points on a coarse lattice so exact distance ties actually happen.
inline std::vector<ni_swarm::Vec2> lattice_points(ni_swarm::Rng& r, std::size_t n, int half) {
  std::vector<ni_swarm::Vec2> out(n);
  const auto span = static_cast<std::uint64_t>(2 * half + 1);
  for (auto& p : out) {
    p = {static_cast<double>(static_cast<int>(r.next() % span) - half),
         static_cast<double>(static_cast<int>(r.next() % span) - half)};
  }
  return out;
}

inline std::size_t index(ni_swarm::Rng& r, std::size_t n) { return static_cast<std::size_t>(r.next() % n); }

}  // namespace gen
