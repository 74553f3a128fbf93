#pragma once

#include <random>

#include "leafdet/feature_map.hpp"
#include "leafdet/geometry.hpp"

namespace leafdet::testing {

/// Integer-coordinate box with both corners in [0, extent].
inline BBox random_int_box(std::mt19937_64& rng, int extent) {
  std::uniform_int_distribution<int> d(0, extent);
  while (true) {
    int a = d(rng), b = d(rng), c = d(rng), e = d(rng);
    if (a == b || c == e) continue;
    return BBox(std::min(a, b), std::min(c, e), std::max(a, b), std::max(c, e));
  }
}

/// Real-valued box with corners in [lo, hi] and sides of at least min_side.
inline BBox random_box(std::mt19937_64& rng, double lo, double hi, double min_side = 0.5) {
  std::uniform_real_distribution<double> d(lo, hi);
  while (true) {
    const double a = d(rng), b = d(rng), c = d(rng), e = d(rng);
    if (std::abs(a - b) < min_side || std::abs(c - e) < min_side) continue;
    return BBox(std::min(a, b), std::min(c, e), std::max(a, b), std::max(c, e));
  }
}

inline FeatureMap random_map(std::mt19937_64& rng, std::size_t c, std::size_t h, std::size_t w,
                             double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  FeatureMap m(c, h, w);
  for (double& v : m.values()) v = d(rng);
  return m;
}

}  // namespace leafdet::testing
