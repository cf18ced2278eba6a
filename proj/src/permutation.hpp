#pragma once

#include <cmath>
#include <numeric>
#include <vector>

#include "nsrl/detectors.hpp"
#include "nsrl/error.hpp"

namespace nsrl::detail {

inline void shuffle(std::vector<int>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = rng.below(i);
    std::swap(v[i - 1], v[j]);
  }
}

inline std::vector<int> iota(int n) {
  std::vector<int> v(n);
  std::iota(v.begin(), v.end(), 0);
  return v;
}

/// Exceedance count above which p = (1 + E) / (1 + N) exceeds alpha.
inline int max_exceedances(double alpha, int n_permutations) {
  return static_cast<int>(std::floor(alpha * (1.0 + n_permutations) - 1.0 + 1e-12));
}

inline bool exceeds(double permuted, double observed) {
  return permuted >= observed - 1e-9 * std::max(1.0, std::abs(observed));
}

}  // namespace nsrl::detail
