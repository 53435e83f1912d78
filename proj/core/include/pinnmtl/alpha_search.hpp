#pragma once

#include <cstdint>
#include <functional>
#include <vector>

namespace pinnmtl::search {

struct AlphaTrial {
  double alpha = 0.0;
  double score = 0.0;
};

struct AlphaSearchResult {
  double best_alpha = 0.0;
  std::vector<AlphaTrial> trials;
};

/// Draws n_trials coefficients uniformly from the open interval (0, 1),
/// deterministically in the seed, evaluates the score at each and returns
/// the argmin. Non-finite scores are kept in the trial list but never win;
/// all-non-finite throws.
AlphaSearchResult alpha_search(int n_trials, std::uint64_t seed,
                               const std::function<double(double)>& score);

}  // namespace pinnmtl::search
