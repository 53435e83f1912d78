#include "pinnmtl/alpha_search.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace pinnmtl::search {

AlphaSearchResult alpha_search(int n_trials, std::uint64_t seed,
                               const std::function<double(double)>& score) {
  if (n_trials < 1) {
    throw std::invalid_argument("alpha_search: need >= 1 trial");
  }
  if (!score) {
    throw std::invalid_argument("alpha_search: score function required");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  AlphaSearchResult result;
  bool have_best = false;
  double best_score = 0.0;
  for (int i = 0; i < n_trials; ++i) {
    double alpha = unit(rng);
    while (alpha <= 0.0) alpha = unit(rng);  // open interval
    const double s = score(alpha);
    result.trials.push_back({alpha, s});
    if (std::isfinite(s) && (!have_best || s < best_score)) {
      have_best = true;
      best_score = s;
      result.best_alpha = alpha;
    }
  }
  if (!have_best) {
    throw std::runtime_error("alpha_search: every trial score was non-finite");
  }
  return result;
}

}  // namespace pinnmtl::search
