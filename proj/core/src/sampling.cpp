#include "pinnmtl/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

namespace pinnmtl::sampling {

Eigen::MatrixXd lhs(int n, const Eigen::VectorXd& lb, const Eigen::VectorXd& ub,
                    std::uint64_t seed) {
  if (n < 1 || lb.size() != ub.size() || lb.size() == 0) {
    throw std::invalid_argument("lhs: bad sample count or bounds");
  }
  if ((ub.array() <= lb.array()).any()) {
    throw std::invalid_argument("lhs: ub must exceed lb");
  }
  const Eigen::Index d = lb.size();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Eigen::MatrixXd pts(n, d);
  std::vector<int> strata(static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < d; ++j) {
    std::iota(strata.begin(), strata.end(), 0);
    std::shuffle(strata.begin(), strata.end(), rng);
    for (int i = 0; i < n; ++i) {
      const double u = (strata[static_cast<std::size_t>(i)] + unit(rng)) / n;
      pts(i, j) = lb(j) + (ub(j) - lb(j)) * u;
    }
  }
  return pts;
}

Eigen::MatrixXd uniform_box(int n, const Eigen::VectorXd& lb,
                            const Eigen::VectorXd& ub, std::uint64_t seed) {
  if (n < 1 || lb.size() != ub.size() || lb.size() == 0) {
    throw std::invalid_argument("uniform_box: bad sample count or bounds");
  }
  const Eigen::Index d = lb.size();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Eigen::MatrixXd pts(n, d);
  for (int i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      pts(i, j) = lb(j) + (ub(j) - lb(j)) * unit(rng);
    }
  }
  return pts;
}

Eigen::VectorXd grid1d(double lo, double hi, double dx) {
  if (!(hi > lo) || !(dx > 0)) {
    throw std::invalid_argument("grid1d: need hi > lo and dx > 0");
  }
  const auto count = static_cast<Eigen::Index>(std::llround((hi - lo) / dx)) + 1;
  Eigen::VectorXd g(count);
  for (Eigen::Index i = 0; i < count; ++i) g(i) = lo + static_cast<double>(i) * dx;
  return g;
}

}  // namespace pinnmtl::sampling
