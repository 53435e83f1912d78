#include "pinnmtl/metrics.hpp"

#include <stdexcept>

namespace pinnmtl::metrics {

Metrics compute(const Eigen::VectorXd& pred, const Eigen::VectorXd& exact) {
  if (pred.size() != exact.size()) {
    throw std::invalid_argument("metrics: length mismatch");
  }
  if (pred.size() == 0) {
    throw std::invalid_argument("metrics: empty input");
  }
  const double exact_norm = exact.norm();
  if (exact_norm == 0.0) {
    throw std::invalid_argument(
        "metrics: relative error undefined for all-zero reference");
  }
  const Eigen::VectorXd diff = pred - exact;
  Metrics m;
  m.mae = diff.cwiseAbs().mean();
  m.mse = diff.squaredNorm() / static_cast<double>(diff.size());
  m.rel_l2 = diff.norm() / exact_norm;
  return m;
}

}  // namespace pinnmtl::metrics
