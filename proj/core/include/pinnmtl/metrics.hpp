#pragma once

#include <Eigen/Core>

namespace pinnmtl::metrics {

struct Metrics {
  double mae = 0.0;
  double mse = 0.0;
  double rel_l2 = 0.0;
};

/// MAE, MSE and ||pred - exact|| / ||exact|| over paired vectors. Throws on
/// length mismatch, empty input, or an all-zero exact vector (the relative
/// error is undefined there).
Metrics compute(const Eigen::VectorXd& pred, const Eigen::VectorXd& exact);

}  // namespace pinnmtl::metrics
