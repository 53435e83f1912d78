#pragma once

#include <Eigen/Core>

#include <cstdint>

namespace pinnmtl::sampling {

/// Latin hypercube over the box [lb, ub]: n rows, and along every dimension
/// exactly one point falls in each of the n equal strata.
Eigen::MatrixXd lhs(int n, const Eigen::VectorXd& lb, const Eigen::VectorXd& ub,
                    std::uint64_t seed);

/// Plain iid-uniform box sample, n rows.
Eigen::MatrixXd uniform_box(int n, const Eigen::VectorXd& lb,
                            const Eigen::VectorXd& ub, std::uint64_t seed);

/// Inclusive uniform grid lo, lo+dx, ..., hi.
Eigen::VectorXd grid1d(double lo, double hi, double dx);

}  // namespace pinnmtl::sampling
