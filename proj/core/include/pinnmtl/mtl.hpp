#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <vector>

#include "pinnmtl/nn.hpp"
#include "pinnmtl/tape.hpp"

namespace pinnmtl::mtl {

/// Learned homoscedastic task weights, parameterized as s_i = log sigma_i^2
/// so the weights stay positive without constraints. s_i starts at 0, i.e.
/// unit variance.
class UncertaintyWeights {
 public:
  UncertaintyWeights() = default;
  explicit UncertaintyWeights(int n_tasks);

  int n_tasks() const noexcept { return static_cast<int>(s_.size()); }
  double log_variance(int i) const { return s_.at(i)(0, 0); }
  double variance(int i) const;
  std::vector<nn::ParamRef> params();
  std::vector<ad::Var> bind(ad::Tape& tape) const;

 private:
  std::vector<Eigen::MatrixXd> s_;  // 1x1 blocks
};

/// sum_i ( exp(-s_i)/2 * L_i + s_i/2 ), the negative log-likelihood of
/// Gaussian task noise with variance exp(s_i). Stationary in s_i exactly
/// where exp(s_i) equals L_i.
ad::Var uncertainty_weighted_loss(ad::Tape& tape,
                                  std::span<const ad::Var> task_losses,
                                  std::span<const ad::Var> s);

/// Gradient surgery: each task gradient is projected off the conflicting
/// component of every other task gradient (taken in seeded random order,
/// against the unmodified originals), then the surviving gradients are
/// summed. Zero-norm gradients are skipped as projection targets. When
/// n_projections is given it receives the number of projections applied.
Eigen::VectorXd pcgrad(std::span<const Eigen::VectorXd> grads,
                       std::uint64_t seed, int* n_projections = nullptr);

}  // namespace pinnmtl::mtl
