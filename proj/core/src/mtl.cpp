#include "pinnmtl/mtl.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace pinnmtl::mtl {

UncertaintyWeights::UncertaintyWeights(int n_tasks) {
  if (n_tasks < 1) {
    throw std::invalid_argument("UncertaintyWeights: need >= 1 task");
  }
  s_.assign(static_cast<std::size_t>(n_tasks), Eigen::MatrixXd::Zero(1, 1));
}

double UncertaintyWeights::variance(int i) const {
  return std::exp(log_variance(i));
}

std::vector<nn::ParamRef> UncertaintyWeights::params() {
  std::vector<nn::ParamRef> out;
  for (std::size_t i = 0; i < s_.size(); ++i) {
    out.push_back({"uncert.s" + std::to_string(i), &s_[i]});
  }
  return out;
}

std::vector<ad::Var> UncertaintyWeights::bind(ad::Tape& tape) const {
  std::vector<ad::Var> out;
  out.reserve(s_.size());
  for (const auto& s : s_) out.push_back(tape.input(s));
  return out;
}

ad::Var uncertainty_weighted_loss(ad::Tape& tape,
                                  std::span<const ad::Var> task_losses,
                                  std::span<const ad::Var> s) {
  if (task_losses.empty() || task_losses.size() != s.size()) {
    throw std::invalid_argument(
        "uncertainty_weighted_loss: losses and weights must pair up");
  }
  ad::Var total;
  for (std::size_t i = 0; i < task_losses.size(); ++i) {
    ad::Var w = tape.affine(tape.exp(tape.neg(s[i])), 0.5, 0.0);
    ad::Var term =
        tape.add(tape.mul(w, task_losses[i]), tape.affine(s[i], 0.5, 0.0));
    total = i == 0 ? term : tape.add(total, term);
  }
  return total;
}

Eigen::VectorXd pcgrad(std::span<const Eigen::VectorXd> grads,
                       std::uint64_t seed, int* n_projections) {
  if (grads.empty()) {
    throw std::invalid_argument("pcgrad: need at least one gradient");
  }
  if (n_projections != nullptr) *n_projections = 0;
  const Eigen::Index dim = grads[0].size();
  for (const auto& g : grads) {
    if (g.size() != dim) {
      throw std::invalid_argument("pcgrad: gradient sizes differ");
    }
  }
  const std::size_t n = grads.size();
  std::vector<double> sq_norms(n);
  for (std::size_t j = 0; j < n; ++j) sq_norms[j] = grads[j].squaredNorm();

  std::mt19937_64 rng(seed);
  Eigen::VectorXd total = Eigen::VectorXd::Zero(dim);
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < n; ++i) {
    Eigen::VectorXd gi = grads[i];
    order.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) order.push_back(j);
    }
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t j : order) {
      if (sq_norms[j] == 0.0) continue;  // nothing to conflict with
      const double d = gi.dot(grads[j]);
      if (d < 0.0) {
        gi -= (d / sq_norms[j]) * grads[j];
        if (n_projections != nullptr) ++*n_projections;
      }
    }
    total += gi;
  }
  return total;
}

}  // namespace pinnmtl::mtl
