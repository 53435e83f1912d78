#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pinnmtl/adversarial.hpp"
#include "pinnmtl/mtl.hpp"
#include "pinnmtl/nn.hpp"
#include "pinnmtl/pde.hpp"
#include "pinnmtl/tape.hpp"

namespace pinnmtl::train {

enum class Strategy { Unweighted, Uncert, PcGrad };

std::string to_string(Strategy s);
std::optional<Strategy> strategy_from_string(std::string_view s);

/// Fixed sub-streams of the run seed, shared with tests that replay a run.
namespace streams {
inline constexpr std::uint64_t kNetInit = 0;
inline constexpr std::uint64_t kInterior = 1;
inline constexpr std::uint64_t kBoundary = 2;
inline constexpr std::uint64_t kNoise = 3;
inline constexpr std::uint64_t kPcGradOrder = 4;
inline constexpr std::uint64_t kGenerator = 5;
inline constexpr std::uint64_t kBrownian = 6;
inline constexpr std::uint64_t kEvalBrownian = 7;
inline constexpr std::uint64_t kAlphaSearch = 8;
}  // namespace streams

struct TrainOptions {
  Strategy strategy = Strategy::Unweighted;
  int epochs = 1000;
  double lr = 1e-3;
  int n_interior = 1000;
  int n_boundary = 100;
  std::uint64_t seed = 0;
  std::optional<adv::AdvConfig> adversarial;
  double noise_std = 0.0;  // Gaussian noise added to boundary targets
};

struct IterRecord {
  int iter = 0;
  std::vector<double> task_loss;
  double weighted_loss = 0.0;
  std::vector<double> sigma;  // per-task sigma_i; 1 when not learned
  int n_projections = 0;
  Eigen::Index n_transformed = 0;
};

struct TrainResult {
  std::vector<IterRecord> log;
  std::vector<adv::RefreshStats> refreshes;
  pde::SampleSet samples;              // final training set
  std::vector<double> log_variances;   // final s_i (uncert strategy only)
  std::optional<nn::Mlp> generator;    // final generator (adversarial only)
};

/// Builds the strategy objective from per-task losses and applies one Adam
/// update to the solver (and, for uncert, to the task weights). One instance
/// per training run; owns the optimizer state.
class StrategyStepper {
 public:
  StrategyStepper(nn::SolverNet& net, int n_tasks, Strategy strategy,
                  double lr, std::uint64_t seed);

  struct StepInfo {
    double weighted_loss = 0.0;
    std::vector<double> sigma;
    int n_projections = 0;
  };
  /// task_losses must be scalar nodes of tape, built over bound.
  StepInfo step(ad::Tape& tape, const nn::SolverNet::Bound& bound,
                std::span<const ad::Var> task_losses, int iter);

  /// Weighted loss and sigmas at the current weights, without stepping.
  StepInfo peek(std::span<const double> task_losses) const;

  std::vector<double> log_variances() const;

 private:
  nn::SolverNet* net_ = nullptr;
  Strategy strategy_ = Strategy::Unweighted;
  int n_tasks_ = 1;
  std::uint64_t seed_ = 0;
  mtl::UncertaintyWeights uncert_;
  std::vector<nn::ParamRef> solver_params_;
  std::vector<nn::ParamRef> all_params_;  // solver + uncert weights
  nn::AdamState adam_;
  std::vector<int> coord_owner_;  // flat coordinate -> head task, -1 shared
};

/// Algorithm: per iteration either refresh the collocation set through the
/// adversarial generator (solver frozen) or take one strategy step on the
/// current set (generator frozen). Trains net in place from its current
/// parameters. Throws on non-finite losses, naming the iteration and term.
TrainResult train_pinn(std::span<const pde::PdeTask> tasks, nn::SolverNet& net,
                       const TrainOptions& opt);

}  // namespace pinnmtl::train
