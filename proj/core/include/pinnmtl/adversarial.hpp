#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "pinnmtl/nn.hpp"
#include "pinnmtl/pde.hpp"
#include "pinnmtl/tape.hpp"

namespace pinnmtl::adv {

struct AdvConfig {
  int refresh_every = 100;   // refresh when iter is a multiple of this
  int limit_divisor = 2;     // refreshes stop once iter exceeds epochs / this
  int gen_steps = 10;        // generator updates per refresh
  double proportion = 0.1;   // appended fraction of the original interior set
  int gen_hidden = 32;
  double gen_lr = 0.005;
};

/// Throws std::invalid_argument on out-of-range fields.
void validate(const AdvConfig& cfg);

/// Componentwise (a - lb) / (ub - lb).
Eigen::VectorXd scale_to_unit(const Eigen::VectorXd& a,
                              const Eigen::VectorXd& lb,
                              const Eigen::VectorXd& ub);
/// Row-wise version over a points matrix (one point per row).
Eigen::MatrixXd scale_rows_to_unit(const Eigen::MatrixXd& pts,
                                   const Eigen::VectorXd& lb,
                                   const Eigen::VectorXd& ub);

struct GenObjective {
  ad::Var total;      // proximity - sum of task losses
  ad::Var proximity;  // mean squared displacement in unit coordinates
  std::vector<ad::Var> task_losses;
  std::vector<ad::Var> mapped;  // domain coordinates, one column per dim
};

/// Generator objective over raw (pre-squash) output columns: the squashed
/// outputs are pulled toward the normalized originals while the solver's
/// residual losses at the mapped points are pushed up. Gradients reach the
/// generator through raw_cols; the solver itself is left untouched.
GenObjective generator_objective(ad::Tape& tape,
                                 std::span<const ad::Var> raw_cols,
                                 const Eigen::MatrixXd& original,
                                 std::span<const pde::PdeTask> tasks,
                                 const pde::MultiHead& solver);

struct RefreshStats {
  int iter = 0;
  double residual_original = 0.0;     // summed task interior losses
  double residual_transformed = 0.0;  // same, over the appended points
  Eigen::Index n_transformed = 0;
};

/// Summed mean-square residual of every task at the given points, under the
/// solver's current parameters. Shared by refresh bookkeeping and tests.
double summed_residual_loss(std::span<const pde::PdeTask> tasks,
                            const nn::SolverNet& solver,
                            const Eigen::MatrixXd& points);

/// Owns the generator network, its optimizer and its selection stream, all
/// of which persist across refreshes.
class Resampler {
 public:
  Resampler(int dim, const AdvConfig& cfg, std::uint64_t seed);

  /// One refresh: gen_steps generator updates against the frozen solver,
  /// then samples.interior is rebuilt as the original rows followed by
  /// floor(proportion * n_original) freshly transformed rows. Solver
  /// parameters are never written.
  RefreshStats refresh(pde::SampleSet& samples,
                       std::span<const pde::PdeTask> tasks,
                       const nn::SolverNet& solver, int iter);

  nn::Mlp& generator() { return gen_; }
  const nn::Mlp& generator() const { return gen_; }

 private:
  AdvConfig cfg_;
  nn::Mlp gen_;
  nn::AdamState adam_;
  std::mt19937_64 pick_;  // transformed-subset selection stream
  ad::Tape tape_;         // scratch, reset per generator step
};

}  // namespace pinnmtl::adv
