#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pinnmtl/tape.hpp"

namespace pinnmtl::pde {

struct BoundaryPoint {
  Eigen::VectorXd x;  // full coordinate vector, time first where present
  double value = 0.0;
};

/// Collocation data for one run. Interior rows drawn by the base sampler
/// come first; rows appended by resampling follow, so provenance is the row
/// position relative to n_original.
struct SampleSet {
  Eigen::MatrixXd interior;  // rows = points, cols = input dims
  Eigen::Index n_original = 0;
  std::vector<BoundaryPoint> boundary;

  bool transformed(Eigen::Index row) const { return row >= n_original; }
  Eigen::Index n_transformed() const { return interior.rows() - n_original; }
};

/// Differentiation helpers handed to residual definitions. u and the
/// coordinate columns are one value per collocation point; d() and grad()
/// differentiate through the recorded forward pass, so their results can be
/// differentiated again (up to second order overall).
class ResidualCtx {
 public:
  ResidualCtx(ad::Tape& tape, std::span<const ad::Var> coords, ad::Var u,
              const Eigen::VectorXd& lambda)
      : tape(tape), coords(coords), u(u), lambda(lambda) {}

  ad::Tape& tape;
  std::span<const ad::Var> coords;
  ad::Var u;
  const Eigen::VectorXd& lambda;

  /// Per-point derivative of f along coordinate dim.
  ad::Var d(ad::Var f, int dim);
  /// All coordinate derivatives of f in one backward sweep.
  const std::vector<ad::Var>& grad(ad::Var f);

 private:
  std::vector<std::pair<std::uint32_t, std::vector<ad::Var>>> cache_;
};

enum class AuxRule {
  ScaleAll,       // lambda_aux = alpha * lambda
  SetComponent0,  // lambda_aux[0] = aux_value (alpha unused)
  SetForcing,     // forcing scale = aux_value (alpha unused)
};

/// One PDE problem: geometry, coefficients, residual operator, boundary
/// data and samplers. Value semantics; auxiliary variants are copies with
/// altered coefficients.
struct PdeTask {
  std::string name;
  int input_dim = 1;
  Eigen::VectorXd lb, ub;
  Eigen::VectorXd lambda;
  AuxRule aux_rule = AuxRule::ScaleAll;
  double aux_value = 0.0;

  std::function<ad::Var(ResidualCtx&)> residual;
  /// Optional scalar penalty over u at the original interior points
  /// (normalization-style constraints). Added squared-free: the closure
  /// returns the full penalty term.
  std::function<ad::Var(ad::Tape&, ad::Var)> global_constraint;
  std::function<double(const Eigen::VectorXd&)> exact;  // may be null

  std::function<Eigen::MatrixXd(int n, std::uint64_t seed)> sample_interior;
  std::function<std::vector<BoundaryPoint>(int n, std::uint64_t seed)>
      sample_boundary;

  std::vector<BoundaryPoint> boundary;  // filled per run by the harness
};

/// Copy of task with coefficients rescaled by alpha (or the task-specific
/// variation). alpha must be positive.
PdeTask make_auxiliary(const PdeTask& task, double alpha);

/// Builds one network evaluation shared by all tasks: given the coordinate
/// columns, returns one output column per task.
using MultiHead =
    std::function<std::vector<ad::Var>(ad::Tape&, std::span<const ad::Var>)>;

struct LossParts {
  ad::Var total;
  ad::Var interior;
  std::optional<ad::Var> boundary;
  std::optional<ad::Var> constraint;
  ad::Var residual_sq;  // per-point squared residual column
};

/// Mean squared residual of one task at externally built coordinate
/// columns (used for resampled points, where coordinates are themselves
/// differentiable).
LossParts residual_loss_at(ad::Tape& tape, const PdeTask& task, ad::Var u,
                           std::span<const ad::Var> coords);

/// Full composite loss for every task over one sample set:
///   mean squared residual over all interior rows
/// + mean squared boundary mismatch
/// + the task's global constraint over the original rows, when present.
std::vector<LossParts> physics_informed_losses(ad::Tape& tape,
                                               std::span<const PdeTask> tasks,
                                               const MultiHead& net,
                                               const SampleSet& samples);

/// Single-task convenience over physics_informed_losses.
LossParts physics_informed_loss(ad::Tape& tape, const PdeTask& task,
                                const MultiHead& net,
                                const SampleSet& samples);

// benchmark factories
PdeTask burgers_task();
PdeTask poisson_task();
PdeTask fokker_planck_task();
PdeTask laplace_task();

/// Fokker-Planck collocation grid: lb..ub inclusive with the task's fixed
/// spacing.
extern const double kFokkerPlanckDx;

}  // namespace pinnmtl::pde
