#include "pinnmtl/pde.hpp"

#include <array>
#include <stdexcept>

namespace pinnmtl::pde {

ad::Var ResidualCtx::d(ad::Var f, int dim) {
  if (dim < 0 || static_cast<std::size_t>(dim) >= coords.size()) {
    throw std::invalid_argument("ResidualCtx::d: no such coordinate");
  }
  const std::array<ad::Var, 1> wrt{coords[static_cast<std::size_t>(dim)]};
  return tape.gradient_nodes(tape.sum_all(f), wrt)[0];
}

const std::vector<ad::Var>& ResidualCtx::grad(ad::Var f) {
  for (const auto& [id, g] : cache_) {
    if (id == f.id) return g;
  }
  auto g = tape.gradient_nodes(tape.sum_all(f), coords);
  cache_.emplace_back(f.id, std::move(g));
  return cache_.back().second;
}

PdeTask make_auxiliary(const PdeTask& task, double alpha) {
  if (!(alpha > 0.0)) {
    throw std::invalid_argument(
        "make_auxiliary: coefficient scale must be positive");
  }
  PdeTask aux = task;
  aux.name = task.name + "_aux";
  switch (task.aux_rule) {
    case AuxRule::ScaleAll:
      aux.lambda = alpha * task.lambda;
      break;
    case AuxRule::SetComponent0:
    case AuxRule::SetForcing:
      if (aux.lambda.size() < 1) {
        throw std::invalid_argument("make_auxiliary: task has no coefficients");
      }
      aux.lambda(0) = task.aux_value;
      break;
  }
  // the auxiliary equation solves a different problem; its reference
  // solution is not the primary one
  aux.exact = nullptr;
  return aux;
}

LossParts residual_loss_at(ad::Tape& tape, const PdeTask& task, ad::Var u,
                           std::span<const ad::Var> coords) {
  ResidualCtx ctx(tape, coords, u, task.lambda);
  ad::Var r = task.residual(ctx);
  ad::Var sq = tape.square(r);
  const double n = static_cast<double>(tape.value(sq).rows());
  ad::Var interior = tape.affine(tape.sum_all(sq), 1.0 / n, 0.0);
  LossParts parts;
  parts.interior = interior;
  parts.total = interior;
  parts.residual_sq = sq;
  return parts;
}

std::vector<LossParts> physics_informed_losses(ad::Tape& tape,
                                               std::span<const PdeTask> tasks,
                                               const MultiHead& net,
                                               const SampleSet& samples) {
  if (tasks.empty()) {
    throw std::invalid_argument("physics_informed_losses: no tasks");
  }
  const Eigen::Index n_int = samples.interior.rows();
  if (n_int < 1) {
    throw std::invalid_argument("physics_informed_losses: no interior points");
  }
  std::vector<ad::Var> coords;
  coords.reserve(static_cast<std::size_t>(samples.interior.cols()));
  for (Eigen::Index j = 0; j < samples.interior.cols(); ++j) {
    coords.push_back(tape.input(samples.interior.col(j)));
  }
  std::vector<ad::Var> heads = net(tape, coords);
  if (heads.size() < tasks.size()) {
    throw std::invalid_argument(
        "physics_informed_losses: fewer heads than tasks");
  }

  // boundary points are shared by all tasks; one forward pass serves them
  std::vector<ad::Var> heads_b;
  ad::Var target_b;
  const Eigen::Index n_b = static_cast<Eigen::Index>(samples.boundary.size());
  if (n_b > 0) {
    const auto d = static_cast<Eigen::Index>(samples.boundary[0].x.size());
    Eigen::MatrixXd bx(n_b, d);
    Eigen::MatrixXd bt(n_b, 1);
    for (Eigen::Index i = 0; i < n_b; ++i) {
      bx.row(i) = samples.boundary[static_cast<std::size_t>(i)].x.transpose();
      bt(i, 0) = samples.boundary[static_cast<std::size_t>(i)].value;
    }
    std::vector<ad::Var> bcols;
    for (Eigen::Index j = 0; j < d; ++j) bcols.push_back(tape.constant(bx.col(j)));
    heads_b = net(tape, bcols);
    target_b = tape.constant(bt);
  }

  // constraints act on the original rows only; reuse the interior forward
  // pass when nothing was appended
  bool any_constraint = false;
  for (const auto& t : tasks) any_constraint |= static_cast<bool>(t.global_constraint);
  std::vector<ad::Var> heads_orig = heads;
  if (any_constraint && samples.n_transformed() > 0) {
    std::vector<ad::Var> ocols;
    for (Eigen::Index j = 0; j < samples.interior.cols(); ++j) {
      ocols.push_back(
          tape.constant(samples.interior.col(j).head(samples.n_original)));
    }
    heads_orig = net(tape, ocols);
  }

  std::vector<LossParts> out;
  out.reserve(tasks.size());
  for (std::size_t k = 0; k < tasks.size(); ++k) {
    const PdeTask& task = tasks[k];
    LossParts parts = residual_loss_at(tape, task, heads[k], coords);
    if (n_b > 0) {
      ad::Var diff = tape.sub(heads_b[k], target_b);
      parts.boundary = tape.affine(tape.sum_all(tape.square(diff)),
                                   1.0 / static_cast<double>(n_b), 0.0);
      parts.total = tape.add(parts.total, *parts.boundary);
    }
    if (task.global_constraint) {
      parts.constraint = task.global_constraint(tape, heads_orig[k]);
      parts.total = tape.add(parts.total, *parts.constraint);
    }
    out.push_back(parts);
  }
  return out;
}

LossParts physics_informed_loss(ad::Tape& tape, const PdeTask& task,
                                const MultiHead& net,
                                const SampleSet& samples) {
  return physics_informed_losses(tape, std::span<const PdeTask>(&task, 1), net,
                                 samples)[0];
}

}  // namespace pinnmtl::pde
