#include "pinnmtl/adversarial.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace pinnmtl::adv {

void validate(const AdvConfig& cfg) {
  if (cfg.refresh_every < 1)
    throw std::invalid_argument("adv: refresh_every must be >= 1");
  if (cfg.limit_divisor < 1)
    throw std::invalid_argument("adv: limit_divisor must be >= 1");
  if (cfg.gen_steps < 1)
    throw std::invalid_argument("adv: gen_steps must be >= 1");
  if (!(cfg.proportion > 0.0) || cfg.proportion > 1.0)
    throw std::invalid_argument("adv: proportion must be in (0, 1]");
  if (cfg.gen_hidden < 1)
    throw std::invalid_argument("adv: gen_hidden must be >= 1");
  if (!(cfg.gen_lr > 0.0))
    throw std::invalid_argument("adv: gen_lr must be positive");
}

Eigen::VectorXd scale_to_unit(const Eigen::VectorXd& a,
                              const Eigen::VectorXd& lb,
                              const Eigen::VectorXd& ub) {
  if (a.size() != lb.size() || a.size() != ub.size())
    throw std::invalid_argument("scale_to_unit: dimension mismatch");
  if (((ub - lb).array() <= 0.0).any())
    throw std::invalid_argument("scale_to_unit: needs ub > lb componentwise");
  return (a - lb).array() / (ub - lb).array();
}

Eigen::MatrixXd scale_rows_to_unit(const Eigen::MatrixXd& pts,
                                   const Eigen::VectorXd& lb,
                                   const Eigen::VectorXd& ub) {
  if (pts.cols() != lb.size() || pts.cols() != ub.size())
    throw std::invalid_argument("scale_rows_to_unit: dimension mismatch");
  if (((ub - lb).array() <= 0.0).any())
    throw std::invalid_argument(
        "scale_rows_to_unit: needs ub > lb componentwise");
  Eigen::MatrixXd out = pts;
  for (Eigen::Index j = 0; j < pts.cols(); ++j) {
    out.col(j) = (pts.col(j).array() - lb(j)) / (ub(j) - lb(j));
  }
  return out;
}

GenObjective generator_objective(ad::Tape& tape,
                                 std::span<const ad::Var> raw_cols,
                                 const Eigen::MatrixXd& original,
                                 std::span<const pde::PdeTask> tasks,
                                 const pde::MultiHead& solver) {
  if (tasks.empty())
    throw std::invalid_argument("generator_objective: no tasks");
  const Eigen::VectorXd& lb = tasks[0].lb;
  const Eigen::VectorXd& ub = tasks[0].ub;
  const auto dim = original.cols();
  if (static_cast<Eigen::Index>(raw_cols.size()) != dim)
    throw std::invalid_argument(
        "generator_objective: one raw column per input dimension expected");

  const Eigen::MatrixXd unit = scale_rows_to_unit(original, lb, ub);
  const double n = static_cast<double>(original.rows());

  GenObjective obj;
  ad::Var prox_sum{};
  for (Eigen::Index j = 0; j < dim; ++j) {
    ad::Var squashed = ad::sigmoid(raw_cols[j]);
    obj.mapped.push_back(tape.affine(squashed, ub(j) - lb(j), lb(j)));
    ad::Var sq =
        tape.sum_all(tape.square(tape.sub(squashed, tape.constant(unit.col(j)))));
    prox_sum = (j == 0) ? sq : tape.add(prox_sum, sq);
  }
  obj.proximity = tape.affine(prox_sum, 1.0 / n, 0.0);

  std::vector<ad::Var> heads = solver(tape, obj.mapped);
  if (heads.size() < tasks.size())
    throw std::invalid_argument("generator_objective: solver has fewer heads "
                                "than tasks");
  ad::Var loss_sum{};
  for (std::size_t j = 0; j < tasks.size(); ++j) {
    ad::Var lj = pde::residual_loss_at(tape, tasks[j], heads[j], obj.mapped).total;
    obj.task_losses.push_back(lj);
    loss_sum = (j == 0) ? lj : tape.add(loss_sum, lj);
  }
  obj.total = tape.sub(obj.proximity, loss_sum);
  return obj;
}

double summed_residual_loss(std::span<const pde::PdeTask> tasks,
                            const nn::SolverNet& solver,
                            const Eigen::MatrixXd& points) {
  ad::Tape tape;
  auto bound = solver.bind(tape);
  std::vector<ad::Var> coords;
  coords.reserve(static_cast<std::size_t>(points.cols()));
  for (Eigen::Index j = 0; j < points.cols(); ++j)
    coords.push_back(tape.input(points.col(j)));
  std::vector<ad::Var> heads = solver.forward(tape, bound, coords);
  double total = 0.0;
  for (std::size_t j = 0; j < tasks.size(); ++j)
    total +=
        tape.scalar(pde::residual_loss_at(tape, tasks[j], heads[j], coords).total);
  return total;
}

Resampler::Resampler(int dim, const AdvConfig& cfg, std::uint64_t seed)
    : cfg_(cfg) {
  validate(cfg);
  if (dim < 1) throw std::invalid_argument("adv: dim must be >= 1");
  gen_ = nn::Mlp({dim, {cfg.gen_hidden}, dim});
  gen_.init(nn::derive_seed(seed, 0));
  adam_ = nn::AdamState(gen_.params(), {.lr = cfg.gen_lr});
  pick_.seed(nn::derive_seed(seed, 1));
}

RefreshStats Resampler::refresh(pde::SampleSet& samples,
                                std::span<const pde::PdeTask> tasks,
                                const nn::SolverNet& solver, int iter) {
  if (tasks.empty()) throw std::invalid_argument("refresh: no tasks");
  if (samples.n_original < 1)
    throw std::invalid_argument("refresh: empty sample set");
  const Eigen::MatrixXd original =
      samples.interior.topRows(samples.n_original);
  const Eigen::VectorXd& lb = tasks[0].lb;
  const Eigen::VectorXd& ub = tasks[0].ub;
  const auto dim = original.cols();

  auto gen_params = gen_.params();
  for (int step = 0; step < cfg_.gen_steps; ++step) {
    tape_.reset();
    auto gbound = gen_.bind(tape_);
    auto sbound = solver.bind(tape_);
    std::vector<ad::Var> coords;
    for (Eigen::Index j = 0; j < dim; ++j)
      coords.push_back(tape_.input(original.col(j)));
    std::vector<ad::Var> raw = gen_.forward(tape_, gbound, coords);
    pde::MultiHead fwd = [&solver, &sbound](ad::Tape& t,
                                            std::span<const ad::Var> cols) {
      return solver.forward(t, sbound, cols);
    };
    GenObjective obj =
        generator_objective(tape_, raw, original, tasks, fwd);
    auto grads = tape_.gradient(obj.total, gbound.all);
    adam_.step(gen_params, grads);
  }

  // final mapping pass under the updated generator
  tape_.reset();
  auto gbound = gen_.bind(tape_);
  std::vector<ad::Var> coords;
  for (Eigen::Index j = 0; j < dim; ++j)
    coords.push_back(tape_.input(original.col(j)));
  std::vector<ad::Var> raw = gen_.forward(tape_, gbound, coords);
  Eigen::MatrixXd mapped(original.rows(), dim);
  for (Eigen::Index j = 0; j < dim; ++j) {
    ad::Var col = tape_.affine(ad::sigmoid(raw[static_cast<std::size_t>(j)]),
                               ub(j) - lb(j), lb(j));
    mapped.col(j) = tape_.value(col);
  }

  const auto k = static_cast<Eigen::Index>(
      std::floor(cfg_.proportion * static_cast<double>(original.rows())));
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(original.rows()));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  std::shuffle(idx.begin(), idx.end(), pick_);
  idx.resize(static_cast<std::size_t>(k));
  std::sort(idx.begin(), idx.end());

  Eigen::MatrixXd transformed(k, dim);
  for (Eigen::Index i = 0; i < k; ++i)
    transformed.row(i) = mapped.row(idx[static_cast<std::size_t>(i)]);

  samples.interior.resize(original.rows() + k, dim);
  samples.interior.topRows(original.rows()) = original;
  samples.interior.bottomRows(k) = transformed;

  RefreshStats stats;
  stats.iter = iter;
  stats.n_transformed = k;
  stats.residual_original = summed_residual_loss(tasks, solver, original);
  stats.residual_transformed =
      (k > 0) ? summed_residual_loss(tasks, solver, transformed) : 0.0;
  return stats;
}

}  // namespace pinnmtl::adv
