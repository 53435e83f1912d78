#include "pinnmtl/train.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace pinnmtl::train {

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::Unweighted: return "unweighted";
    case Strategy::Uncert: return "uncert";
    case Strategy::PcGrad: return "pcgrad";
  }
  return "unweighted";
}

std::optional<Strategy> strategy_from_string(std::string_view s) {
  if (s == "unweighted") return Strategy::Unweighted;
  if (s == "uncert") return Strategy::Uncert;
  if (s == "pcgrad") return Strategy::PcGrad;
  return std::nullopt;
}

namespace {

void check_finite(double v, int iter, const std::string& term) {
  if (!std::isfinite(v)) {
    throw std::runtime_error("train: non-finite " + term + " at iteration " +
                             std::to_string(iter) + " (value " +
                             std::to_string(v) + ")");
  }
}

}  // namespace

StrategyStepper::StrategyStepper(nn::SolverNet& net, int n_tasks,
                                 Strategy strategy, double lr,
                                 std::uint64_t seed)
    : net_(&net), strategy_(strategy), n_tasks_(n_tasks), seed_(seed) {
  if (n_tasks < 1) throw std::invalid_argument("stepper: need >= 1 task");
  if (!(lr > 0.0)) throw std::invalid_argument("stepper: lr must be positive");
  if (strategy == Strategy::PcGrad && n_tasks < 2) {
    throw std::invalid_argument("stepper: pcgrad needs >= 2 tasks");
  }
  if (net.n_heads() != n_tasks) {
    throw std::invalid_argument("stepper: network has " +
                                std::to_string(net.n_heads()) +
                                " heads for " + std::to_string(n_tasks) +
                                " tasks");
  }
  if (strategy == Strategy::Uncert) {
    uncert_ = mtl::UncertaintyWeights(n_tasks);
  }
  solver_params_ = net.params();
  all_params_ = solver_params_;
  if (strategy == Strategy::Uncert) {
    auto up = uncert_.params();
    all_params_.insert(all_params_.end(), up.begin(), up.end());
  }
  adam_ = nn::AdamState(all_params_, {.lr = lr});

  // head parameters are task-private: their coordinates bypass the
  // cross-task projection and receive their own task's gradient directly
  coord_owner_.assign(nn::param_count(solver_params_), -1);
  for (int h = 0; h < n_tasks; ++h) {
    std::vector<std::string> head_names;
    for (const auto& p : net.head_params(h)) head_names.push_back(p.name);
    std::size_t offset = 0;
    for (const auto& p : solver_params_) {
      const auto len = static_cast<std::size_t>(p.value->size());
      for (const auto& name : head_names) {
        if (p.name == name) {
          std::fill_n(coord_owner_.begin() + static_cast<std::ptrdiff_t>(offset),
                      len, h);
          break;
        }
      }
      offset += len;
    }
  }
}

StrategyStepper::StepInfo StrategyStepper::step(
    ad::Tape& tape, const nn::SolverNet::Bound& bound,
    std::span<const ad::Var> task_losses, int iter) {
  if (static_cast<int>(task_losses.size()) != n_tasks_) {
    throw std::invalid_argument("stepper: loss count != task count");
  }
  std::vector<double> values(task_losses.size());
  for (std::size_t j = 0; j < task_losses.size(); ++j) {
    values[j] = tape.scalar(task_losses[j]);
    check_finite(values[j], iter, "loss for task " + std::to_string(j));
  }

  StepInfo info;
  info.sigma.assign(static_cast<std::size_t>(n_tasks_), 1.0);

  switch (strategy_) {
    case Strategy::Unweighted: {
      ad::Var total = task_losses[0];
      for (std::size_t j = 1; j < task_losses.size(); ++j) {
        total = tape.add(total, task_losses[j]);
      }
      info.weighted_loss = tape.scalar(total);
      check_finite(info.weighted_loss, iter, "total loss");
      auto grads = tape.gradient(total, bound.all());
      adam_.step(all_params_, grads);
      break;
    }
    case Strategy::Uncert: {
      for (int j = 0; j < n_tasks_; ++j) {
        info.sigma[static_cast<std::size_t>(j)] =
            std::sqrt(uncert_.variance(j));
      }
      std::vector<ad::Var> s_vars = uncert_.bind(tape);
      ad::Var total = mtl::uncertainty_weighted_loss(tape, task_losses, s_vars);
      info.weighted_loss = tape.scalar(total);
      check_finite(info.weighted_loss, iter, "weighted loss");
      std::vector<ad::Var> vars = bound.all();
      vars.insert(vars.end(), s_vars.begin(), s_vars.end());
      auto grads = tape.gradient(total, vars);
      adam_.step(all_params_, grads);
      break;
    }
    case Strategy::PcGrad: {
      std::vector<Eigen::VectorXd> flat(task_losses.size());
      for (std::size_t j = 0; j < task_losses.size(); ++j) {
        auto grads = tape.gradient(task_losses[j], bound.all());
        flat[j] = nn::flatten_mats(grads);
        info.weighted_loss += values[j];
      }
      const Eigen::Index total_len = flat[0].size();
      std::vector<Eigen::Index> shared;
      shared.reserve(static_cast<std::size_t>(total_len));
      for (Eigen::Index c = 0; c < total_len; ++c) {
        if (coord_owner_[static_cast<std::size_t>(c)] < 0) shared.push_back(c);
      }
      std::vector<Eigen::VectorXd> shared_grads(flat.size());
      for (std::size_t j = 0; j < flat.size(); ++j) {
        shared_grads[j].resize(static_cast<Eigen::Index>(shared.size()));
        for (std::size_t c = 0; c < shared.size(); ++c) {
          shared_grads[j](static_cast<Eigen::Index>(c)) = flat[j](shared[c]);
        }
      }
      Eigen::VectorXd combined = mtl::pcgrad(
          shared_grads,
          nn::derive_seed(nn::derive_seed(seed_, streams::kPcGradOrder),
                          static_cast<std::uint64_t>(iter)),
          &info.n_projections);
      Eigen::VectorXd update = Eigen::VectorXd::Zero(total_len);
      for (std::size_t c = 0; c < shared.size(); ++c) {
        update(shared[c]) = combined(static_cast<Eigen::Index>(c));
      }
      for (Eigen::Index c = 0; c < total_len; ++c) {
        const int owner = coord_owner_[static_cast<std::size_t>(c)];
        if (owner >= 0) update(c) = flat[static_cast<std::size_t>(owner)](c);
      }
      adam_.step(all_params_, nn::unflatten_like(update, all_params_));
      break;
    }
  }
  return info;
}

StrategyStepper::StepInfo StrategyStepper::peek(
    std::span<const double> task_losses) const {
  StepInfo info;
  info.sigma.assign(static_cast<std::size_t>(n_tasks_), 1.0);
  if (strategy_ == Strategy::Uncert) {
    for (int j = 0; j < n_tasks_; ++j) {
      const double s = uncert_.log_variance(j);
      info.sigma[static_cast<std::size_t>(j)] = std::sqrt(std::exp(s));
      info.weighted_loss +=
          0.5 * std::exp(-s) * task_losses[static_cast<std::size_t>(j)] +
          0.5 * s;
    }
  } else {
    for (double v : task_losses) info.weighted_loss += v;
  }
  return info;
}

std::vector<double> StrategyStepper::log_variances() const {
  std::vector<double> out;
  if (strategy_ == Strategy::Uncert) {
    for (int j = 0; j < n_tasks_; ++j) out.push_back(uncert_.log_variance(j));
  }
  return out;
}

TrainResult train_pinn(std::span<const pde::PdeTask> tasks, nn::SolverNet& net,
                       const TrainOptions& opt) {
  if (tasks.empty()) throw std::invalid_argument("train: no tasks");
  if (opt.epochs < 0) throw std::invalid_argument("train: epochs must be >= 0");
  if (opt.n_interior < 1) {
    throw std::invalid_argument("train: n_interior must be >= 1");
  }
  if (opt.n_boundary < 0) {
    throw std::invalid_argument("train: n_boundary must be >= 0");
  }
  if (net.input_dim() != tasks[0].input_dim) {
    throw std::invalid_argument("train: network input dimension != task's");
  }

  TrainResult result;
  result.samples.interior =
      tasks[0].sample_interior(opt.n_interior,
                               nn::derive_seed(opt.seed, streams::kInterior));
  result.samples.n_original = result.samples.interior.rows();
  result.samples.boundary =
      tasks[0].sample_boundary(opt.n_boundary,
                               nn::derive_seed(opt.seed, streams::kBoundary));
  if (opt.noise_std > 0.0) {
    std::mt19937_64 rng(nn::derive_seed(opt.seed, streams::kNoise));
    std::normal_distribution<double> draw(0.0, 1.0);
    for (auto& b : result.samples.boundary) b.value += opt.noise_std * draw(rng);
  }

  StrategyStepper stepper(net, static_cast<int>(tasks.size()), opt.strategy,
                          opt.lr, opt.seed);
  std::optional<adv::Resampler> resampler;
  if (opt.adversarial) {
    resampler.emplace(tasks[0].input_dim, *opt.adversarial,
                      nn::derive_seed(opt.seed, streams::kGenerator));
  }

  ad::Tape tape;
  result.log.reserve(static_cast<std::size_t>(opt.epochs));
  for (int iter = 0; iter < opt.epochs; ++iter) {
    const bool refresh =
        resampler && iter % opt.adversarial->refresh_every == 0 &&
        iter <= opt.epochs / opt.adversarial->limit_divisor;

    IterRecord rec;
    rec.iter = iter;
    if (refresh) {
      result.refreshes.push_back(
          resampler->refresh(result.samples, tasks, net, iter));
      // log the losses the next solver step will see
      tape.reset();
      auto bound = net.bind(tape);
      pde::MultiHead fwd = [&net, &bound](ad::Tape& t,
                                          std::span<const ad::Var> cols) {
        return net.forward(t, bound, cols);
      };
      auto losses = pde::physics_informed_losses(tape, tasks, fwd, result.samples);
      for (std::size_t j = 0; j < losses.size(); ++j) {
        rec.task_loss.push_back(tape.scalar(losses[j].total));
        check_finite(rec.task_loss.back(), iter,
                     "loss for task " + std::to_string(j));
      }
      auto info = stepper.peek(rec.task_loss);
      rec.weighted_loss = info.weighted_loss;
      rec.sigma = info.sigma;
    } else {
      tape.reset();
      auto bound = net.bind(tape);
      pde::MultiHead fwd = [&net, &bound](ad::Tape& t,
                                          std::span<const ad::Var> cols) {
        return net.forward(t, bound, cols);
      };
      auto losses = pde::physics_informed_losses(tape, tasks, fwd, result.samples);
      std::vector<ad::Var> loss_vars;
      loss_vars.reserve(losses.size());
      for (const auto& l : losses) loss_vars.push_back(l.total);
      for (std::size_t j = 0; j < losses.size(); ++j) {
        rec.task_loss.push_back(tape.scalar(loss_vars[j]));
      }
      auto info = stepper.step(tape, bound, loss_vars, iter);
      rec.weighted_loss = info.weighted_loss;
      rec.sigma = info.sigma;
      rec.n_projections = info.n_projections;
    }
    rec.n_transformed = result.samples.n_transformed();
    result.log.push_back(std::move(rec));
  }

  result.log_variances = stepper.log_variances();
  if (resampler) result.generator = resampler->generator();
  return result;
}

}  // namespace pinnmtl::train
