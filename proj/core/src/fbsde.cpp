#include "pinnmtl/fbsde.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace pinnmtl::fbsde {

BrownianBatch BrownianBatch::sample(int n_paths, int n_steps, int d, double dt,
                                    std::uint64_t seed) {
  if (n_paths < 1 || n_steps < 1 || d < 1 || !(dt > 0.0)) {
    throw std::invalid_argument("BrownianBatch: bad dimensions");
  }
  BrownianBatch batch;
  batch.dt = dt;
  batch.increments.resize(static_cast<std::size_t>(n_steps));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> draw(0.0, std::sqrt(dt));
  for (auto& inc : batch.increments) {
    inc.resize(n_paths, d);
    for (Eigen::Index i = 0; i < inc.rows(); ++i) {
      for (Eigen::Index j = 0; j < inc.cols(); ++j) inc(i, j) = draw(rng);
    }
  }
  return batch;
}

namespace {

std::vector<ad::Var> forward_at(ad::Tape& tape, const nn::SolverNet& net,
                                const nn::SolverNet::Bound& bound, ad::Var t,
                                std::span<const ad::Var> x) {
  std::vector<ad::Var> cols;
  cols.reserve(x.size() + 1);
  cols.push_back(t);
  cols.insert(cols.end(), x.begin(), x.end());
  return net.forward(tape, bound, cols);
}

}  // namespace

PathLoss fbsnn_loss(ad::Tape& tape, const FbsdeProblem& p,
                    const nn::SolverNet& net,
                    const nn::SolverNet::Bound& bound, int head,
                    const BrownianBatch& batch, PathRecord* record) {
  if (p.d < 1 || p.xi.size() != p.d) {
    throw std::invalid_argument("fbsnn_loss: inconsistent state dimension");
  }
  if (net.input_dim() != p.d + 1) {
    throw std::invalid_argument("fbsnn_loss: network wants " +
                                std::to_string(net.input_dim()) +
                                " inputs, problem supplies " +
                                std::to_string(p.d + 1));
  }
  if (static_cast<int>(batch.increments.size()) != p.n_steps) {
    throw std::invalid_argument("fbsnn_loss: batch has wrong step count");
  }
  const int m = p.n_paths;
  for (const auto& inc : batch.increments) {
    if (inc.rows() != m || inc.cols() != p.d) {
      throw std::invalid_argument("fbsnn_loss: batch has wrong shape");
    }
  }
  const double dt = p.T / p.n_steps;

  if (record != nullptr) {
    record->y.resize(m, p.n_steps + 1);
    record->x.assign(static_cast<std::size_t>(p.n_steps + 1),
                     Eigen::MatrixXd(m, p.d));
  }
  auto snapshot = [&](int n, std::span<const ad::Var> x, ad::Var y) {
    if (record == nullptr) return;
    record->y.col(n) = tape.value(y);
    for (int j = 0; j < p.d; ++j) {
      record->x[static_cast<std::size_t>(n)].col(j) =
          tape.value(x[static_cast<std::size_t>(j)]);
    }
  };

  std::vector<ad::Var> x;
  x.reserve(static_cast<std::size_t>(p.d));
  for (int j = 0; j < p.d; ++j) {
    x.push_back(tape.constant(Eigen::VectorXd::Constant(m, p.xi(j))));
  }
  ad::Var t_col = tape.constant(Eigen::VectorXd::Zero(m));
  ad::Var y = forward_at(tape, net, bound, t_col, x)[static_cast<std::size_t>(head)];
  PathLoss out;
  out.y0 = y;
  snapshot(0, x, y);

  ad::Var total{};
  bool have_total = false;
  for (int n = 0; n < p.n_steps; ++n) {
    std::vector<ad::Var> z = tape.gradient_nodes(tape.sum_all(y), x);
    SdeCtx ctx{tape, t_col, x, y, z};
    ad::Var phi = p.phi(ctx);
    std::vector<ad::Var> sig = p.sigma(ctx);
    std::vector<ad::Var> drift;
    if (p.mu) drift = p.mu(ctx);

    std::vector<ad::Var> dw;
    dw.reserve(static_cast<std::size_t>(p.d));
    for (int j = 0; j < p.d; ++j) {
      dw.push_back(tape.constant(
          batch.increments[static_cast<std::size_t>(n)].col(j)));
    }

    // Z' sigma dW with diagonal sigma collapses to a per-dimension sum
    ad::Var ito{};
    std::vector<ad::Var> x_next(static_cast<std::size_t>(p.d));
    for (int j = 0; j < p.d; ++j) {
      const auto ju = static_cast<std::size_t>(j);
      ad::Var vol_step = tape.mul(sig[ju], dw[ju]);
      ad::Var term = tape.mul(z[ju], vol_step);
      ito = (j == 0) ? term : tape.add(ito, term);
      x_next[ju] = tape.add(x[ju], vol_step);
      if (p.mu) {
        x_next[ju] = tape.add(x_next[ju], tape.affine(drift[ju], dt, 0.0));
      }
    }

    t_col = tape.constant(Eigen::VectorXd::Constant(m, (n + 1) * dt));
    ad::Var y_next =
        forward_at(tape, net, bound, t_col, x_next)[static_cast<std::size_t>(head)];

    ad::Var predicted = tape.add(y, tape.add(tape.affine(phi, dt, 0.0), ito));
    ad::Var residual = tape.sub(y_next, predicted);
    ad::Var sq = tape.sum_all(tape.square(residual));
    total = have_total ? tape.add(total, sq) : sq;
    have_total = true;

    x = std::move(x_next);
    y = y_next;
    snapshot(n + 1, x, y);
  }

  out.g_terminal = p.g(tape, x);
  ad::Var mismatch = tape.sum_all(tape.square(tape.sub(y, out.g_terminal)));
  out.loss = have_total ? tape.add(total, mismatch) : mismatch;
  out.y_terminal = y;
  return out;
}

FbsdeProblem black_scholes_barenblatt(int d, double sigma, double r) {
  if (d < 2 || d % 2 != 0) {
    throw std::invalid_argument(
        "black_scholes_barenblatt: d must be even and >= 2");
  }
  FbsdeProblem p;
  p.name = "bsb";
  p.d = d;
  p.xi.resize(d);
  for (int j = 0; j < d; ++j) p.xi(j) = (j % 2 == 0) ? 1.0 : 0.5;
  p.T = 1.0;
  p.n_steps = 50;
  p.n_paths = 100;
  p.sigma = [sigma](SdeCtx& c) {
    std::vector<ad::Var> out;
    out.reserve(c.x.size());
    for (ad::Var xj : c.x) out.push_back(c.tape.affine(xj, sigma, 0.0));
    return out;
  };
  p.phi = [r](SdeCtx& c) {
    ad::Var zx{};
    for (std::size_t j = 0; j < c.x.size(); ++j) {
      ad::Var term = c.tape.mul(c.z[j], c.x[j]);
      zx = (j == 0) ? term : c.tape.add(zx, term);
    }
    return c.tape.affine(c.tape.sub(c.y, zx), r, 0.0);
  };
  p.g = [](ad::Tape& tape, std::span<const ad::Var> x) {
    ad::Var s{};
    for (std::size_t j = 0; j < x.size(); ++j) {
      ad::Var sq = tape.square(x[j]);
      s = (j == 0) ? sq : tape.add(s, sq);
    }
    return s;
  };
  const double horizon = p.T;
  p.exact = [sigma, r, horizon](double t, const Eigen::VectorXd& x) {
    return std::exp((r + sigma * sigma) * (horizon - t)) * x.squaredNorm();
  };
  return p;
}

FbsdeProblem allen_cahn(int d, double g_coef) {
  if (d < 1) throw std::invalid_argument("allen_cahn: d must be >= 1");
  FbsdeProblem p;
  p.name = "allen_cahn";
  p.d = d;
  p.xi = Eigen::VectorXd::Zero(d);
  p.T = 0.3;
  p.n_steps = 15;
  p.n_paths = 100;
  p.sigma = [](SdeCtx& c) {
    std::vector<ad::Var> out;
    out.reserve(c.x.size());
    for (ad::Var xj : c.x) out.push_back(c.tape.affine(xj, 0.0, 1.0));
    return out;
  };
  p.phi = [](SdeCtx& c) {
    return c.tape.sub(c.tape.pow_const(c.y, 3.0), c.y);
  };
  p.g = [g_coef](ad::Tape& tape, std::span<const ad::Var> x) {
    ad::Var s{};
    for (std::size_t j = 0; j < x.size(); ++j) {
      ad::Var sq = tape.square(x[j]);
      s = (j == 0) ? sq : tape.add(s, sq);
    }
    return tape.pow_const(tape.affine(s, g_coef, 2.0), -1.0);
  };
  return p;
}

FbsdeTrainResult train_fbsde(std::span<const FbsdeProblem> problems,
                             nn::SolverNet& net,
                             const FbsdeTrainOptions& opt) {
  if (problems.empty()) throw std::invalid_argument("train_fbsde: no problems");
  if (opt.epochs < 0) {
    throw std::invalid_argument("train_fbsde: epochs must be >= 0");
  }
  const FbsdeProblem& first = problems[0];
  for (const auto& p : problems) {
    if (p.d != first.d || p.n_steps != first.n_steps ||
        p.n_paths != first.n_paths || p.T != first.T) {
      throw std::invalid_argument(
          "train_fbsde: problems must share discretization to pair noise");
    }
  }
  const double dt = first.T / first.n_steps;

  train::StrategyStepper stepper(net, static_cast<int>(problems.size()),
                                 opt.strategy, opt.lr, opt.seed);
  const std::uint64_t noise_seed =
      nn::derive_seed(opt.seed, train::streams::kBrownian);

  FbsdeTrainResult result;
  result.log.reserve(static_cast<std::size_t>(opt.epochs));
  ad::Tape tape;
  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    BrownianBatch batch = BrownianBatch::sample(
        first.n_paths, first.n_steps, first.d, dt,
        nn::derive_seed(noise_seed, static_cast<std::uint64_t>(epoch)));
    tape.reset();
    auto bound = net.bind(tape);
    std::vector<ad::Var> losses;
    losses.reserve(problems.size());
    for (std::size_t j = 0; j < problems.size(); ++j) {
      losses.push_back(fbsnn_loss(tape, problems[j], net, bound,
                                  static_cast<int>(j), batch)
                           .loss);
    }
    train::IterRecord rec;
    rec.iter = epoch;
    for (ad::Var l : losses) rec.task_loss.push_back(tape.scalar(l));
    auto info = stepper.step(tape, bound, losses, epoch);
    rec.weighted_loss = info.weighted_loss;
    rec.sigma = info.sigma;
    rec.n_projections = info.n_projections;
    result.log.push_back(std::move(rec));
  }
  result.log_variances = stepper.log_variances();
  return result;
}

FbsdeEvalResult evaluate_fbsde(const FbsdeProblem& p,
                               const nn::SolverNet& net, int head,
                               const BrownianBatch& batch) {
  ad::Tape tape;
  auto bound = net.bind(tape);
  FbsdeEvalResult out;
  PathLoss pl = fbsnn_loss(tape, p, net, bound, head, batch, &out.paths);
  out.loss = tape.scalar(pl.loss);
  out.y0 = tape.value(pl.y0)(0, 0);
  out.g_terminal = tape.value(pl.g_terminal);
  if (p.exact) {
    const double dt = p.T / p.n_steps;
    out.y_exact.resize(p.n_paths, p.n_steps + 1);
    for (int n = 0; n <= p.n_steps; ++n) {
      const auto& xn = out.paths.x[static_cast<std::size_t>(n)];
      for (Eigen::Index i = 0; i < xn.rows(); ++i) {
        out.y_exact(i, n) = p.exact(n * dt, xn.row(i).transpose());
      }
    }
  }
  return out;
}

}  // namespace pinnmtl::fbsde
