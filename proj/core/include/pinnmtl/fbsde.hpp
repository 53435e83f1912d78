#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "pinnmtl/nn.hpp"
#include "pinnmtl/tape.hpp"
#include "pinnmtl/train.hpp"

namespace pinnmtl::fbsde {

/// Everything a coefficient function may see at one time step. Columns are
/// one value per simulated path.
struct SdeCtx {
  ad::Tape& tape;
  ad::Var t;                   // current time, one column
  std::span<const ad::Var> x;  // state columns
  ad::Var y;                   // value approximation
  std::span<const ad::Var> z;  // state gradient columns
};

using DriftFn = std::function<std::vector<ad::Var>(SdeCtx&)>;
/// Diagonal of the volatility matrix, one column per state dimension.
using DiagVolFn = std::function<std::vector<ad::Var>(SdeCtx&)>;
using GeneratorFn = std::function<ad::Var(SdeCtx&)>;
using TerminalFn =
    std::function<ad::Var(ad::Tape&, std::span<const ad::Var>)>;

struct FbsdeProblem {
  std::string name;
  int d = 1;
  Eigen::VectorXd xi;  // shared initial state of every path
  double T = 1.0;
  int n_steps = 50;    // time discretization
  int n_paths = 100;   // simulated trajectories per batch
  DriftFn mu;          // null = driftless
  DiagVolFn sigma;
  GeneratorFn phi;
  TerminalFn g;
  std::function<double(double, const Eigen::VectorXd&)> exact;  // may be null
};

struct BrownianBatch {
  double dt = 0.0;
  std::vector<Eigen::MatrixXd> increments;  // n_steps entries, paths x dims
  static BrownianBatch sample(int n_paths, int n_steps, int d, double dt,
                              std::uint64_t seed);
};

/// Simulated values captured during a loss build, for inspection and dumps.
struct PathRecord {
  Eigen::MatrixXd y;               // paths x (n_steps+1)
  std::vector<Eigen::MatrixXd> x;  // n_steps+1 entries, paths x dims
};

struct PathLoss {
  ad::Var loss;        // scalar: stepwise consistency + terminal mismatch
  ad::Var y0;          // value column at t=0 (rows identical)
  ad::Var y_terminal;  // value column at t=T
  ad::Var g_terminal;  // terminal condition evaluated on the simulated paths
};

/// Euler-Maruyama simulation with the stepwise trajectory-matching loss:
/// sum over paths and steps of |Y_{n+1} - Y_n - phi dt - Z' sigma dW|^2 plus
/// the terminal mismatch |Y_N - g(X_N)|^2, all unnormalized sums.
PathLoss fbsnn_loss(ad::Tape& tape, const FbsdeProblem& p,
                    const nn::SolverNet& net,
                    const nn::SolverNet::Bound& bound, int head,
                    const BrownianBatch& batch, PathRecord* record = nullptr);

/// dX = sigma diag(X) dW, phi = r(Y - Z'X), g = |x|^2, xi = (1, 0.5, ...).
/// Closed form u(t, x) = exp((r + sigma^2)(T - t)) |x|^2 attached as exact.
FbsdeProblem black_scholes_barenblatt(int d, double sigma = 0.4,
                                      double r = 0.05);

/// dX = dW, phi = -Y + Y^3, g(x) = (2 + g_coef |x|^2)^{-1}, xi = 0.
FbsdeProblem allen_cahn(int d, double g_coef = 0.4);

struct FbsdeTrainOptions {
  train::Strategy strategy = train::Strategy::Unweighted;
  int epochs = 1000;
  double lr = 1e-3;
  std::uint64_t seed = 0;
};

struct FbsdeTrainResult {
  std::vector<train::IterRecord> log;
  std::vector<double> log_variances;
};

/// One Adam step per epoch on a freshly drawn Brownian batch; when several
/// problems are given they share each epoch's increments and are combined
/// through the strategy, one network head per problem.
FbsdeTrainResult train_fbsde(std::span<const FbsdeProblem> problems,
                             nn::SolverNet& net,
                             const FbsdeTrainOptions& opt);

struct FbsdeEvalResult {
  double loss = 0.0;
  double y0 = 0.0;
  PathRecord paths;
  Eigen::MatrixXd y_exact;     // paths x (n_steps+1); 0x0 without closed form
  Eigen::VectorXd g_terminal;  // per-path terminal condition values
};

/// Value-only pass over a (typically held-out) batch.
FbsdeEvalResult evaluate_fbsde(const FbsdeProblem& p,
                               const nn::SolverNet& net, int head,
                               const BrownianBatch& batch);

}  // namespace pinnmtl::fbsde
