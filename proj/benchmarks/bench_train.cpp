#include <benchmark/benchmark.h>

#include "pinnmtl/fbsde.hpp"
#include "pinnmtl/nn.hpp"
#include "pinnmtl/pde.hpp"
#include "pinnmtl/train.hpp"

using namespace pinnmtl;

namespace {

void BM_TrainEpochLaplace(benchmark::State& state) {
  const pde::PdeTask task = pde::laplace_task();
  const std::vector<pde::PdeTask> tasks{task, pde::make_auxiliary(task, 0.5)};
  nn::SolverNet net = nn::SolverNet::mlp(nn::MlpShape{1, {16, 16}, 2});
  net.init(1);

  train::TrainOptions opt;
  opt.strategy = train::Strategy::Uncert;
  opt.epochs = 1;
  opt.lr = 1e-3;
  opt.n_interior = 100;
  opt.n_boundary = 2;

  std::uint64_t seed = 0;
  for (auto _ : state) {
    opt.seed = seed++;  // fresh sample stream, same cost profile
    auto result = train::train_pinn(tasks, net, opt);
    benchmark::DoNotOptimize(result.log.back().weighted_loss);
  }
}

void BM_FbsdeEpoch(benchmark::State& state) {
  fbsde::FbsdeProblem p = fbsde::allen_cahn(1);
  p.n_steps = 10;
  p.n_paths = 32;
  const std::vector<fbsde::FbsdeProblem> problems{p};
  nn::SolverNet net = nn::SolverNet::mlp(nn::MlpShape{2, {32, 32}, 1});
  net.init(1);

  fbsde::FbsdeTrainOptions opt;
  opt.strategy = train::Strategy::Unweighted;
  opt.epochs = 1;
  opt.lr = 1e-3;

  std::uint64_t seed = 0;
  for (auto _ : state) {
    opt.seed = seed++;
    auto result = fbsde::train_fbsde(problems, net, opt);
    benchmark::DoNotOptimize(result.log.back().weighted_loss);
  }
}

}  // namespace

BENCHMARK(BM_TrainEpochLaplace)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FbsdeEpoch)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
