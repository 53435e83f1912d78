#include <benchmark/benchmark.h>

#include <Eigen/Core>

#include "pinnmtl/nn.hpp"
#include "pinnmtl/pde.hpp"
#include "pinnmtl/tape.hpp"

using namespace pinnmtl;

namespace {

Eigen::MatrixXd interior_batch(const pde::PdeTask& task, int n) {
  return task.sample_interior(n, 7);
}

void BM_TapedForward(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  nn::SolverNet net = nn::SolverNet::mlp(nn::MlpShape{2, {20, 20, 20}, 1});
  net.init(1);
  const Eigen::MatrixXd pts = interior_batch(pde::burgers_task(), n);

  for (auto _ : state) {
    ad::Tape tape;
    auto bound = net.bind(tape);
    std::vector<ad::Var> coords;
    for (int j = 0; j < 2; ++j) coords.push_back(tape.constant(pts.col(j)));
    ad::Var out = net.forward(tape, bound, coords)[0];
    benchmark::DoNotOptimize(tape.value(out).sum());
  }
  state.SetItemsProcessed(state.iterations() * n);
}

void BM_ResidualAndGradient(benchmark::State& state) {
  // the inner loop of PINN training: build the physics loss (second
  // derivatives included) and pull the parameter gradient back through it
  const int n = static_cast<int>(state.range(0));
  const pde::PdeTask task = pde::burgers_task();
  nn::SolverNet net = nn::SolverNet::mlp(nn::MlpShape{2, {20, 20, 20}, 1});
  net.init(1);

  pde::SampleSet samples;
  samples.interior = interior_batch(task, n);
  samples.n_original = n;
  samples.boundary = task.sample_boundary(64, 5);

  for (auto _ : state) {
    ad::Tape tape;
    auto bound = net.bind(tape);
    pde::MultiHead heads = [&](ad::Tape& t, std::span<const ad::Var> coords) {
      return net.forward(t, bound, coords);
    };
    pde::LossParts parts = physics_informed_loss(tape, task, heads, samples);
    auto grads = tape.gradient(parts.total, bound.all());
    benchmark::DoNotOptimize(grads.data());
  }
  state.SetItemsProcessed(state.iterations() * n);
}

}  // namespace

BENCHMARK(BM_TapedForward)->Arg(256)->Arg(1024);
BENCHMARK(BM_ResidualAndGradient)->Arg(256)->Arg(1024);
