#pragma once

#include <Eigen/Core>

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "pinnmtl/adversarial.hpp"
#include "pinnmtl/config.hpp"
#include "pinnmtl/pde.hpp"
#include "pinnmtl/report.hpp"
#include "pinnmtl/train.hpp"

namespace pinnmtl::run {

/// Primary task for the configured PDE benchmark, plus the auxiliary task
/// when the config asks for one. alpha feeds the auxiliary coefficients.
std::vector<pde::PdeTask> make_tasks(const cfg::RunConfig& c, double alpha);

/// Test-grid points with their exact values.
struct EvalGrid {
  Eigen::MatrixXd points;
  Eigen::VectorXd exact;
  std::vector<std::string> coord_names;
};
EvalGrid make_eval_grid(const cfg::RunConfig& c, const pde::PdeTask& primary);

/// One CSV row per training iteration with the fixed trace layout
/// iter,task0_loss,task1_loss,weighted_loss,sigma0,sigma1,n_transformed.
void write_trace_csv(const std::filesystem::path& path,
                     std::span<const train::IterRecord> log);

struct ExperimentResult {
  report::RunReport report;
  std::filesystem::path report_path;
  // per seed, the refresh bookkeeping of adversarial runs (else empty)
  std::vector<std::vector<adv::RefreshStats>> refreshes_per_seed;
};

/// The full protocol: per seed, build tasks and network, train, evaluate on
/// the benchmark's test grid or held-out paths, and persist trace.csv,
/// solution.csv and params.json under out_dir/seed_<s>/, then write the
/// aggregate report.json.
ExperimentResult run_experiment(const cfg::RunConfig& config);

}  // namespace pinnmtl::run
