// Command line front end: solve / fbsde / metrics / gen-burgers-ref.

#include <CLI11.hpp>

#include <Eigen/Core>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "pinnmtl/config.hpp"
#include "pinnmtl/metrics.hpp"
#include "pinnmtl/reference.hpp"
#include "pinnmtl/runner.hpp"

namespace {

using pinnmtl::cfg::RunConfig;

struct CommonFlags {
  std::string preset = "desk";
  std::string config_file;
  std::string strategy;
  std::vector<std::uint64_t> seeds;
  int epochs = 0;
  double lr = 0.0;
  std::string out_dir;
};

// Returns the preset config with the config file (if any) applied on top.
RunConfig base_config(pinnmtl::cfg::Benchmark b, const CommonFlags& f) {
  RunConfig c;
  if (f.preset == "desk") {
    c = pinnmtl::cfg::desk_preset(b);
  } else if (f.preset == "paper") {
    c = pinnmtl::cfg::paper_preset(b);
  } else {
    throw CLI::ValidationError("--preset", "expected 'desk' or 'paper'");
  }
  if (!f.config_file.empty()) {
    c = pinnmtl::cfg::load_config(f.config_file, c);
    c.benchmark = b;  // the positional argument wins
  }
  return c;
}

void apply_common(RunConfig& c, const CommonFlags& f, const CLI::App& sub) {
  if (sub.count("--strategy") > 0) {
    auto s = pinnmtl::train::strategy_from_string(f.strategy);
    if (!s) {
      throw CLI::ValidationError("--strategy",
                                 "expected unweighted, uncert or pcgrad");
    }
    c.strategy = *s;
  }
  if (sub.count("--seeds") > 0) c.seeds = f.seeds;
  if (sub.count("--epochs") > 0) c.epochs = f.epochs;
  if (sub.count("--lr") > 0) c.lr = f.lr;
  if (sub.count("--out") > 0) c.out_dir = f.out_dir;
}

int execute(RunConfig c) {
  pinnmtl::cfg::apply_env_seed(c);
  pinnmtl::cfg::validate(c);
  auto result = pinnmtl::run::run_experiment(c);
  const auto& rep = result.report;
  std::printf("benchmark=%s strategy=%s cross_stitch=%d adversarial=%d\n",
              pinnmtl::cfg::to_string(c.benchmark).c_str(),
              pinnmtl::train::to_string(c.strategy).c_str(),
              c.cross_stitch ? 1 : 0, c.adversarial ? 1 : 0);
  for (const auto& s : rep.per_seed) {
    std::printf("seed %llu: mae=%.6g mse=%.6g rel_l2=%.6g final_loss=%.6g",
                static_cast<unsigned long long>(s.seed), s.m.mae, s.m.mse,
                s.m.rel_l2, s.final_loss);
    if (s.y0) std::printf(" y0=%.6g", *s.y0);
    if (s.alpha) std::printf(" alpha=%.6g", *s.alpha);
    std::printf(" wall=%.1fs\n", s.wall_seconds);
  }
  std::printf("aggregate: mae=%.6g mse=%.6g rel_l2=%.6g\n", rep.aggregate.mae,
              rep.aggregate.mse, rep.aggregate.rel_l2);
  std::printf("report: %s\n", result.report_path.string().c_str());
  return 0;
}

// Last column of a CSV as a vector; a non-numeric first line is a header.
Eigen::VectorXd read_last_column(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::vector<double> values;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto pos = line.find_last_of(',');
    const std::string cell =
        pos == std::string::npos ? line : line.substr(pos + 1);
    try {
      std::size_t used = 0;
      const double v = std::stod(cell, &used);
      if (used != cell.size()) throw std::invalid_argument(cell);
      values.push_back(v);
    } catch (const std::exception&) {
      if (first) {
        first = false;
        continue;  // header row
      }
      throw std::runtime_error(path + ": malformed value '" + cell + "'");
    }
    first = false;
  }
  if (values.empty()) throw std::runtime_error(path + ": no data rows");
  return Eigen::Map<Eigen::VectorXd>(values.data(),
                                     static_cast<Eigen::Index>(values.size()));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-task physics-informed solver"};
  app.require_subcommand(1);

  // solve
  CommonFlags sf;
  std::string solve_benchmark;
  bool cross_stitch = false, adversarial = false;
  double alpha = 0.0, noise_std = 0.0;
  int alpha_search = 0, n_interior = 0, n_boundary = 0;
  std::vector<int> hidden;
  std::string reference_csv;
  auto* solve = app.add_subcommand("solve", "Train a PDE benchmark");
  solve->add_option("benchmark", solve_benchmark,
                    "burgers | poisson | fokker_planck | laplace")
      ->required();
  solve->add_option("--preset", sf.preset, "desk (default) or paper");
  solve->add_option("--config", sf.config_file, "key=value file over preset");
  solve->add_option("--strategy", sf.strategy, "unweighted | uncert | pcgrad");
  solve->add_flag("--cross-stitch", cross_stitch, "two stitched task towers");
  solve->add_flag("--adversarial", adversarial, "resample via the generator");
  auto* opt_alpha =
      solve->add_option("--alpha", alpha, "auxiliary coefficient scale");
  auto* opt_search = solve->add_option("--alpha-search", alpha_search,
                                       "trials of short searches over (0,1)");
  opt_alpha->excludes(opt_search);
  opt_search->excludes(opt_alpha);
  solve->add_option("--seeds", sf.seeds, "comma-separated seed list")
      ->delimiter(',');
  solve->add_option("--epochs", sf.epochs, "training iterations");
  solve->add_option("--lr", sf.lr, "Adam learning rate");
  solve->add_option("--noise-std", noise_std, "boundary target noise std");
  solve->add_option("--n-interior", n_interior, "collocation points");
  solve->add_option("--n-boundary", n_boundary, "boundary points");
  solve->add_option("--hidden", hidden, "hidden layer widths")->delimiter(',');
  solve->add_option("--reference", reference_csv, "reference solution CSV");
  solve->add_option("--out", sf.out_dir, "output directory");

  // fbsde
  CommonFlags ff;
  std::string fbsde_benchmark;
  int dim = 0, n_paths = 0, n_steps = 0;
  auto* fb = app.add_subcommand("fbsde", "Train a forward-backward SDE");
  fb->add_option("benchmark", fbsde_benchmark, "bsb | allen_cahn")->required();
  fb->add_option("--preset", ff.preset, "desk (default) or paper");
  fb->add_option("--config", ff.config_file, "key=value file over preset");
  fb->add_option("--strategy", ff.strategy, "unweighted | uncert | pcgrad");
  fb->add_option("--dim", dim, "state dimension");
  fb->add_option("--paths", n_paths, "simulated paths per batch");
  fb->add_option("--steps", n_steps, "time discretization steps");
  fb->add_option("--seeds", ff.seeds, "comma-separated seed list")
      ->delimiter(',');
  fb->add_option("--epochs", ff.epochs, "training iterations");
  fb->add_option("--lr", ff.lr, "Adam learning rate");
  fb->add_option("--out", ff.out_dir, "output directory");

  // metrics
  std::string pred_csv, exact_csv;
  auto* met = app.add_subcommand(
      "metrics", "Compare the last columns of two CSV files");
  met->add_option("pred", pred_csv, "prediction CSV")->required();
  met->add_option("exact", exact_csv, "reference CSV")->required();

  // gen-burgers-ref
  std::string ref_out = "data/burgers_reference.csv";
  int ref_nt = 101, ref_nx = 201;
  double ref_lambda = 0.01 / std::numbers::pi;
  auto* gen = app.add_subcommand("gen-burgers-ref",
                                 "Write the viscous Burgers reference table");
  gen->add_option("--out", ref_out, "output CSV path");
  gen->add_option("--nt", ref_nt, "time grid points");
  gen->add_option("--nx", ref_nx, "space grid points");
  gen->add_option("--lambda", ref_lambda, "viscosity");

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve->parsed()) {
      auto b = pinnmtl::cfg::benchmark_from_string(solve_benchmark);
      if (!b || pinnmtl::cfg::is_fbsde(*b)) {
        throw std::invalid_argument("solve: unknown PDE benchmark '" +
                                    solve_benchmark + "'");
      }
      RunConfig c = base_config(*b, sf);
      apply_common(c, sf, *solve);
      if (solve->count("--cross-stitch") > 0) c.cross_stitch = true;
      if (solve->count("--adversarial") > 0) c.adversarial = true;
      if (*opt_alpha) c.alpha = alpha;
      if (*opt_search) c.alpha_search = alpha_search;
      if (solve->count("--noise-std") > 0) c.noise_std = noise_std;
      if (solve->count("--n-interior") > 0) c.n_interior = n_interior;
      if (solve->count("--n-boundary") > 0) c.n_boundary = n_boundary;
      if (solve->count("--hidden") > 0) c.hidden = hidden;
      if (solve->count("--reference") > 0) c.reference_csv = reference_csv;
      // multi-task strategies and stitched towers need the auxiliary task
      c.use_aux = c.cross_stitch ||
                  c.strategy != pinnmtl::train::Strategy::Unweighted;
      return execute(std::move(c));
    }
    if (fb->parsed()) {
      auto b = pinnmtl::cfg::benchmark_from_string(fbsde_benchmark);
      if (!b || !pinnmtl::cfg::is_fbsde(*b)) {
        throw std::invalid_argument("fbsde: unknown SDE benchmark '" +
                                    fbsde_benchmark + "'");
      }
      RunConfig c = base_config(*b, ff);
      apply_common(c, ff, *fb);
      if (fb->count("--dim") > 0) c.dim = dim;
      if (fb->count("--paths") > 0) c.n_paths = n_paths;
      if (fb->count("--steps") > 0) c.n_steps = n_steps;
      c.use_aux = c.strategy != pinnmtl::train::Strategy::Unweighted;
      return execute(std::move(c));
    }
    if (met->parsed()) {
      const auto pred = read_last_column(pred_csv);
      const auto exact = read_last_column(exact_csv);
      const auto m = pinnmtl::metrics::compute(pred, exact);
      std::printf("mae=%.17g\nmse=%.17g\nrel_l2=%.17g\n", m.mae, m.mse,
                  m.rel_l2);
      return 0;
    }
    if (gen->parsed()) {
      auto table = pinnmtl::pde::burgers_reference_table(ref_nt, ref_nx,
                                                         ref_lambda);
      std::filesystem::path out_path(ref_out);
      if (out_path.has_parent_path()) {
        std::filesystem::create_directories(out_path.parent_path());
      }
      pinnmtl::pde::write_reference_csv(out_path, table);
      std::printf("wrote %s (%lld rows)\n", ref_out.c_str(),
                  static_cast<long long>(table.values.size()));
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
