#include "pinnmtl/runner.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "pinnmtl/alpha_search.hpp"
#include "pinnmtl/checkpoint.hpp"
#include "pinnmtl/fbsde.hpp"
#include "pinnmtl/metrics.hpp"
#include "pinnmtl/reference.hpp"
#include "pinnmtl/sampling.hpp"

namespace pinnmtl::run {

namespace {

namespace fs = std::filesystem;

nn::SolverNet build_net(const cfg::RunConfig& c, int input_dim, int n_tasks) {
  nn::MlpShape shape{input_dim, c.hidden, c.cross_stitch ? 1 : n_tasks};
  return c.cross_stitch ? nn::SolverNet::cross_stitch(shape)
                        : nn::SolverNet::mlp(shape);
}

std::vector<fbsde::FbsdeProblem> make_problems(const cfg::RunConfig& c) {
  const bool bsb = c.benchmark == cfg::Benchmark::Bsb;
  std::vector<fbsde::FbsdeProblem> problems;
  problems.push_back(bsb ? fbsde::black_scholes_barenblatt(c.dim)
                         : fbsde::allen_cahn(c.dim));
  if (c.use_aux) {
    // auxiliary variant: reduced volatility / terminal coefficient
    problems.push_back(bsb ? fbsde::black_scholes_barenblatt(c.dim, 0.3)
                           : fbsde::allen_cahn(c.dim, 0.3));
    problems.back().name += "_aux";
  }
  for (auto& p : problems) {
    p.n_steps = c.n_steps;
    p.n_paths = c.n_paths;
  }
  return problems;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot open for writing: " + path.string());
  }
  out.precision(12);
  return out;
}

void write_pde_solution(const fs::path& path, const EvalGrid& grid,
                        const Eigen::VectorXd& pred) {
  auto out = open_out(path);
  for (const auto& name : grid.coord_names) out << name << ',';
  out << "u_pred,u_exact\n";
  for (Eigen::Index i = 0; i < grid.points.rows(); ++i) {
    for (Eigen::Index j = 0; j < grid.points.cols(); ++j) {
      out << grid.points(i, j) << ',';
    }
    out << pred(i) << ',' << grid.exact(i) << '\n';
  }
}

void write_fbsde_solution(const fs::path& path,
                          const fbsde::FbsdeEvalResult& ev, double dt) {
  auto out = open_out(path);
  const bool with_exact = ev.y_exact.size() > 0;
  out << (with_exact ? "m,n,t,y_pred,y_exact\n" : "m,n,t,y_pred\n");
  for (Eigen::Index m = 0; m < ev.paths.y.rows(); ++m) {
    for (Eigen::Index n = 0; n < ev.paths.y.cols(); ++n) {
      out << m << ',' << n << ',' << static_cast<double>(n) * dt << ','
          << ev.paths.y(m, n);
      if (with_exact) out << ',' << ev.y_exact(m, n);
      out << '\n';
    }
  }
}

double last_weighted_loss(std::span<const train::IterRecord> log) {
  return log.empty() ? std::numeric_limits<double>::quiet_NaN()
                     : log.back().weighted_loss;
}

/// Short uncertainty-weighted trainings over sampled coefficients; returns
/// the one with the lowest final weighted loss.
double search_alpha(const cfg::RunConfig& c) {
  const std::uint64_t base_seed = c.seeds.front();
  auto score = [&](double a) {
    try {
      auto tasks = make_tasks(c, a);
      auto net = build_net(c, tasks[0].input_dim,
                           static_cast<int>(tasks.size()));
      net.init(nn::derive_seed(base_seed, train::streams::kNetInit));
      train::TrainOptions opt;
      opt.strategy = train::Strategy::Uncert;
      opt.epochs = std::min(c.epochs, 200);
      opt.lr = c.lr;
      opt.n_interior = c.n_interior;
      opt.n_boundary = c.n_boundary;
      opt.seed = base_seed;
      auto res = train::train_pinn(tasks, net, opt);
      return last_weighted_loss(res.log);
    } catch (const std::exception&) {
      return std::numeric_limits<double>::quiet_NaN();
    }
  };
  auto found = search::alpha_search(
      c.alpha_search, nn::derive_seed(base_seed, train::streams::kAlphaSearch),
      score);
  return found.best_alpha;
}

}  // namespace

std::vector<pde::PdeTask> make_tasks(const cfg::RunConfig& c, double alpha) {
  pde::PdeTask primary;
  switch (c.benchmark) {
    case cfg::Benchmark::Burgers:
      primary = pde::burgers_task();
      break;
    case cfg::Benchmark::Poisson:
      primary = pde::poisson_task();
      break;
    case cfg::Benchmark::FokkerPlanck:
      primary = pde::fokker_planck_task();
      break;
    case cfg::Benchmark::Laplace:
      primary = pde::laplace_task();
      break;
    default:
      throw std::invalid_argument("make_tasks: not a PDE benchmark: " +
                                  cfg::to_string(c.benchmark));
  }
  std::vector<pde::PdeTask> tasks;
  tasks.push_back(primary);
  if (c.use_aux) tasks.push_back(pde::make_auxiliary(primary, alpha));
  return tasks;
}

EvalGrid make_eval_grid(const cfg::RunConfig& c, const pde::PdeTask& primary) {
  EvalGrid grid;
  if (c.benchmark == cfg::Benchmark::Burgers) {
    pde::ReferenceTable table;
    if (fs::exists(c.reference_csv)) {
      table = pde::load_reference_csv(c.reference_csv);
    } else {
      table = pde::burgers_reference_table(101, 201, primary.lambda(0));
    }
    grid.points = table.points;
    grid.exact = table.values;
    grid.coord_names = {"t", "x"};
    return grid;
  }
  if (!primary.exact) {
    throw std::logic_error("make_eval_grid: no exact solution for " +
                           primary.name);
  }
  if (primary.input_dim == 1) {
    Eigen::VectorXd xs =
        sampling::grid1d(primary.lb(0), primary.ub(0), c.eval_step);
    grid.points = xs;
    grid.coord_names = {"x"};
  } else if (primary.input_dim == 2) {
    Eigen::VectorXd xs =
        sampling::grid1d(primary.lb(0), primary.ub(0), c.eval_step);
    Eigen::VectorXd ys =
        sampling::grid1d(primary.lb(1), primary.ub(1), c.eval_step);
    grid.points.resize(xs.size() * ys.size(), 2);
    Eigen::Index row = 0;
    for (Eigen::Index i = 0; i < xs.size(); ++i) {
      for (Eigen::Index j = 0; j < ys.size(); ++j, ++row) {
        grid.points(row, 0) = xs(i);
        grid.points(row, 1) = ys(j);
      }
    }
    grid.coord_names = {"x", "y"};
  } else {
    throw std::logic_error("make_eval_grid: unsupported input dimension");
  }
  grid.exact.resize(grid.points.rows());
  for (Eigen::Index i = 0; i < grid.points.rows(); ++i) {
    grid.exact(i) = primary.exact(grid.points.row(i).transpose());
  }
  return grid;
}

void write_trace_csv(const std::filesystem::path& path,
                     std::span<const train::IterRecord> log) {
  auto out = open_out(path);
  out << "iter,task0_loss,task1_loss,weighted_loss,sigma0,sigma1,"
         "n_transformed\n";
  for (const auto& r : log) {
    const double t0 = r.task_loss.empty() ? 0.0 : r.task_loss[0];
    const double t1 = r.task_loss.size() > 1 ? r.task_loss[1] : 0.0;
    const double s0 = r.sigma.empty() ? 1.0 : r.sigma[0];
    const double s1 = r.sigma.size() > 1 ? r.sigma[1] : 1.0;
    out << r.iter << ',' << t0 << ',' << t1 << ',' << r.weighted_loss << ','
        << s0 << ',' << s1 << ',' << r.n_transformed << '\n';
  }
}

ExperimentResult run_experiment(const cfg::RunConfig& config) {
  cfg::validate(config);
  cfg::RunConfig c = config;
  fs::create_directories(c.out_dir);

  const bool fbsde_run = cfg::is_fbsde(c.benchmark);
  bool searched = false;
  if (!fbsde_run && c.use_aux && c.alpha_search > 0 &&
      make_tasks(c, c.alpha)[0].aux_rule == pde::AuxRule::ScaleAll) {
    c.alpha = search_alpha(c);
    searched = true;
  }

  ExperimentResult out;
  std::vector<report::SeedResult> per_seed;
  for (const std::uint64_t seed : c.seeds) {
    const fs::path seed_dir =
        fs::path(c.out_dir) / ("seed_" + std::to_string(seed));
    fs::create_directories(seed_dir);
    const auto t_start = std::chrono::steady_clock::now();

    report::SeedResult sr;
    sr.seed = seed;
    std::map<std::string, std::string> meta{
        {"benchmark", cfg::to_string(c.benchmark)},
        {"strategy", train::to_string(c.strategy)},
        {"seed", std::to_string(seed)},
    };

    if (fbsde_run) {
      auto problems = make_problems(c);
      auto net = build_net(c, problems[0].d + 1,
                           static_cast<int>(problems.size()));
      net.init(nn::derive_seed(seed, train::streams::kNetInit));
      fbsde::FbsdeTrainOptions opt{c.strategy, c.epochs, c.lr, seed};
      auto res = fbsde::train_fbsde(problems, net, opt);

      const auto& p = problems[0];
      const double dt = p.T / p.n_steps;
      auto batch = fbsde::BrownianBatch::sample(
          p.n_paths, p.n_steps, p.d, dt,
          nn::derive_seed(seed, train::streams::kEvalBrownian));
      auto ev = fbsde::evaluate_fbsde(p, net, 0, batch);

      const Eigen::VectorXd pred = ev.paths.y.col(ev.paths.y.cols() - 1);
      sr.m = metrics::compute(pred, ev.g_terminal);
      sr.final_loss = last_weighted_loss(res.log);
      sr.y0 = ev.y0;
      sr.log_variances = res.log_variances;

      write_trace_csv(seed_dir / "trace.csv", res.log);
      write_fbsde_solution(seed_dir / "solution.csv", ev, dt);
      nn::save_checkpoint(seed_dir / "params.json", net.params(), meta);
      out.refreshes_per_seed.emplace_back();
    } else {
      auto tasks = make_tasks(c, c.alpha);
      auto net = build_net(c, tasks[0].input_dim,
                           static_cast<int>(tasks.size()));
      net.init(nn::derive_seed(seed, train::streams::kNetInit));
      train::TrainOptions opt;
      opt.strategy = c.strategy;
      opt.epochs = c.epochs;
      opt.lr = c.lr;
      opt.n_interior = c.n_interior;
      opt.n_boundary = c.n_boundary;
      opt.seed = seed;
      if (c.adversarial) opt.adversarial = c.adv;
      opt.noise_std = c.noise_std;
      auto res = train::train_pinn(tasks, net, opt);

      auto grid = make_eval_grid(c, tasks[0]);
      const Eigen::VectorXd pred = net.forward_values(grid.points).col(0);
      sr.m = metrics::compute(pred, grid.exact);
      sr.final_loss = last_weighted_loss(res.log);
      sr.log_variances = res.log_variances;
      if (searched) {
        sr.alpha = c.alpha;
        std::ostringstream a;
        a.precision(17);
        a << c.alpha;
        meta["alpha"] = a.str();
      }

      write_trace_csv(seed_dir / "trace.csv", res.log);
      write_pde_solution(seed_dir / "solution.csv", grid, pred);
      nn::save_checkpoint(seed_dir / "params.json", net.params(), meta);
      out.refreshes_per_seed.push_back(std::move(res.refreshes));
    }

    sr.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                      t_start)
            .count();
    per_seed.push_back(std::move(sr));
  }

  out.report = report::make_report(c, std::move(per_seed));
  out.report_path = fs::path(c.out_dir) / "report.json";
  report::write_report(out.report_path, out.report);
  return out;
}

}  // namespace pinnmtl::run
