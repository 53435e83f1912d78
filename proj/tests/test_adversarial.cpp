#include <doctest.h>

#include <Eigen/Core>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "pinnmtl/adversarial.hpp"
#include "pinnmtl/nn.hpp"
#include "pinnmtl/pde.hpp"
#include "pinnmtl/tape.hpp"

using namespace pinnmtl;
using ad::Tape;
using ad::Var;

namespace {

double logit(double u) { return std::log(u / (1.0 - u)); }

pde::SampleSet laplace_samples(const pde::PdeTask& task, int n,
                               std::uint64_t seed) {
  pde::SampleSet s;
  s.interior = task.sample_interior(n, seed);
  s.n_original = s.interior.rows();
  s.boundary = task.sample_boundary(0, 0);
  return s;
}

}  // namespace

TEST_SUITE_BEGIN("adversarial");

TEST_CASE("unit scaling maps the box onto [0,1] and rejects bad boxes") {
  Eigen::VectorXd lb(2), ub(2), a(2);
  lb << 0.0, -1.0;
  ub << 2.0, 1.0;
  a << 0.5, 0.0;
  Eigen::VectorXd u = adv::scale_to_unit(a, lb, ub);
  CHECK(u(0) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(u(1) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK((adv::scale_to_unit(lb, lb, ub).isZero(0.0)));
  CHECK((adv::scale_to_unit(ub, lb, ub) == Eigen::VectorXd::Ones(2)));

  Eigen::MatrixXd pts(2, 2);
  pts << 0.0, -1.0, 2.0, 1.0;
  Eigen::MatrixXd upts = adv::scale_rows_to_unit(pts, lb, ub);
  CHECK(upts(0, 0) == 0.0);
  CHECK(upts(0, 1) == 0.0);
  CHECK(upts(1, 0) == 1.0);
  CHECK(upts(1, 1) == 1.0);

  Eigen::VectorXd bad_ub(2);
  bad_ub << 0.0, 1.0;  // first component collapses the box
  CHECK_THROWS_AS((void)adv::scale_to_unit(a, lb, bad_ub),
                  std::invalid_argument);
  Eigen::VectorXd short_lb(1);
  short_lb << 0.0;
  CHECK_THROWS_AS((void)adv::scale_to_unit(a, short_lb, ub),
                  std::invalid_argument);
  CHECK_THROWS_AS((void)adv::scale_rows_to_unit(pts, short_lb, ub),
                  std::invalid_argument);
}

TEST_CASE("generator objective: identity mapping and known displacements") {
  pde::PdeTask task = pde::laplace_task();
  const std::vector<pde::PdeTask> tasks{task};
  Eigen::MatrixXd original = task.sample_interior(30, 4);
  // keep logits finite and the +0.1 shift inside (0,1)
  original = original.array() * 0.7 + 0.1;

  // a solver that solves the equation exactly: u = 2x, residual 0
  pde::MultiHead exact_solver = [](Tape& t, std::span<const Var> c) {
    return std::vector<Var>{t.affine(c[0], 2.0, 0.0)};
  };

  SUBCASE("identity mapping gives zero proximity and zero task loss") {
    Tape t;
    Eigen::VectorXd raw(30);
    for (int i = 0; i < 30; ++i) raw(i) = logit(original(i, 0));
    std::vector<Var> raw_cols{t.input(raw)};
    auto obj = adv::generator_objective(t, raw_cols, original, tasks,
                                        exact_solver);
    CHECK(t.scalar(obj.proximity) < 1e-12);
    REQUIRE(obj.task_losses.size() == 1);
    CHECK(t.scalar(obj.task_losses[0]) < 1e-12);
    CHECK(std::abs(t.scalar(obj.total)) < 1e-12);
    // mapped points reproduce the originals
    CHECK((t.value(obj.mapped[0]) - original.col(0)).cwiseAbs().maxCoeff() <
          1e-12);
  }

  SUBCASE("a uniform 0.1 shift in unit coordinates costs 0.01") {
    Tape t;
    Eigen::VectorXd raw(30);
    for (int i = 0; i < 30; ++i) raw(i) = logit(original(i, 0) + 0.1);
    std::vector<Var> raw_cols{t.input(raw)};
    auto obj = adv::generator_objective(t, raw_cols, original, tasks,
                                        exact_solver);
    CHECK(t.scalar(obj.proximity) == doctest::Approx(0.01).epsilon(1e-10));
    // laplace box is [0,1], so domain shift equals unit shift
    CHECK((t.value(obj.mapped[0]) - (original.col(0).array() + 0.1).matrix())
              .cwiseAbs()
              .maxCoeff() < 1e-12);
  }

  SUBCASE("total is proximity minus the summed task losses") {
    // u = x^2 leaves residual 2, so the task loss term is 4
    pde::MultiHead quad_solver = [](Tape& tt, std::span<const Var> c) {
      return std::vector<Var>{ad::square(c[0])};
    };
    Tape t;
    Eigen::VectorXd raw = Eigen::VectorXd::Zero(30);
    std::vector<Var> raw_cols{t.input(raw)};
    auto obj =
        adv::generator_objective(t, raw_cols, original, tasks, quad_solver);
    CHECK(t.scalar(obj.task_losses[0]) == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(t.scalar(obj.total) ==
          doctest::Approx(t.scalar(obj.proximity) - 4.0).epsilon(1e-12));
  }

  SUBCASE("input validation") {
    Tape t;
    Eigen::VectorXd raw = Eigen::VectorXd::Zero(30);
    std::vector<Var> two_cols{t.input(raw), t.input(raw)};
    CHECK_THROWS_AS((void)adv::generator_objective(t, two_cols, original,
                                                   tasks, exact_solver),
                    std::invalid_argument);
    const std::vector<pde::PdeTask> none;
    std::vector<Var> one_col{t.input(raw)};
    CHECK_THROWS_AS((void)adv::generator_objective(t, one_col, original, none,
                                                   exact_solver),
                    std::invalid_argument);
    const std::vector<pde::PdeTask> twice{task, pde::make_auxiliary(task, 0.5)};
    CHECK_THROWS_AS((void)adv::generator_objective(t, one_col, original, twice,
                                                   exact_solver),
                    std::invalid_argument);
  }
}

TEST_CASE("refresh appends floor(p n) transformed rows and freezes the solver") {
  pde::PdeTask task = pde::laplace_task();
  const std::vector<pde::PdeTask> tasks{task};

  nn::SolverNet solver = nn::SolverNet::mlp(nn::MlpShape{1, {8}, 1});
  solver.init(21);
  const Eigen::VectorXd theta_before = nn::flatten(solver.params());

  adv::AdvConfig cfg;
  cfg.proportion = 0.25;
  cfg.gen_steps = 3;
  adv::Resampler resampler(1, cfg, 55);
  const Eigen::VectorXd gen_before = nn::flatten(resampler.generator().params());

  pde::SampleSet s = laplace_samples(task, 40, 6);
  const Eigen::MatrixXd originals = s.interior;

  auto stats = resampler.refresh(s, tasks, solver, 100);

  CHECK(s.interior.rows() == 50);
  CHECK(s.n_original == 40);
  CHECK(s.n_transformed() == 10);
  CHECK((s.interior.topRows(40) == originals));
  for (Eigen::Index i = 40; i < 50; ++i) {
    CHECK(s.interior(i, 0) > 0.0);
    CHECK(s.interior(i, 0) < 1.0);
  }

  CHECK(stats.iter == 100);
  CHECK(stats.n_transformed == 10);
  CHECK(stats.residual_original ==
        adv::summed_residual_loss(tasks, solver, originals));
  CHECK(stats.residual_transformed ==
        adv::summed_residual_loss(tasks, solver, s.interior.bottomRows(10)));

  // solver untouched, generator trained
  CHECK((nn::flatten(solver.params()) == theta_before));
  CHECK((nn::flatten(resampler.generator().params()) != gen_before));

  // a second refresh rebuilds rather than accumulates
  auto stats2 = resampler.refresh(s, tasks, solver, 200);
  CHECK(s.interior.rows() == 50);
  CHECK((s.interior.topRows(40) == originals));
  CHECK(stats2.iter == 200);
}

TEST_CASE("refresh is deterministic in the resampler seed") {
  pde::PdeTask task = pde::laplace_task();
  const std::vector<pde::PdeTask> tasks{task};
  nn::SolverNet solver = nn::SolverNet::mlp(nn::MlpShape{1, {8}, 1});
  solver.init(2);

  adv::AdvConfig cfg;
  cfg.gen_steps = 2;

  auto run = [&](std::uint64_t seed) {
    adv::Resampler r(1, cfg, seed);
    pde::SampleSet s = laplace_samples(task, 30, 9);
    r.refresh(s, tasks, solver, 10);
    return s.interior;
  };
  CHECK((run(7) == run(7)));
  CHECK((run(7) != run(8)));
}

TEST_CASE("summed residual loss is the per-head sum of task losses") {
  pde::PdeTask task = pde::laplace_task();
  const std::vector<pde::PdeTask> two{task, pde::make_auxiliary(task, 0.5)};

  nn::SolverNet net = nn::SolverNet::mlp(nn::MlpShape{1, {6}, 2});
  net.init(13);
  Eigen::MatrixXd pts = task.sample_interior(25, 3);

  // evaluate the two per-head terms separately on a scratch tape
  Tape t;
  auto bound = net.bind(t);
  std::vector<Var> coords{t.input(pts.col(0))};
  auto heads = net.forward(t, bound, coords);
  const double l0 =
      t.scalar(pde::residual_loss_at(t, two[0], heads[0], coords).total);
  const double l1 =
      t.scalar(pde::residual_loss_at(t, two[1], heads[1], coords).total);
  CHECK(l0 > 0.0);
  CHECK(l1 > 0.0);
  CHECK(adv::summed_residual_loss(two, net, pts) ==
        doctest::Approx(l0 + l1).epsilon(1e-14));
}

TEST_CASE("config validation rejects each out-of-range field") {
  adv::AdvConfig good;
  CHECK_NOTHROW(adv::validate(good));

  adv::AdvConfig c = good;
  c.refresh_every = 0;
  CHECK_THROWS_AS(adv::validate(c), std::invalid_argument);
  c = good;
  c.limit_divisor = 0;
  CHECK_THROWS_AS(adv::validate(c), std::invalid_argument);
  c = good;
  c.gen_steps = 0;
  CHECK_THROWS_AS(adv::validate(c), std::invalid_argument);
  c = good;
  c.proportion = 0.0;
  CHECK_THROWS_AS(adv::validate(c), std::invalid_argument);
  c = good;
  c.proportion = 1.5;
  CHECK_THROWS_AS(adv::validate(c), std::invalid_argument);
  c = good;
  c.gen_hidden = 0;
  CHECK_THROWS_AS(adv::validate(c), std::invalid_argument);
  c = good;
  c.gen_lr = 0.0;
  CHECK_THROWS_AS(adv::validate(c), std::invalid_argument);

  CHECK_THROWS_AS(adv::Resampler(0, good, 1), std::invalid_argument);
}

TEST_SUITE_END();
