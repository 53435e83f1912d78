#include <doctest.h>

#include <Eigen/Core>

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "pinnmtl/mtl.hpp"
#include "pinnmtl/tape.hpp"

using namespace pinnmtl;
using ad::Tape;
using ad::Var;

TEST_SUITE_BEGIN("mtl");

TEST_CASE("pcgrad projects the worked example to (0.5, 1.5)") {
  Eigen::VectorXd g1(2), g2(2);
  g1 << 1.0, 0.0;
  g2 << -1.0, 1.0;
  const std::vector<Eigen::VectorXd> grads{g1, g2};
  int n_proj = -1;
  Eigen::VectorXd out = mtl::pcgrad(grads, 17, &n_proj);
  CHECK(std::abs(out(0) - 0.5) < 1e-12);
  CHECK(std::abs(out(1) - 1.5) < 1e-12);
  CHECK(n_proj == 2);
}

TEST_CASE("pcgrad leaves non-conflicting gradients alone") {
  Eigen::VectorXd g1(2), g2(2);
  g1 << 1.0, 0.0;
  g2 << 0.0, 1.0;
  const std::vector<Eigen::VectorXd> grads{g1, g2};
  int n_proj = -1;
  Eigen::VectorXd out = mtl::pcgrad(grads, 5, &n_proj);
  CHECK((out == (g1 + g2)));
  CHECK(n_proj == 0);
}

TEST_CASE("pcgrad skips zero-norm projection targets") {
  Eigen::VectorXd g(3), z = Eigen::VectorXd::Zero(3);
  g << 0.2, -0.4, 1.0;
  const std::vector<Eigen::VectorXd> grads{g, z};
  int n_proj = -1;
  Eigen::VectorXd out = mtl::pcgrad(grads, 9, &n_proj);
  CHECK((out == g));
  CHECK(n_proj == 0);
}

TEST_CASE("pcgrad passes a single gradient through unchanged") {
  Eigen::VectorXd g(4);
  g << 1.0, -2.0, 3.0, -4.0;
  const std::vector<Eigen::VectorXd> grads{g};
  CHECK((mtl::pcgrad(grads, 1) == g));
}

TEST_CASE("pcgrad on random pairs matches the closed projection and removes conflicts") {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> nd(0.0, 1.0);
  const Eigen::Index d = 8;
  for (int trial = 0; trial < 500; ++trial) {
    Eigen::VectorXd g1(d), g2(d);
    for (Eigen::Index i = 0; i < d; ++i) {
      g1(i) = nd(rng);
      g2(i) = nd(rng);
    }
    // with two tasks each projection is against the other original, so the
    // order draw cannot matter
    Eigen::VectorXd p1 = g1, p2 = g2;
    if (g1.dot(g2) < 0.0) {
      p1 -= (g1.dot(g2) / g2.squaredNorm()) * g2;
      p2 -= (g2.dot(g1) / g1.squaredNorm()) * g1;
    }
    CHECK(p1.dot(g2) >= -1e-12);
    CHECK(p2.dot(g1) >= -1e-12);

    const std::vector<Eigen::VectorXd> grads{g1, g2};
    Eigen::VectorXd out = mtl::pcgrad(grads, 1234 + trial);
    CHECK((out - (p1 + p2)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("pcgrad is deterministic in the seed") {
  std::mt19937_64 rng(77);
  std::normal_distribution<double> nd(0.0, 1.0);
  std::vector<Eigen::VectorXd> grads;
  for (int k = 0; k < 5; ++k) {
    Eigen::VectorXd g(12);
    for (Eigen::Index i = 0; i < 12; ++i) g(i) = nd(rng);
    grads.push_back(g);
  }
  Eigen::VectorXd a = mtl::pcgrad(grads, 42);
  Eigen::VectorXd b = mtl::pcgrad(grads, 42);
  CHECK((a == b));
  CHECK(std::isfinite(mtl::pcgrad(grads, 43).sum()));
}

TEST_CASE("pcgrad input validation") {
  const std::vector<Eigen::VectorXd> empty;
  CHECK_THROWS_AS((void)mtl::pcgrad(empty, 0), std::invalid_argument);

  Eigen::VectorXd a(2), b(3);
  a.setZero();
  b.setZero();
  const std::vector<Eigen::VectorXd> mismatched{a, b};
  CHECK_THROWS_AS((void)mtl::pcgrad(mismatched, 0), std::invalid_argument);
}

TEST_CASE("uncertainty loss reproduces hand-computed values") {
  mtl::UncertaintyWeights uw(2);
  CHECK(uw.n_tasks() == 2);
  CHECK(uw.log_variance(0) == 0.0);
  CHECK(uw.variance(0) == 1.0);

  Tape t;
  auto s = uw.bind(t);
  std::vector<Var> losses{t.constant(2.0), t.constant(4.0)};
  Var total = mtl::uncertainty_weighted_loss(t, losses, s);
  // unit variances: 0.5*2 + 0.5*4
  CHECK(t.scalar(total) == doctest::Approx(3.0).epsilon(1e-15));

  mtl::UncertaintyWeights one(1);
  (*one.params()[0].value)(0, 0) = std::log(2.0);
  t.reset();
  auto s1 = one.bind(t);
  std::vector<Var> single{t.constant(2.0)};
  Var v = mtl::uncertainty_weighted_loss(t, single, s1);
  const double want = 0.5 * std::exp(-std::log(2.0)) * 2.0 + 0.5 * std::log(2.0);
  CHECK(t.scalar(v) == doctest::Approx(want).epsilon(1e-15));
  CHECK(t.scalar(v) == doctest::Approx(0.5 + 0.5 * std::log(2.0)).epsilon(1e-15));
}

TEST_CASE("uncertainty loss is stationary where the variance equals the loss") {
  const std::vector<double> task_losses{0.37, 2.0, 11.5};
  mtl::UncertaintyWeights uw(3);
  auto params = uw.params();
  for (int i = 0; i < 3; ++i) {
    (*params[i].value)(0, 0) = std::log(task_losses[i]);
  }

  Tape t;
  auto s = uw.bind(t);
  std::vector<Var> losses;
  for (double l : task_losses) losses.push_back(t.constant(l));
  Var total = mtl::uncertainty_weighted_loss(t, losses, s);
  auto grads = t.gradient(total, s);
  for (const auto& g : grads) {
    CHECK(std::abs(g(0, 0)) < 1e-10);
  }
}

TEST_CASE("uncertainty loss gradient matches the closed form away from the optimum") {
  // d/ds [ e^{-s}/2 L + s/2 ] = -e^{-s} L / 2 + 1/2; at s=0, L=2: -0.5
  mtl::UncertaintyWeights uw(1);
  Tape t;
  auto s = uw.bind(t);
  std::vector<Var> losses{t.constant(2.0)};
  Var total = mtl::uncertainty_weighted_loss(t, losses, s);
  auto grads = t.gradient(total, s);
  CHECK(grads[0](0, 0) == doctest::Approx(-0.5).epsilon(1e-14));
}

TEST_CASE("uncertainty weights expose named parameter blocks") {
  mtl::UncertaintyWeights uw(2);
  auto params = uw.params();
  REQUIRE(params.size() == 2);
  CHECK(params[0].name == "uncert.s0");
  CHECK(params[1].name == "uncert.s1");
  CHECK_THROWS_AS(mtl::UncertaintyWeights(0), std::invalid_argument);

  Tape t;
  auto s = uw.bind(t);
  std::vector<Var> losses{t.constant(1.0)};
  CHECK_THROWS_AS((void)mtl::uncertainty_weighted_loss(t, losses, s),
                  std::invalid_argument);
}

TEST_SUITE_END();
