#include <doctest.h>

#include <Eigen/Core>

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

#include "pinnmtl/pde.hpp"
#include "pinnmtl/tape.hpp"

using namespace pinnmtl;
using ad::Tape;
using ad::Var;
using pde::PdeTask;
using pde::SampleSet;

namespace {

constexpr double kPi = std::numbers::pi;

template <typename F>
double simpson(F f, double lo, double hi, int n) {
  const double h = (hi - lo) / n;
  double s = f(lo) + f(hi);
  for (int i = 1; i < n; ++i) s += f(lo + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
  return s * h / 3.0;
}

// evaluates a task's residual operator on given interior points under the
// substitute solution `make_u`, returning the per-point residual values
Eigen::VectorXd residual_values(
    const PdeTask& task, const Eigen::MatrixXd& pts,
    const std::function<Var(Tape&, std::span<const Var>)>& make_u) {
  Tape t;
  std::vector<Var> coords;
  for (Eigen::Index j = 0; j < pts.cols(); ++j) {
    coords.push_back(t.input(pts.col(j)));
  }
  Var u = make_u(t, coords);
  pde::ResidualCtx ctx(t, coords, u, task.lambda);
  Var r = task.residual(ctx);
  return t.value(r);
}

SampleSet samples_for(const PdeTask& task, int n_int, int n_b,
                      std::uint64_t seed) {
  SampleSet s;
  s.interior = task.sample_interior(n_int, seed);
  s.n_original = s.interior.rows();
  s.boundary = task.sample_boundary(n_b, seed + 1);
  return s;
}

}  // namespace

TEST_SUITE_BEGIN("pde");

TEST_CASE("laplace: the exact line gives zero loss, u = x^2 leaves residual 2") {
  PdeTask task = pde::laplace_task();
  SampleSet s = samples_for(task, 40, 2, 5);

  pde::MultiHead exact_net = [](Tape& t, std::span<const Var> c) {
    return std::vector<Var>{t.affine(c[0], 2.0, 0.0)};
  };
  Tape t;
  auto parts = pde::physics_informed_loss(t, task, exact_net, s);
  CHECK(t.scalar(parts.total) < 1e-8);
  CHECK(t.scalar(parts.interior) < 1e-12);
  REQUIRE(parts.boundary.has_value());
  CHECK(t.scalar(*parts.boundary) < 1e-12);
  CHECK_FALSE(parts.constraint.has_value());

  // u = x^2: u_xx = 2 everywhere, so the mean squared residual is 4
  pde::MultiHead quad_net = [](Tape& t2, std::span<const Var> c) {
    return std::vector<Var>{ad::square(c[0])};
  };
  Tape t2;
  auto q = pde::physics_informed_loss(t2, task, quad_net, s);
  CHECK(t2.scalar(q.interior) == doctest::Approx(4.0).epsilon(1e-12));
  Eigen::VectorXd rs = t2.value(q.residual_sq);
  for (Eigen::Index i = 0; i < rs.size(); ++i) {
    CHECK(rs(i) == doctest::Approx(4.0).epsilon(1e-12));
  }
}

TEST_CASE("poisson: the closed-form solution zeroes the full loss") {
  PdeTask task = pde::poisson_task();
  SampleSet s = samples_for(task, 60, 16, 9);

  pde::MultiHead exact_net = [](Tape& t, std::span<const Var> c) {
    Var u = ad::sin(c[0] * kPi) * ad::sin(c[1] * kPi) *
            (1.0 / (2.0 * kPi * kPi));
    return std::vector<Var>{u};
  };
  Tape t;
  auto parts = pde::physics_informed_loss(t, task, exact_net, s);
  CHECK(t.scalar(parts.total) < 1e-8);

  // and the task's own exact() agrees with that closed form
  for (int i = 0; i < 10; ++i) {
    Eigen::VectorXd x = s.interior.row(i).transpose();
    const double want = std::sin(kPi * x(0)) * std::sin(kPi * x(1)) /
                        (2.0 * kPi * kPi);
    CHECK(task.exact(x) == doctest::Approx(want).epsilon(1e-15));
  }
}

TEST_CASE("fokker-planck: the stationary density zeroes residual, walls and mass") {
  PdeTask task = pde::fokker_planck_task();
  SampleSet s = samples_for(task, 0, 0, 1);  // fixed grid ignores the counts
  REQUIRE(s.interior.rows() == 441);
  REQUIRE(s.boundary.size() == 2);

  const double a = task.lambda(0), b = task.lambda(1), sig = task.lambda(2);
  const double ca = a / (sig * sig);
  const double cb = b / (2.0 * sig * sig);
  const double z =
      simpson([&](double x) { return std::exp(ca * x * x - cb * x * x * x * x); },
              -2.2, 2.2, 20000);

  pde::MultiHead exact_net = [&](Tape& t, std::span<const Var> c) {
    Var x2 = ad::square(c[0]);
    Var u = ad::exp(t.affine(x2, ca, 0.0) - ad::square(x2) * cb) * (1.0 / z);
    return std::vector<Var>{u};
  };
  Tape t;
  auto parts = pde::physics_informed_loss(t, task, exact_net, s);
  REQUIRE(parts.constraint.has_value());
  CHECK(t.scalar(parts.interior) < 1e-8);
  CHECK(t.scalar(*parts.boundary) < 1e-12);
  CHECK(t.scalar(*parts.constraint) < 1e-10);
  CHECK(t.scalar(parts.total) < 1e-8);

  // the factory's exact() is that same normalized density
  Eigen::VectorXd probe(1);
  probe << 0.7;
  CHECK(task.exact(probe) ==
        doctest::Approx(std::exp(ca * 0.49 - cb * 0.49 * 0.49) / z)
            .epsilon(1e-6));
}

TEST_CASE("residual operators match hand-derived values on random points") {
  std::mt19937_64 rng(33);
  std::uniform_real_distribution<double> u01(0.05, 0.95);

  SUBCASE("burgers with u = e^{-t} sin(pi x)") {
    PdeTask task = pde::burgers_task();
    Eigen::MatrixXd pts(50, 2);
    for (int i = 0; i < 50; ++i) {
      pts(i, 0) = u01(rng);
      pts(i, 1) = 2.0 * u01(rng) - 1.0;
    }
    Eigen::VectorXd r = residual_values(
        task, pts, [](Tape& t, std::span<const Var> c) {
          return ad::exp(-c[0]) * ad::sin(c[1] * kPi);
        });
    const double lam = task.lambda(0);
    for (int i = 0; i < 50; ++i) {
      const double tt = pts(i, 0), xx = pts(i, 1);
      const double uu = std::exp(-tt) * std::sin(kPi * xx);
      const double ut = -uu;
      const double ux = std::exp(-tt) * kPi * std::cos(kPi * xx);
      const double uxx = -kPi * kPi * uu;
      const double want = ut + uu * ux - lam * uxx;
      CHECK(r(i) == doctest::Approx(want).epsilon(1e-12));
    }
  }

  SUBCASE("poisson with u = sin(pi x) sin(pi y)") {
    PdeTask task = pde::poisson_task();
    Eigen::MatrixXd pts(50, 2);
    for (int i = 0; i < 50; ++i) {
      pts(i, 0) = u01(rng);
      pts(i, 1) = u01(rng);
    }
    Eigen::VectorXd r = residual_values(
        task, pts, [](Tape& t, std::span<const Var> c) {
          return ad::sin(c[0] * kPi) * ad::sin(c[1] * kPi);
        });
    for (int i = 0; i < 50; ++i) {
      const double ss = std::sin(kPi * pts(i, 0)) * std::sin(kPi * pts(i, 1));
      // laplacian(-2 pi^2 ss) plus forcing 1.0 * ss
      const double want = -2.0 * kPi * kPi * ss + ss;
      CHECK(r(i) == doctest::Approx(want).epsilon(1e-12));
    }
  }

  SUBCASE("fokker-planck with u = e^{-x^2/2} (1 + 0.3 x)") {
    PdeTask task = pde::fokker_planck_task();
    Eigen::MatrixXd pts(50, 1);
    for (int i = 0; i < 50; ++i) pts(i, 0) = 4.0 * u01(rng) - 2.0;
    Eigen::VectorXd r = residual_values(
        task, pts, [](Tape& t, std::span<const Var> c) {
          return ad::exp(ad::square(c[0]) * -0.5) * (1.0 + c[0] * 0.3);
        });
    const double a = task.lambda(0), b = task.lambda(1), sig = task.lambda(2);
    for (int i = 0; i < 50; ++i) {
      const double x = pts(i, 0);
      const double e = std::exp(-0.5 * x * x);
      const double uu = e * (1.0 + 0.3 * x);
      const double ux = e * (0.3 - x - 0.3 * x * x);
      const double uxx = e * (x * x + 0.3 * x * x * x - 0.9 * x - 1.0);
      const double want = 0.5 * sig * sig * uxx -
                          (a - 3.0 * b * x * x) * uu -
                          (a * x - b * x * x * x) * ux;
      CHECK(r(i) == doctest::Approx(want).epsilon(1e-12));
    }
  }
}

TEST_CASE("auxiliary tasks rescale coefficients without touching the original") {
  SUBCASE("scale-all multiplies every coefficient") {
    PdeTask base = pde::burgers_task();
    const Eigen::VectorXd before = base.lambda;
    PdeTask aux = pde::make_auxiliary(base, 0.3);
    CHECK(aux.name == "burgers_aux");
    CHECK(aux.lambda(0) == doctest::Approx(0.3 * before(0)).epsilon(1e-15));
    CHECK((base.lambda == before));
    CHECK(base.exact == nullptr);  // burgers carries no closed form
    CHECK(aux.exact == nullptr);
    CHECK_THROWS_AS((void)pde::make_auxiliary(base, 0.0),
                    std::invalid_argument);
    CHECK_THROWS_AS((void)pde::make_auxiliary(base, -1.0),
                    std::invalid_argument);
  }

  SUBCASE("set-component0 pins the first coefficient and keeps the rest") {
    PdeTask base = pde::fokker_planck_task();
    PdeTask aux = pde::make_auxiliary(base, 0.9);
    CHECK(aux.lambda(0) == base.aux_value);
    CHECK(aux.lambda(1) == base.lambda(1));
    CHECK(aux.lambda(2) == base.lambda(2));
    CHECK(aux.exact == nullptr);
    CHECK(base.exact != nullptr);
  }

  SUBCASE("set-forcing turns poisson into the unit-amplitude problem") {
    PdeTask base = pde::poisson_task();
    PdeTask aux = pde::make_auxiliary(base, 0.5);
    CHECK(aux.lambda(0) == doctest::Approx(2.0 * kPi * kPi).epsilon(1e-15));

    // with that forcing, u = sin sin solves the equation outright
    SampleSet s = samples_for(aux, 40, 8, 3);
    pde::MultiHead net = [](Tape& t, std::span<const Var> c) {
      return std::vector<Var>{ad::sin(c[0] * kPi) * ad::sin(c[1] * kPi)};
    };
    Tape t;
    auto parts = pde::physics_informed_loss(t, aux, net, s);
    CHECK(t.scalar(parts.interior) < 1e-8);
  }
}

TEST_CASE("boundary samplers produce the advertised data") {
  SUBCASE("burgers splits initial line and walls") {
    auto pts = pde::burgers_task().sample_boundary(8, 11);
    REQUIRE(pts.size() == 8);
    int n_init = 0, n_wall = 0;
    for (const auto& p : pts) {
      if (p.x(0) == 0.0 && std::abs(p.x(1)) < 1.0) {
        ++n_init;
        CHECK(p.value == doctest::Approx(-std::sin(kPi * p.x(1))).epsilon(1e-15));
      } else {
        ++n_wall;
        CHECK(std::abs(p.x(1)) == 1.0);
        CHECK(p.value == 0.0);
      }
    }
    CHECK(n_init == 4);
    CHECK(n_wall == 4);
  }

  SUBCASE("poisson pins all four edges to zero") {
    auto pts = pde::poisson_task().sample_boundary(12, 7);
    REQUIRE(pts.size() == 12);
    for (const auto& p : pts) {
      const bool on_edge = p.x(0) == 0.0 || p.x(0) == 1.0 || p.x(1) == 0.0 ||
                           p.x(1) == 1.0;
      CHECK(on_edge);
      CHECK(p.value == 0.0);
    }
  }

  SUBCASE("laplace and fokker-planck carry fixed endpoint data") {
    auto lap = pde::laplace_task().sample_boundary(0, 0);
    REQUIRE(lap.size() == 2);
    CHECK(lap[0].x(0) == 0.0);
    CHECK(lap[0].value == 0.0);
    CHECK(lap[1].x(0) == 1.0);
    CHECK(lap[1].value == 2.0);

    auto fp = pde::fokker_planck_task().sample_boundary(0, 0);
    REQUIRE(fp.size() == 2);
    CHECK(fp[0].x(0) == -2.2);
    CHECK(fp[1].x(0) == 2.2);
    CHECK(fp[0].value == 0.0);
    CHECK(fp[1].value == 0.0);
  }
}

TEST_CASE("sample sets track appended-row provenance") {
  SampleSet s;
  s.interior = Eigen::MatrixXd::Zero(5, 2);
  s.n_original = 3;
  CHECK_FALSE(s.transformed(0));
  CHECK_FALSE(s.transformed(2));
  CHECK(s.transformed(3));
  CHECK(s.transformed(4));
  CHECK(s.n_transformed() == 2);
}

TEST_CASE("the mass constraint sees only the original rows") {
  PdeTask task = pde::fokker_planck_task();
  SampleSet plain = samples_for(task, 0, 0, 1);

  SampleSet padded = plain;
  padded.interior.conservativeResize(plain.interior.rows() + 7, 1);
  for (int i = 0; i < 7; ++i) {
    padded.interior(plain.interior.rows() + i, 0) = -2.0 + 0.5 * i;
  }

  pde::MultiHead net = [](Tape& t, std::span<const Var> c) {
    return std::vector<Var>{ad::exp(ad::square(c[0]) * -1.0)};
  };
  Tape t1, t2;
  auto a = pde::physics_informed_loss(t1, task, net, plain);
  auto b = pde::physics_informed_loss(t2, task, net, padded);
  REQUIRE(a.constraint.has_value());
  REQUIRE(b.constraint.has_value());
  CHECK(t1.scalar(*a.constraint) ==
        doctest::Approx(t2.scalar(*b.constraint)).epsilon(1e-14));
  // the appended rows do change the residual mean
  CHECK(t1.scalar(a.interior) != t2.scalar(b.interior));
}

TEST_CASE("residual ctx guards its inputs and caches gradient sweeps") {
  PdeTask task = pde::laplace_task();
  Eigen::MatrixXd pts = task.sample_interior(10, 2);
  Tape t;
  std::vector<Var> coords{t.input(pts.col(0))};
  pde::MultiHead net = [](Tape& tt, std::span<const Var> c) {
    return std::vector<Var>{ad::square(c[0])};
  };
  Var u = net(t, coords)[0];
  pde::ResidualCtx ctx(t, coords, u, task.lambda);
  CHECK_THROWS_AS((void)ctx.d(u, 1), std::invalid_argument);
  CHECK_THROWS_AS((void)ctx.d(u, -1), std::invalid_argument);

  const auto& g1 = ctx.grad(u);
  const auto& g2 = ctx.grad(u);
  CHECK(&g1 == &g2);
  CHECK(g1[0].id == g2[0].id);
}

TEST_CASE("loss assembly validates its inputs") {
  PdeTask task = pde::laplace_task();
  pde::MultiHead net = [](Tape& t, std::span<const Var> c) {
    return std::vector<Var>{ad::square(c[0])};
  };

  SampleSet empty;
  empty.interior = Eigen::MatrixXd(0, 1);
  Tape t;
  CHECK_THROWS_AS((void)pde::physics_informed_loss(t, task, net, empty),
                  std::invalid_argument);

  const std::vector<PdeTask> none;
  SampleSet ok = samples_for(task, 5, 2, 1);
  CHECK_THROWS_AS((void)pde::physics_informed_losses(t, none, net, ok),
                  std::invalid_argument);

  // a one-head net cannot serve two tasks
  const std::vector<PdeTask> two{task, pde::make_auxiliary(task, 0.5)};
  CHECK_THROWS_AS((void)pde::physics_informed_losses(t, two, net, ok),
                  std::invalid_argument);
}

TEST_SUITE_END();
