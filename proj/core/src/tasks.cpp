#include <cmath>
#include <numbers>
#include <random>

#include "pinnmtl/pde.hpp"
#include "pinnmtl/sampling.hpp"

namespace pinnmtl::pde {

namespace {

constexpr double kPi = std::numbers::pi;

Eigen::VectorXd vec1(double a) {
  Eigen::VectorXd v(1);
  v << a;
  return v;
}

Eigen::VectorXd vec2(double a, double b) {
  Eigen::VectorXd v(2);
  v << a, b;
  return v;
}

/// Simpson quadrature of f over [lo, hi] with n (even) intervals.
template <typename F>
double simpson(F f, double lo, double hi, int n) {
  const double h = (hi - lo) / n;
  double s = f(lo) + f(hi);
  for (int i = 1; i < n; ++i) {
    s += f(lo + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
  }
  return s * h / 3.0;
}

}  // namespace

const double kFokkerPlanckDx = 0.01;

PdeTask burgers_task() {
  PdeTask t;
  t.name = "burgers";
  t.input_dim = 2;  // (t, x)
  t.lb = vec2(0.0, -1.0);
  t.ub = vec2(1.0, 1.0);
  t.lambda = vec1(0.01 / kPi);
  t.aux_rule = AuxRule::ScaleAll;
  t.residual = [](ResidualCtx& c) {
    const auto& g = c.grad(c.u);  // u_t, u_x
    ad::Var u_xx = c.d(g[1], 1);
    return g[0] + c.u * g[1] - c.lambda(0) * u_xx;
  };
  const Eigen::VectorXd lb = t.lb, ub = t.ub;
  t.sample_interior = [lb, ub](int n, std::uint64_t seed) {
    return sampling::lhs(n, lb, ub, seed);
  };
  t.sample_boundary = [](int n, std::uint64_t seed) {
    // half on the initial line, the rest split between the walls
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ux(-1.0, 1.0);
    std::uniform_real_distribution<double> ut(0.0, 1.0);
    std::vector<BoundaryPoint> pts;
    const int n_init = n / 2;
    const int n_left = (n - n_init) / 2;
    for (int i = 0; i < n_init; ++i) {
      const double x = ux(rng);
      pts.push_back({vec2(0.0, x), -std::sin(kPi * x)});
    }
    for (int i = 0; i < n_left; ++i) {
      pts.push_back({vec2(ut(rng), -1.0), 0.0});
    }
    for (int i = 0; i < n - n_init - n_left; ++i) {
      pts.push_back({vec2(ut(rng), 1.0), 0.0});
    }
    return pts;
  };
  return t;
}

PdeTask poisson_task() {
  PdeTask t;
  t.name = "poisson";
  t.input_dim = 2;  // (x, y)
  t.lb = vec2(0.0, 0.0);
  t.ub = vec2(1.0, 1.0);
  // forcing is lambda * (-sin(pi x) sin(pi y)); the auxiliary variant
  // rescales it to -2 pi^2 sin sin
  t.lambda = vec1(1.0);
  t.aux_rule = AuxRule::SetForcing;
  t.aux_value = 2.0 * kPi * kPi;
  t.residual = [](ResidualCtx& c) {
    const auto& g = c.grad(c.u);
    ad::Var u_xx = c.d(g[0], 0);
    ad::Var u_yy = c.d(g[1], 1);
    ad::Var f = c.lambda(0) * ad::sin(c.coords[0] * kPi) *
                ad::sin(c.coords[1] * kPi);
    return u_xx + u_yy + f;  // u_xx + u_yy - (-lambda sin sin)
  };
  t.exact = [](const Eigen::VectorXd& x) {
    return std::sin(kPi * x(0)) * std::sin(kPi * x(1)) / (2.0 * kPi * kPi);
  };
  const Eigen::VectorXd lb = t.lb, ub = t.ub;
  t.sample_interior = [lb, ub](int n, std::uint64_t seed) {
    return sampling::lhs(n, lb, ub, seed);
  };
  t.sample_boundary = [](int n, std::uint64_t seed) {
    // the exact solution vanishes on all four edges
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::vector<BoundaryPoint> pts;
    for (int i = 0; i < n; ++i) {
      const double s = u01(rng);
      switch (i % 4) {
        case 0: pts.push_back({vec2(s, 0.0), 0.0}); break;
        case 1: pts.push_back({vec2(s, 1.0), 0.0}); break;
        case 2: pts.push_back({vec2(0.0, s), 0.0}); break;
        default: pts.push_back({vec2(1.0, s), 0.0}); break;
      }
    }
    return pts;
  };
  return t;
}

PdeTask fokker_planck_task() {
  PdeTask t;
  t.name = "fokker_planck";
  t.input_dim = 1;
  t.lb = vec1(-2.2);
  t.ub = vec1(2.2);
  // (a, b, sigma); drift is a x - b x^3
  t.lambda = Eigen::Vector3d(0.3, 0.5, 0.5);
  t.aux_rule = AuxRule::SetComponent0;
  t.aux_value = 0.5;
  t.residual = [](ResidualCtx& c) {
    const double a = c.lambda(0), b = c.lambda(1), sig = c.lambda(2);
    ad::Var x = c.coords[0];
    ad::Var x2 = ad::square(x);
    ad::Var u_x = c.d(c.u, 0);
    ad::Var u_xx = c.d(u_x, 0);
    // -[(a x - b x^3) u]_x + sigma^2/2 u_xx, with the product rule applied
    ad::Var div_term = c.tape.affine(x2, -3.0 * b, a);  // a - 3 b x^2
    ad::Var drift = x * c.tape.affine(x2, -b, a);       // a x - b x^3
    return (0.5 * sig * sig) * u_xx - div_term * c.u - drift * u_x;
  };
  t.global_constraint = [](ad::Tape& tape, ad::Var u) {
    // discrete unit mass on the collocation grid
    return tape.square(
        tape.affine(tape.sum_all(u), kFokkerPlanckDx, -1.0));
  };
  {
    const double a = t.lambda(0), b = t.lambda(1), sig = t.lambda(2);
    const double ca = a / (sig * sig);
    const double cb = b / (2.0 * sig * sig);
    auto density = [ca, cb](double x) {
      return std::exp(ca * x * x - cb * x * x * x * x);
    };
    const double z = simpson(density, -2.2, 2.2, 200000);
    t.exact = [density, z](const Eigen::VectorXd& x) {
      return density(x(0)) / z;
    };
  }
  t.sample_interior = [](int, std::uint64_t) {
    // fixed collocation grid; the count argument is implied by the spacing
    return Eigen::MatrixXd(sampling::grid1d(-2.2, 2.2, kFokkerPlanckDx));
  };
  t.sample_boundary = [](int, std::uint64_t) {
    return std::vector<BoundaryPoint>{{vec1(-2.2), 0.0}, {vec1(2.2), 0.0}};
  };
  return t;
}

PdeTask laplace_task() {
  PdeTask t;
  t.name = "laplace";
  t.input_dim = 1;
  t.lb = vec1(0.0);
  t.ub = vec1(1.0);
  t.lambda = Eigen::VectorXd(0);
  t.aux_rule = AuxRule::ScaleAll;
  t.residual = [](ResidualCtx& c) {
    ad::Var u_x = c.d(c.u, 0);
    return c.d(u_x, 0);
  };
  t.exact = [](const Eigen::VectorXd& x) { return 2.0 * x(0); };
  const Eigen::VectorXd lb = t.lb, ub = t.ub;
  t.sample_interior = [lb, ub](int n, std::uint64_t seed) {
    return sampling::lhs(n, lb, ub, seed);
  };
  t.sample_boundary = [](int, std::uint64_t) {
    return std::vector<BoundaryPoint>{{vec1(0.0), 0.0}, {vec1(1.0), 2.0}};
  };
  return t;
}

}  // namespace pinnmtl::pde
