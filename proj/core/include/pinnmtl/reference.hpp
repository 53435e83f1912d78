#pragma once

#include <Eigen/Core>

#include <filesystem>
#include <iosfwd>

namespace pinnmtl::pde {

/// Viscous Burgers solution for u(0, x) = -sin(pi x) on x in [-1, 1] with
/// homogeneous walls, via the logarithmic (heat-kernel) transform. The
/// smoothing quotient is summed by a stabilized composite Simpson rule with
/// n_nodes grid points per width of the narrowest integrand feature, on a
/// window holding everything within e^-40 of the weight's peak. t = 0
/// returns the initial profile exactly.
double burgers_exact(double t, double x, double lambda, int n_nodes = 160);

struct ReferenceTable {
  Eigen::MatrixXd points;  // rows = (t, x)
  Eigen::VectorXd values;
};

/// Tensor grid of nt x nx points over [0,1] x [-1,1], both ends inclusive.
ReferenceTable burgers_reference_table(int nt, int nx, double lambda);

void write_reference_csv(const std::filesystem::path& path,
                         const ReferenceTable& table);
ReferenceTable load_reference_csv(const std::filesystem::path& path);

/// Nodes and weights of n-point Gauss-Hermite quadrature (weight e^{-z^2}),
/// by eigen-decomposition of the Jacobi matrix.
void gauss_hermite(int n, Eigen::VectorXd& nodes, Eigen::VectorXd& weights);

}  // namespace pinnmtl::pde
