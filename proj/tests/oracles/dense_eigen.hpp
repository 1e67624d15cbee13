#pragma once

// Dense generalized eigensolve of the discrete operator c(-Lap) + V assembled
// column by column from the library's Laplacian (no shared solver code).

#include <Eigen/Dense>

#include "hrf/geometry.hpp"

namespace oracle {

struct DenseEigen {
  double lambda;
  Eigen::VectorXd vector;  // unit in the rho-weighted inner product
};

inline DenseEigen dense_smallest(const hrf::ReducedGeometry& g, double c, const hrf::GridField& V) {
  const std::size_t n = g.nodes();
  const hrf::GridField rho = hrf::volume_density(g);
  Eigen::MatrixXd M(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    hrf::GridField e = hrf::GridField::constant(n, g.period(), 0.0);
    e[j] = 1.0;
    const hrf::GridField col = hrf::laplace_beltrami(g, e);
    for (std::size_t i = 0; i < n; ++i) M(i, j) = -c * col[i] + (i == j ? V[i] : 0.0);
  }
  // Symmetrize with D = diag(sqrt(rho)): D M D^{-1}
  Eigen::VectorXd d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = std::sqrt(rho[i] * g.spacing());
  Eigen::MatrixXd Ms = d.asDiagonal() * M * d.cwiseInverse().asDiagonal();
  Ms = 0.5 * (Ms + Ms.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Ms);
  DenseEigen out{es.eigenvalues()[0], es.eigenvectors().col(0).cwiseQuotient(d)};
  return out;
}

}  // namespace oracle
