#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <vector>

#include "biam/metrics.hpp"

namespace oracle {

struct DenseDiffusion {
  std::vector<double> eigenvalues;  // k leading non-trivial, descending
  Eigen::MatrixXd coords;           // node x k
};

/// Diffusion coordinates from a full eigendecomposition of the random-walk
/// matrix P = D^-1 W on a connected graph. Right eigenvectors psi are scaled so
/// that sum_i deg_i psi_i^2 = sum_i deg_i; signs follow the symmetric vector's
/// largest-magnitude entry.
inline DenseDiffusion dense_diffusion(const biam::GridGraph& g, int k, int t) {
  const auto n = static_cast<Eigen::Index>(g.node_count());
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (auto e = g.offsets[i]; e < g.offsets[i + 1]; ++e) W(i, g.targets[static_cast<std::size_t>(e)]) = 1.0;
  }
  const Eigen::VectorXd deg = W.rowwise().sum();
  const Eigen::VectorXd s = deg.cwiseSqrt().cwiseInverse();
  const Eigen::MatrixXd S = s.asDiagonal() * W * s.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(S);
  DenseDiffusion out;
  out.coords.resize(n, k);
  const double vol = deg.sum();
  for (int i = 0; i < k; ++i) {
    const Eigen::Index col = n - 2 - i;  // skip the trivial top eigenvector
    Eigen::VectorXd phi = solver.eigenvectors().col(col);
    Eigen::Index arg;
    phi.cwiseAbs().maxCoeff(&arg);
    if (phi[arg] < 0) phi = -phi;
    const double lambda = solver.eigenvalues()[col];
    out.eigenvalues.push_back(lambda);
    const Eigen::VectorXd psi = phi.cwiseProduct(s) * std::sqrt(vol);
    out.coords.col(i) = std::pow(lambda, t) * psi;
  }
  return out;
}

}  // namespace oracle
