#pragma once

// Internal Gauss node generation via the Golub-Welsch eigenproblem.

#include <cmath>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace dmcv::detail {

inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre_nodes(int n, double a,
                                                                                double b) {
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n, n);
  for (int i = 1; i < n; ++i) {
    double c = i / std::sqrt(4.0 * i * i - 1.0);
    jac(i, i - 1) = c;
    jac(i - 1, i) = c;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jac);
  std::vector<double> x(n), w(n);
  for (int i = 0; i < n; ++i) {
    x[i] = 0.5 * (a + b) + 0.5 * (b - a) * es.eigenvalues()(i);
    double v = es.eigenvectors()(0, i);
    w[i] = (b - a) * v * v;
  }
  return {x, w};
}

// Physicists' convention: sum_i w_i f(x_i) approximates the e^{-x^2}-weighted
// integral of f over the real line.
inline std::pair<std::vector<double>, std::vector<double>> gauss_hermite_nodes(int n) {
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n, n);
  for (int i = 1; i < n; ++i) {
    double c = std::sqrt(0.5 * i);
    jac(i, i - 1) = c;
    jac(i - 1, i) = c;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jac);
  const double sqrt_pi = 1.7724538509055160273;
  std::vector<double> x(n), w(n);
  for (int i = 0; i < n; ++i) {
    x[i] = es.eigenvalues()(i);
    double v = es.eigenvectors()(0, i);
    w[i] = sqrt_pi * v * v;
  }
  return {x, w};
}

} // namespace dmcv::detail
