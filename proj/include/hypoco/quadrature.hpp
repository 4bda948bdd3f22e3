#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "hypoco/error.hpp"

namespace hypoco {

struct Rule1D {
  std::vector<double> nodes;
  std::vector<double> weights;  // sum to 1 (probability rules)
};

/// Orthonormal Hermite functions for the centred Gaussian of standard
/// deviation `sigma`: h_n(x) = He_n(x/sigma)/sqrt(n!), so that
/// <h_m, h_n> = delta_mn and x h_n = sigma (sqrt(n+1) h_{n+1} + sqrt(n) h_{n-1}).
inline void hermite_values(double x, double sigma, int max_degree, double* out) {
  const double y = x / sigma;
  out[0] = 1.0;
  if (max_degree >= 1) out[1] = y;
  for (int n = 1; n < max_degree; ++n)
    out[n + 1] = (y * out[n] - std::sqrt(static_cast<double>(n)) * out[n - 1]) / std::sqrt(n + 1.0);
}

/// Gauss rule for N(0, sigma^2) with `order` nodes. Nodes come from the
/// Golub-Welsch Jacobi matrix; weights from the Christoffel function
/// 1 / sum_k h_k(x_i)^2, which keeps the far-tail weights accurate relative
/// to the (exponentially large) polynomial values they multiply.
inline Rule1D gauss_hermite(int order, double sigma) {
  if (order < 1) fail(ErrorKind::config, "basis", "quadrature order must be positive");
  if (!(sigma > 0.0)) fail(ErrorKind::config, "basis", "Gaussian scale must be positive");
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(order, order);
  for (int n = 1; n < order; ++n) jacobi(n, n - 1) = jacobi(n - 1, n) = std::sqrt(static_cast<double>(n));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi, Eigen::EigenvaluesOnly);
  Rule1D rule;
  std::vector<double> h(order);
  for (int i = 0; i < order; ++i) {
    double y = eig.eigenvalues()(i);
    // two Newton steps on He_order refine the eigenvalue to full precision
    for (int it = 0; it < 2; ++it) {
      hermite_values(y, 1.0, order - 1, h.data());
      const double h_next = (y * h[order - 1] - std::sqrt(order - 1.0) * (order > 1 ? h[order - 2] : 0.0)) /
                            std::sqrt(static_cast<double>(order));
      const double deriv = std::sqrt(static_cast<double>(order)) * h[order - 1];
      if (deriv != 0.0) y -= h_next / deriv;
    }
    hermite_values(y, 1.0, order - 1, h.data());
    double christoffel = 0.0;
    for (double v : h) christoffel += v * v;
    rule.nodes.push_back(sigma * y);
    rule.weights.push_back(1.0 / christoffel);
  }
  return rule;
}

/// Uniform (trapezoidal) rule on [0, length), exact for trigonometric
/// polynomials of degree < points.
inline Rule1D trapezoid(int points, double length) {
  if (points < 1) fail(ErrorKind::config, "basis", "grid size must be positive");
  Rule1D rule;
  for (int j = 0; j < points; ++j) {
    rule.nodes.push_back(length * j / points);
    rule.weights.push_back(1.0 / points);
  }
  return rule;
}

}  // namespace hypoco
