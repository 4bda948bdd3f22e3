#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "hypoco/basis.hpp"
#include "hypoco/error.hpp"
#include "hypoco/quadrature.hpp"

namespace hypoco {

struct PoincareResult {
  double k2 = 0.0;
  Eigen::VectorXd eigenvector;  // orthonormal coefficients, mean-zero span
  double residual = 0.0;        // ||G v - K^2 v|| / ||v||
};

/// K_nu^2: smallest eigenvalue of the Galerkin grad^* grad on the mean-zero
/// position span (the constant, index 0, is its kernel and is dropped).
inline PoincareResult poincare_constant_position(const BasisSet& basis) {
  const int n = basis.position_count() - 1;
  if (n < 1) fail(ErrorKind::config, "constants", "position basis has no mean-zero functions (n_q = 0)");
  const Eigen::MatrixXd g = basis.position().laplacian_form().bottomRightCorner(n, n);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (g + g.transpose()));
  if (eig.info() != Eigen::Success) fail(ErrorKind::numerical, "constants", "solver failure: eigensolver did not converge");
  PoincareResult r;
  r.k2 = eig.eigenvalues()(0);
  r.eigenvector = eig.eigenvectors().col(0);
  r.residual = (g * r.eigenvector - r.k2 * r.eigenvector).norm();
  if (!(r.k2 > 0.0) || !(r.residual <= 1e-8)) fail(ErrorKind::numerical, "constants", "solver failure: K_nu^2 not positive");
  return r;
}

/// K_kappa^2 for the Gaussian momenta: grad_p^* grad_p is the number operator
/// divided by sigma^2 = m/beta, so the gap is beta/m. The returned value is the
/// Galerkin eigenvalue; the analytic one is `beta / mass`.
inline PoincareResult poincare_constant_momentum(const BasisSpec& spec) {
  if (spec.n_p < 1) fail(ErrorKind::config, "constants", "momentum basis has no mean-zero functions (n_p = 0)");
  const double inv_var = spec.beta / spec.mass;
  PoincareResult r;
  r.k2 = inv_var;  // degree-one Hermite functions, eigenvalue 1 * beta/m
  r.eigenvector = Eigen::VectorXd::Unit(spec.n_p, 0);
  return r;
}

struct GrowthConstants {
  double c1 = 0.0;
  double c2 = 0.0;
  double c3 = 0.0;
  double K_hessian = 0.0;  // max over the grid of -lambda_min(Hess V), clipped at 0
  int points_per_axis = 0;
  std::vector<double> argmax_c1;
  std::vector<double> argmax_c3;
  std::array<double, 11> c1_by_c2{};
  double cprime_general = 0.0;  // case (iii) C' for the selected triple
};

/// Case (iii) C' = 2 c3 [sqrt(d) + 2 max(8 c3/beta^2, sqrt(c1 d/beta))].
inline double general_case_cprime(double c1, double c3, double beta, int d) {
  return 2.0 * c3 * (std::sqrt(double(d)) + 2.0 * std::max(8.0 * c3 / (beta * beta), std::sqrt(c1 * d / beta)));
}

inline int default_growth_grid(const Potential& v) {
  const int b = std::max(1, v.bandwidth());
  switch (v.dim()) {
    case 1: return std::max(512, 16 * b);
    case 2: return std::max(256, 16 * b);
    default: return std::max(24, 8 * b);
  }
}

/// Grid maximization of the growth conditions
///   Lap V <= c1 d + (c2 beta/2)|grad V|^2,  |Hess V|_F^2 <= c3^2 (d + |grad V|^2).
/// c2 runs over {0, 0.1, ..., 1}; the pair minimizing case (iii) C' is kept,
/// ties going to the smaller c2. A fixed c2 in [0,1] can be imposed.
inline GrowthConstants estimate_growth_constants(const Potential& v, double beta, int points = 0,
                                                 std::optional<double> fixed_c2 = std::nullopt) {
  if (!(beta > 0.0)) fail(ErrorKind::config, "constants", "beta must be positive");
  if (fixed_c2 && !(*fixed_c2 >= 0.0 && *fixed_c2 <= 1.0)) fail(ErrorKind::config, "constants", "c2 must lie in [0,1]");
  const int d = v.dim();
  if (points <= 0) points = default_growth_grid(v);
  constexpr double floor = 1e-6;
  long long total = 1;
  for (int i = 0; i < d; ++i) total *= points;
  const Rule1D axis = trapezoid(points, v.torus_length());

  GrowthConstants g;
  g.points_per_axis = points;
  std::array<double, 11> best_c1;
  best_c1.fill(-std::numeric_limits<double>::infinity());
  std::array<std::vector<double>, 11> arg_c1;
  double best_c3 = -1.0;
  double k_hess = 0.0;
  std::vector<double> q(d), grad(d);
  for (long long j = 0; j < total; ++j) {
    long long rest = j;
    for (int i = d - 1; i >= 0; --i) {
      q[i] = axis.nodes[rest % points];
      rest /= points;
    }
    v.gradient(q.data(), grad.data());
    const Eigen::MatrixXd h = v.hessian(q.data());
    double g2 = 0.0;
    for (double x : grad) g2 += x * x;
    const double lap = h.trace();
    for (int k = 0; k <= 10; ++k) {
      const double c2 = 0.1 * k;
      const double val = (lap - 0.5 * c2 * beta * g2) / d;
      if (val > best_c1[k]) {
        best_c1[k] = val;
        arg_c1[k] = q;
      }
    }
    const double ratio = h.norm() / std::sqrt(d + g2);
    if (ratio > best_c3) {
      best_c3 = ratio;
      g.argmax_c3 = q;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(h, Eigen::EigenvaluesOnly);
    k_hess = std::max(k_hess, -eig.eigenvalues()(0));
  }
  g.c3 = std::max(best_c3, floor);
  g.K_hessian = k_hess;
  for (int k = 0; k <= 10; ++k) g.c1_by_c2[k] = std::max(best_c1[k], floor);

  int chosen = 0;
  if (fixed_c2) {
    // c1 for an arbitrary c2 is recomputed exactly below; pick the slot only for argmax reporting
    chosen = static_cast<int>(std::lround(*fixed_c2 * 10.0));
  } else {
    double best = std::numeric_limits<double>::infinity();
    for (int k = 0; k <= 10; ++k) {
      const double cp = general_case_cprime(g.c1_by_c2[k], g.c3, beta, d);
      if (cp < best * (1.0 - 1e-12)) {
        best = cp;
        chosen = k;
      }
    }
  }
  g.c2 = fixed_c2 ? *fixed_c2 : 0.1 * chosen;
  g.c1 = g.c1_by_c2[chosen];
  g.argmax_c1 = arg_c1[chosen];
  if (fixed_c2 && std::abs(*fixed_c2 - 0.1 * chosen) > 1e-12) {
    double c1 = -std::numeric_limits<double>::infinity();
    for (long long j = 0; j < total; ++j) {
      long long rest = j;
      for (int i = d - 1; i >= 0; --i) {
        q[i] = axis.nodes[rest % points];
        rest /= points;
      }
      v.gradient(q.data(), grad.data());
      double g2 = 0.0;
      for (double x : grad) g2 += x * x;
      const double val = (v.laplacian(q.data()) - 0.5 * *fixed_c2 * beta * g2) / d;
      if (val > c1) {
        c1 = val;
        g.argmax_c1 = q;
      }
    }
    g.c1 = std::max(c1, floor);
  }
  g.cprime_general = general_case_cprime(g.c1, g.c3, beta, d);
  return g;
}

struct MassMatrixResult {
  double value = 0.0;          // lambda_min(M), M = int Hess U dkappa
  double via_hessian = 0.0;    // quadrature of Hess U = Id/m
  double via_gradient = 0.0;   // beta * quadrature of (dU/dp)^2
};

/// lambda_min(M) for U = |p|^2/(2m); M is isotropic so one coordinate suffices.
inline MassMatrixResult lambda_min_M(double mass, double beta) {
  if (!(mass > 0.0) || !(beta > 0.0)) fail(ErrorKind::config, "constants", "mass and beta must be positive");
  const Rule1D rule = gauss_hermite(8, std::sqrt(mass / beta));
  MassMatrixResult r;
  for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
    const double p = rule.nodes[j];
    r.via_hessian += rule.weights[j] * (1.0 / mass);
    r.via_gradient += rule.weights[j] * beta * (p / mass) * (p / mass);
  }
  r.value = 1.0 / mass;
  return r;
}

/// Quadrature grid for the position lemmas, fine enough for products of two
/// band-limited functions with derivatives of V against exp(-beta V).
struct LemmaGrid {
  Eigen::MatrixXd nodes;
  Eigen::VectorXd weights;
  std::vector<Eigen::VectorXd> grad_v;
  std::vector<Eigen::MatrixXd> hess_v;
};

inline LemmaGrid make_lemma_grid(const BasisSet& basis) {
  LemmaGrid g;
  const int points = 2 * basis.position().grid_points_per_axis() + 8 * basis.potential().bandwidth();
  basis.position().build_grid(points, basis.spec().beta, basis.potential(), g.nodes, g.weights);
  const int d = basis.spec().d;
  std::vector<double> q(d), grad(d);
  for (Eigen::Index j = 0; j < g.nodes.rows(); ++j) {
    for (int i = 0; i < d; ++i) q[i] = g.nodes(j, i);
    basis.potential().gradient(q.data(), grad.data());
    g.grad_v.push_back(Eigen::Map<Eigen::VectorXd>(grad.data(), d));
    g.hess_v.push_back(basis.potential().hessian(q.data()));
  }
  return g;
}

/// Coefficients (full position span, constant included) with i.i.d. standard
/// normal entries.
inline Eigen::VectorXd random_position_function(const BasisSet& basis, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss;
  Eigen::VectorXd c(basis.position_count());
  for (Eigen::Index i = 0; i < c.size(); ++i) c(i) = gauss(rng);
  return c;
}

struct PositionNorms {
  double l2 = 0.0;        // ||u||^2
  double grad = 0.0;      // ||grad u||^2
  double hess = 0.0;      // sum_ij ||d_ij u||^2
  double gradv = 0.0;     // ||u grad V||^2
  double witten = 0.0;    // ||grad^* grad u||^2, grad^* grad = -Lap + beta grad V . grad
  double curvature = 0.0; // int grad u^T Hess V grad u dnu
};

inline PositionNorms position_norms(const BasisSet& basis, const LemmaGrid& grid, const Eigen::VectorXd& u) {
  if (u.size() != basis.position_count()) fail(ErrorKind::config, "constants", "basis mismatch: position coefficients");
  const double beta = basis.spec().beta;
  const int d = basis.spec().d;
  PositionNorms n;
  std::vector<double> q(d);
  for (Eigen::Index j = 0; j < grid.nodes.rows(); ++j) {
    for (int i = 0; i < d; ++i) q[i] = grid.nodes(j, i);
    const auto jet = basis.position().jet(u, q.data());
    const double w = grid.weights(j);
    const double witten = -jet.hessian.trace() + beta * grid.grad_v[j].dot(jet.gradient);
    n.l2 += w * jet.value * jet.value;
    n.grad += w * jet.gradient.squaredNorm();
    n.hess += w * jet.hessian.squaredNorm();
    n.gradv += w * jet.value * jet.value * grid.grad_v[j].squaredNorm();
    n.witten += w * witten * witten;
    n.curvature += w * jet.gradient.dot(grid.hess_v[j] * jet.gradient);
  }
  return n;
}

/// ||phi grad V||^2 <= (16/beta^2)||grad phi||^2 + (4 d c1/beta)||phi||^2; returns LHS/RHS.
inline double check_villani_lemma(const BasisSet& basis, const LemmaGrid& grid, const Eigen::VectorXd& phi,
                                  double c1) {
  const double beta = basis.spec().beta;
  const PositionNorms n = position_norms(basis, grid, phi);
  const double rhs = 16.0 / (beta * beta) * n.grad + 4.0 * basis.spec().d * c1 / beta * n.l2;
  const double ratio = rhs > 0.0 ? n.gradv / rhs : 0.0;
  if (ratio > 1.0 + 1e-12) fail(ErrorKind::invariant, "constants", "lemma violation: ratio " + std::to_string(ratio));
  return ratio;
}

struct BochnerResult {
  double lhs = 0.0;  // sum_ij ||d_ij u||^2
  double rhs = 0.0;  // ||grad^* grad u||^2 - int grad u^T Hess V grad u
  double residual = 0.0;
};

inline BochnerResult check_bochner(const BasisSet& basis, const LemmaGrid& grid, const Eigen::VectorXd& u) {
  const PositionNorms n = position_norms(basis, grid, u);
  BochnerResult r{n.hess, n.witten - n.curvature, 0.0};
  r.residual = std::abs(r.lhs - r.rhs);
  if (r.residual > 1e-8 * std::max(r.lhs, 1.0))
    fail(ErrorKind::invariant, "constants", "Bochner identity failure: residual " + std::to_string(r.residual));
  return r;
}

/// ||Hess u||^2 <= C ||grad^* grad u||^2 + C' ||grad u||^2; returns LHS/RHS.
inline double check_controlH2(const BasisSet& basis, const LemmaGrid& grid, const Eigen::VectorXd& u, double c,
                              double cprime) {
  const PositionNorms n = position_norms(basis, grid, u);
  const double rhs = c * n.witten + cprime * n.grad;
  const double ratio = rhs > 0.0 ? n.hess / rhs : 0.0;
  if (ratio > 1.0 + 1e-10)
    fail(ErrorKind::invariant, "constants", "constant-case misdeclared: ratio " + std::to_string(ratio));
  return ratio;
}

}  // namespace hypoco
