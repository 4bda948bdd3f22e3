#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <string>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "hypoco/error.hpp"

namespace hypoco {

/// Largest dimension handled by dense factorizations.
inline constexpr Eigen::Index kDenseLimit = 4000;

inline Eigen::VectorXd singular_values(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return Eigen::VectorXd();
  Eigen::BDCSVD<Eigen::MatrixXd> svd(m);
  return svd.singularValues();
}

inline double spectral_norm(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  return singular_values(m)(0);
}

inline double smallest_singular_value(const Eigen::MatrixXd& m) {
  const Eigen::VectorXd s = singular_values(m);
  return s.size() ? s(s.size() - 1) : 0.0;
}

/// f(M) for symmetric M via eigendecomposition, f applied to the spectrum.
inline Eigen::MatrixXd symmetric_function(const Eigen::MatrixXd& m, const std::function<double(double)>& f) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (m + m.transpose()));
  Eigen::VectorXd v = eig.eigenvalues().unaryExpr(f);
  return eig.eigenvectors() * v.asDiagonal() * eig.eigenvectors().transpose();
}

inline Eigen::VectorXd seeded_unit_vector(Eigen::Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = gauss(rng);
  return v.normalized();
}

struct LanczosResult {
  double value = 0.0;
  Eigen::VectorXd vector;
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Largest eigenvalue of a symmetric positive semidefinite operator, with
/// full reorthogonalization. `apply` maps x to Op x.
inline LanczosResult lanczos_largest(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& apply,
                                     Eigen::Index n, double tol = 1e-10, int max_iter = 300) {
  const int kmax = static_cast<int>(std::min<Eigen::Index>(n, max_iter));
  Eigen::MatrixXd basis(n, kmax + 1);
  std::vector<double> alpha, beta;
  basis.col(0) = seeded_unit_vector(n, 0x5eed);
  LanczosResult out;
  for (int k = 0; k < kmax; ++k) {
    Eigen::VectorXd w = apply(basis.col(k));
    const double a = basis.col(k).dot(w);
    alpha.push_back(a);
    for (int pass = 0; pass < 2; ++pass) w -= basis.leftCols(k + 1) * (basis.leftCols(k + 1).transpose() * w);
    const double b = w.norm();
    const int m = k + 1;
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i) {
      t(i, i) = alpha[i];
      if (i + 1 < m) t(i, i + 1) = t(i + 1, i) = beta[i];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(t);
    const double theta = eig.eigenvalues()(m - 1);
    const double res = std::abs(b * eig.eigenvectors()(m - 1, m - 1));
    out.value = theta;
    out.residual = res;
    out.iterations = m;
    if (res <= tol * std::abs(theta) || b < 1e-300 || m == n) {
      out.vector = basis.leftCols(m) * eig.eigenvectors().col(m - 1);
      out.converged = true;
      return out;
    }
    beta.push_back(b);
    basis.col(k + 1) = w / b;
  }
  return out;
}

struct SigmaMin {
  double value = 0.0;
  std::string method;
  double residual = 0.0;
};

/// sigma_min of a square sparse matrix: dense SVD below kDenseLimit, Lanczos
/// on (L^T L)^{-1} with a sparse LU above it.
inline SigmaMin smallest_singular_value(const Eigen::SparseMatrix<double>& l, Eigen::Index dense_limit = kDenseLimit) {
  SigmaMin out;
  if (l.rows() <= dense_limit) {
    const Eigen::VectorXd s = singular_values(Eigen::MatrixXd(l));
    out.value = s(s.size() - 1);
    out.method = "dense_svd";
    if (!(out.value > 64.0 * std::numeric_limits<double>::epsilon() * s(0) * std::sqrt(double(l.rows()))))
      fail(ErrorKind::numerical, "schur", "numerically singular: sigma_min below precision floor");
    return out;
  }
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(l);
  if (lu.info() != Eigen::Success) fail(ErrorKind::numerical, "schur", "numerically singular: sparse LU failed");
  auto apply = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    Eigen::VectorXd y = lu.transpose().solve(x);
    return lu.solve(y);
  };
  const LanczosResult r = lanczos_largest(apply, l.rows(), 1e-8, 400);
  if (!r.converged) fail(ErrorKind::numerical, "schur", "solver failure: Lanczos did not converge");
  out.value = 1.0 / std::sqrt(r.value);
  out.method = "lanczos";
  out.residual = r.residual / r.value;
  return out;
}

/// Independent check of sigma_min: inverse power iteration on L^T L with
/// a dense LU factorization.
inline double inverse_power_sigma_min(const Eigen::MatrixXd& l, double tol = 1e-12, int max_iter = 20000) {
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(l);
  Eigen::VectorXd x = seeded_unit_vector(l.rows(), 0xbeef);
  double lambda = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    Eigen::VectorXd y = lu.solve(lu.transpose().solve(x));
    const double next = x.dot(y);
    x = y.normalized();
    if (it > 0 && std::abs(next - lambda) <= tol * std::abs(next)) {
      lambda = next;
      break;
    }
    lambda = next;
  }
  return 1.0 / std::sqrt(lambda);
}

inline double relative_difference(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

}  // namespace hypoco
