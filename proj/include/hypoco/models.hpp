#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "hypoco/basis.hpp"
#include "hypoco/constants.hpp"
#include "hypoco/error.hpp"
#include "hypoco/linalg.hpp"
#include "hypoco/operators.hpp"
#include "hypoco/schur.hpp"

namespace hypoco {

enum class CaseKind { convex, hessian_lower_bound, general, lsi };

inline CaseKind parse_case(const std::string& s) {
  if (s == "convex" || s == "i") return CaseKind::convex;
  if (s == "hessian_lower_bound" || s == "ii") return CaseKind::hessian_lower_bound;
  if (s == "general" || s == "iii") return CaseKind::general;
  if (s == "lsi") return CaseKind::lsi;
  fail(ErrorKind::config, "models", "unknown proposition case '" + s + "'");
}

inline const char* to_string(CaseKind c) {
  switch (c) {
    case CaseKind::convex: return "convex";
    case CaseKind::hessian_lower_bound: return "hessian_lower_bound";
    case CaseKind::general: return "general";
    default: return "lsi";
  }
}

struct PropositionCase {
  CaseKind kind = CaseKind::convex;
  std::optional<double> K;
  std::optional<double> c1, c2, c3, beta;
  std::optional<int> d;
  std::optional<double> C_LSI;
  std::vector<double> exp_moments;  // int exp(2 c3 C_LSI |d_i V|) dnu, per coordinate
};

/// (C, C') with ||Hess u||^2 <= C ||grad^* grad u||^2 + C' ||grad u||^2.
inline std::pair<double, double> prop_CCprime(const PropositionCase& pc) {
  auto need = [](bool ok) {
    if (!ok) fail(ErrorKind::config, "models", "case parameters incomplete");
  };
  switch (pc.kind) {
    case CaseKind::convex: return {1.0, 0.0};
    case CaseKind::hessian_lower_bound:
      need(pc.K.has_value() && *pc.K >= 0.0);
      return {1.0, *pc.K};
    case CaseKind::general:
      need(pc.c1 && pc.c3 && pc.beta && pc.d && *pc.beta > 0.0 && *pc.d > 0);
      if (pc.c2) need(*pc.c2 >= 0.0 && *pc.c2 <= 1.0);
      return {2.0, general_case_cprime(*pc.c1, *pc.c3, *pc.beta, *pc.d)};
    case CaseKind::lsi: {
      need(pc.c3 && pc.C_LSI && pc.d && *pc.c3 > 0.0 && *pc.C_LSI > 0.0 && *pc.d > 0 &&
           static_cast<int>(pc.exp_moments.size()) == *pc.d);
      double mx = 0.0;
      for (double m : pc.exp_moments) {
        need(std::isfinite(m) && m > 0.0);
        mx = std::max(mx, m);
      }
      const double c3 = *pc.c3, cl = *pc.C_LSI;
      return {2.0, 2.0 * (c3 + (std::log(double(*pc.d)) + std::log(mx)) / (2.0 * c3 * cl))};
    }
  }
  fail(ErrorKind::config, "models", "case parameters incomplete");
}

/// int exp(2 c3 C_LSI |d_i V|) dnu for each coordinate, on the lemma grid.
inline std::vector<double> lsi_exp_moments(const BasisSet& basis, double c3, double c_lsi) {
  const LemmaGrid grid = make_lemma_grid(basis);
  std::vector<double> out(basis.spec().d, 0.0);
  for (Eigen::Index j = 0; j < grid.nodes.rows(); ++j)
    for (int i = 0; i < basis.spec().d; ++i)
      out[i] += grid.weights(j) * std::exp(2.0 * c3 * c_lsi * std::abs(grid.grad_v[j](i)));
  return out;
}

/// ||Pi+ A^2 Pi0 (A_{+0}^T A_{+0})^{-1}||; Pi+ A Pi+ A Pi0 = A_{++} A_{+0}.
inline double norm_X(const Decomposition& dec) {
  const Eigen::MatrixXd y = dec.A_p0 * dec.AtA.ldlt().solve(Eigen::MatrixXd::Identity(dec.dim0(), dec.dim0()));
  return spectral_norm(dec.A_pp * y);
}

/// X^2 <= 2 (C + C'/K_nu^2); returns the ratio X^2 / RHS.
inline double check_proposition(double x2, std::pair<double, double> cc, double k_nu2, double slack = 1e-6) {
  const double rhs = 2.0 * (cc.first + cc.second / k_nu2);
  if (x2 > rhs + slack)
    fail(ErrorKind::invariant, "models",
         "proposition violation: X^2 = " + std::to_string(x2) + " > " + std::to_string(rhs));
  return x2 / rhs;
}

/// Gram matrix of U_ij = p_i p_j/m^2 - delta_ij/(m beta) in L^2(kappa), as a
/// d^2 x d^2 matrix indexed by (i,j), computed by Gauss-Hermite quadrature.
inline Eigen::MatrixXd kinetic_moment_gram(int d, double mass, double beta) {
  const Rule1D rule = gauss_hermite(8, std::sqrt(mass / beta));
  const int nodes = static_cast<int>(rule.nodes.size());
  long long total = 1;
  for (int i = 0; i < d; ++i) total *= nodes;
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(d * d, d * d);
  std::vector<double> p(d);
  Eigen::VectorXd u(d * d);
  for (long long j = 0; j < total; ++j) {
    long long rest = j;
    double w = 1.0;
    for (int i = d - 1; i >= 0; --i) {
      p[i] = rule.nodes[rest % nodes];
      w *= rule.weights[rest % nodes];
      rest /= nodes;
    }
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) u(a * d + b) = p[a] * p[b] / (mass * mass) - (a == b ? 1.0 / (mass * beta) : 0.0);
    g += w * u * u.transpose();
  }
  return g;
}

/// 2 beta gamma ||Pi1 L_FD Pi1||/(lambda_min(M) K_nu^2) + (4 beta/(gamma K_kappa^2))(3/4 + X^2 + gamma^2 Y^2).
inline double langevin_general_formula(double beta, double gamma, double norm_pi1_lfd_pi1, double lambda_min_m,
                                       double k_nu2, double k_kappa2, double x, double y) {
  return 2.0 * beta * gamma * norm_pi1_lfd_pi1 / (lambda_min_m * k_nu2) +
         4.0 * beta / (gamma * k_kappa2) * (0.75 + x * x + gamma * gamma * y * y);
}

/// 2 beta gamma/K_nu^2 + (4m/gamma)(3/4 + X^2).
inline double corollary_formula(double beta, double gamma, double mass, double k_nu2, double x) {
  return 2.0 * beta * gamma / k_nu2 + 4.0 * mass / gamma * (0.75 + x * x);
}

/// 2 beta gamma/(lambda_min(M) K_nu^2) + (2/gamma)(3/2 + X^2).
inline double rhmc_formula(double beta, double gamma, double lambda_min_m, double k_nu2, double x) {
  return 2.0 * beta * gamma / (lambda_min_m * k_nu2) + 2.0 / gamma * (1.5 + x * x);
}

struct LangevinBounds {
  double general = 0.0;
  double corollary = 0.0;
  double norm_Pi1LFDPi1 = 0.0;
  double X = 0.0;
  double Y = 0.0;  // ||Pi2 L_FD Pi1 L_ham Pi0 (A^T A)^{-1}||
  double K_nu2 = 0.0;
  double K_kappa2 = 0.0;
  double lambda_min_M = 0.0;
};

/// General Langevin bound
///   2 beta gamma ||Pi1 L_FD Pi1||/(lambda_min(M) K_nu^2)
///   + (4 beta/(gamma K_kappa^2)) (3/4 + X^2 + gamma^2 Y^2)
/// and its quadratic-kinetic-energy form 2 beta gamma/K_nu^2 + (4m/gamma)(3/4 + X^2).
inline LangevinBounds langevin_bounds(const OperatorBundle& ops, const Decomposition& dec, double k_nu2) {
  if (ops.model.model != Model::langevin) fail(ErrorKind::config, "models", "model/basis mismatch: not a Langevin bundle");
  const ModelSpec& m = ops.model;
  LangevinBounds r;
  r.K_nu2 = k_nu2;
  r.K_kappa2 = m.beta / m.mass;
  r.lambda_min_M = lambda_min_M(m.mass, m.beta).value;
  std::vector<Eigen::Index> idx = dec.plus;
  Eigen::VectorXd fd(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) fd(i) = ops.L_FD.matrix.coeff(idx[i], idx[i]);
  r.norm_Pi1LFDPi1 = spectral_norm(dec.P1.transpose() * fd.asDiagonal() * dec.P1);
  r.X = norm_X(dec);
  const Eigen::MatrixXd ainv = dec.A_p0 * dec.AtA.ldlt().solve(Eigen::MatrixXd::Identity(dec.dim0(), dec.dim0()));
  r.Y = spectral_norm(dec.project_h2(fd.asDiagonal() * ainv));
  r.general = langevin_general_formula(m.beta, m.gamma, r.norm_Pi1LFDPi1, r.lambda_min_M, k_nu2, r.K_kappa2, r.X, r.Y);
  r.corollary = corollary_formula(m.beta, m.gamma, m.mass, k_nu2, r.X);
  return r;
}

struct RhmcBound {
  double value = 0.0;
  double X = 0.0;
  double norm_S11 = 0.0;
  double norm_S21 = 0.0;
};

/// 2 beta gamma/(lambda_min(M) K_nu^2) + (2/gamma)(3/2 + X^2), with the
/// Resolvent bound inputs s = gamma, ||S11|| = gamma, S21 = 0 checked.
inline RhmcBound rhmc_bound(const OperatorBundle& ops, const Decomposition& dec, double k_nu2, double tol = 1e-10) {
  if (ops.model.model != Model::boltzmann_rhmc) fail(ErrorKind::config, "models", "model/basis mismatch: not an RHMC bundle");
  const ModelSpec& m = ops.model;
  RhmcBound r;
  const IntermediateNorms in = intermediate_norms(dec);
  r.norm_S11 = in.norm_S11;
  r.norm_S21 = in.norm_S21;
  if (!(std::abs(r.norm_S11 - m.gamma) < tol * std::max(1.0, m.gamma)) || !(r.norm_S21 < tol * std::max(1.0, m.gamma)))
    fail(ErrorKind::invariant, "models", "RHMC structure violated: ||S11|| != gamma or S21 != 0");
  r.X = norm_X(dec);
  r.value = rhmc_formula(m.beta, m.gamma, lambda_min_M(m.mass, m.beta).value, k_nu2, r.X);
  return r;
}

inline double adl_envelope(double gamma, double epsilon) {
  const double e2 = epsilon * epsilon;
  return std::max({gamma * e2, gamma, 1.0 / gamma, 1.0 / (gamma * e2)});
}

/// a^2 = (1/beta) min(2d/epsilon^2, K_nu^2/m).
inline double adl_a2(const ModelSpec& m, double k_nu2) {
  return std::min(2.0 * m.d / (m.epsilon * m.epsilon), k_nu2 / m.mass) / m.beta;
}

/// A_{+0}^T A_{+0} assembled by products versus
/// (2d/(beta^2 eps^2)) d_xi^* d_xi + (1/(m beta)) grad_q^* grad_q on H0.
inline double adl_ata_residual(const OperatorBundle& ops, const Decomposition& dec, double tol = 1e-10) {
  if (ops.model.model != Model::adaptive_langevin) fail(ErrorKind::config, "models", "model/basis mismatch: not an AdL bundle");
  const BasisSet& b = *ops.basis;
  const ModelSpec& m = ops.model;
  const Eigen::MatrixXd lap = b.position().laplacian_form();
  const double xi_coeff = 2.0 * m.d / (m.beta * m.beta * m.epsilon * m.epsilon) * m.beta;  // d_xi^* d_xi = beta N_xi
  const double q_coeff = 1.0 / (m.mass * m.beta);
  Eigen::MatrixXd direct(dec.dim0(), dec.dim0());
  for (Eigen::Index r = 0; r < dec.dim0(); ++r) {
    const auto ir = b.index(dec.zero[r]);
    for (Eigen::Index c = 0; c < dec.dim0(); ++c) {
      const auto ic = b.index(dec.zero[c]);
      double v = 0.0;
      if (ir.xi == ic.xi) v += q_coeff * lap(ir.position, ic.position);
      if (r == c) v += xi_coeff * ir.xi;
      direct(r, c) = v;
    }
  }
  const double res = (direct - dec.AtA).cwiseAbs().maxCoeff();
  if (!(res < tol)) fail(ErrorKind::invariant, "models", "NH assembly error: A*A residual " + std::to_string(res));
  return res;
}

struct EnvelopeFit {
  double C_fit = 0.0;
  double min_ratio = 0.0;  // min of exact / (C_fit envelope)
  double max_ratio = 0.0;
};

/// C_fit = geometric mean of exact/envelope over the sample.
inline EnvelopeFit fit_adl_envelope(const std::vector<double>& gammas, const std::vector<double>& epsilons,
                                    const std::vector<double>& exact) {
  if (gammas.size() != exact.size() || epsilons.size() != exact.size() || exact.empty())
    fail(ErrorKind::config, "models", "envelope fit needs matching nonempty samples");
  double acc = 0.0;
  for (std::size_t i = 0; i < exact.size(); ++i) acc += std::log(exact[i] / adl_envelope(gammas[i], epsilons[i]));
  EnvelopeFit f;
  f.C_fit = std::exp(acc / exact.size());
  f.min_ratio = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < exact.size(); ++i) {
    const double r = exact[i] / (f.C_fit * adl_envelope(gammas[i], epsilons[i]));
    f.min_ratio = std::min(f.min_ratio, r);
    f.max_ratio = std::max(f.max_ratio, r);
  }
  return f;
}

struct StaticPoincare {
  double C1 = 0.0;  // 1 + ||Pi+ A^2 Pi0 (A^T A)^{-1}||
  double C2 = 0.0;  // ||(1 - S_{++})^{1/2} A_{+0} (A^T A)^{-1}||
};

namespace detail {

/// (1 - S_{++})^{power} applied to the columns of x; S is diagonal for every
/// assembled model, otherwise a dense eigendecomposition is used.
inline Eigen::MatrixXd one_minus_s_pow(const SparseMatrix& s, const Eigen::MatrixXd& x, double power) {
  bool diagonal = true;
  for (int k = 0; k < s.outerSize() && diagonal; ++k)
    for (SparseMatrix::InnerIterator it(s, k); it; ++it)
      if (it.row() != it.col() && it.value() != 0.0) diagonal = false;
  if (diagonal) {
    const Eigen::VectorXd w = (1.0 - s.diagonal().array()).pow(power).matrix();
    return w.asDiagonal() * x;
  }
  const Eigen::MatrixXd m = Eigen::MatrixXd::Identity(s.rows(), s.cols()) - Eigen::MatrixXd(s);
  return symmetric_function(m, [power](double v) { return std::pow(v, power); }) * x;
}

}  // namespace detail

inline StaticPoincare static_poincare_constants(const Decomposition& dec) {
  StaticPoincare c;
  c.C1 = 1.0 + norm_X(dec);
  const Eigen::MatrixXd ainv = dec.A_p0 * dec.AtA.ldlt().solve(Eigen::MatrixXd::Identity(dec.dim0(), dec.dim0()));
  c.C2 = spectral_norm(detail::one_minus_s_pow(dec.S_pp, ainv, 0.5));
  return c;
}

/// ||f|| / (C1 ||(1 - Pi0) f|| + C2 ||(1 - S)^{-1/2} A f||) for f in H.
inline double static_inequality_ratio(const OperatorBundle& ops, const StaticPoincare& c, const Eigen::VectorXd& f) {
  const SparseMatrix& pi0 = ops.Pi0.matrix;
  const Eigen::VectorXd f_plus = f - pi0 * f;
  const Eigen::VectorXd af = ops.A.matrix * f;
  const Eigen::VectorXd weighted = detail::one_minus_s_pow(ops.S.matrix, af, -0.5);
  const double rhs = c.C1 * f_plus.norm() + c.C2 * weighted.norm();
  const double ratio = f.norm() / rhs;
  if (ratio > 1.0 + 1e-10)
    fail(ErrorKind::invariant, "models", "static Poincare inequality violated: ratio " + std::to_string(ratio));
  return ratio;
}

/// alpha_T = (1 + gamma s T / (gamma^2 s C2^2 + C1^2))^{-1}.
inline double alpha_T(double gamma, double s, double T, double c1, double c2) {
  if (!(gamma > 0.0) || !(s > 0.0) || !(T > 0.0) || !(c1 > 0.0) || !(c2 > 0.0))
    fail(ErrorKind::config, "models", "invalid rate inputs");
  return 1.0 / (1.0 + gamma * s * T / (gamma * gamma * s * c2 * c2 + c1 * c1));
}

/// Least-squares slope of log y against log x.
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) fail(ErrorKind::config, "models", "slope fit needs at least two points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= x.size();
  my /= y.size();
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (std::log(x[i]) - mx) * (std::log(y[i]) - my);
    sxx += (std::log(x[i]) - mx) * (std::log(x[i]) - mx);
  }
  return sxy / sxx;
}

}  // namespace hypoco
