#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "hypoco/error.hpp"
#include "hypoco/linalg.hpp"
#include "hypoco/operators.hpp"

namespace hypoco {

struct DecompositionOptions {
  double rank_tol = 1e-12;
  double tol_identity = 1e-10;
  /// Dense H2 basis and blocks are formed only up to this dimension of H.
  Eigen::Index dense_limit = kDenseLimit;
};

/// H = H0 (+) H1 (+) H2 with H0 = Ran Pi0, H1 = Ran A_{+0}, H2 the rest of
/// H+. Vectors on H+ are expressed in the coordinates `plus`; P1 and P2 are
/// orthonormal columns in those coordinates.
struct Decomposition {
  std::vector<Eigen::Index> zero;  // indices of H0 in H
  std::vector<Eigen::Index> plus;  // indices of H+ in H
  SparseMatrix L_pp, S_pp, R_pp, A_pp;
  Eigen::MatrixXd A_p0;  // A_{+0}: H0 -> H+
  Eigen::MatrixXd AtA;   // A_{+0}^T A_{+0}
  Eigen::MatrixXd P1;
  bool has_blocks = false;
  Eigen::MatrixXd P2;
  Eigen::MatrixXd A10, L11, L12, L21, L22, S11, R22;
  double a = 0.0;             // sigma_min(A_10)
  double sigma_max_A10 = 0.0;
  std::shared_ptr<Eigen::SparseLU<SparseMatrix>> lu_pp;

  Eigen::Index dim0() const { return static_cast<Eigen::Index>(zero.size()); }
  Eigen::Index dim1() const { return P1.cols(); }
  Eigen::Index dim2() const { return static_cast<Eigen::Index>(plus.size()) - P1.cols(); }

  /// (I - P1 P1^T) x on H+.
  Eigen::MatrixXd project_h2(const Eigen::MatrixXd& x) const { return x - P1 * (P1.transpose() * x); }

  Eigen::MatrixXd solve_pp(const Eigen::MatrixXd& rhs) const {
    Eigen::MatrixXd out = lu_pp->solve(rhs);
    if (lu_pp->info() != Eigen::Success) fail(ErrorKind::numerical, "schur", "solve with L_{++} failed");
    return out;
  }
};

namespace detail {

inline SparseMatrix selection(Eigen::Index n, const std::vector<Eigen::Index>& idx) {
  SparseMatrix e(n, static_cast<Eigen::Index>(idx.size()));
  std::vector<Eigen::Triplet<double>> t;
  for (std::size_t j = 0; j < idx.size(); ++j) t.emplace_back(idx[j], static_cast<Eigen::Index>(j), 1.0);
  e.setFromTriplets(t.begin(), t.end());
  return e;
}

}  // namespace detail

inline Decomposition build_decomposition(const OperatorBundle& ops, const DecompositionOptions& opt = {}) {
  const SparseMatrix& pi0 = ops.Pi0.matrix;
  const Eigen::Index n = pi0.rows();
  Decomposition dec;
  for (Eigen::Index i = 0; i < n; ++i) (pi0.coeff(i, i) != 0.0 ? dec.zero : dec.plus).push_back(i);
  if (dec.zero.empty() || dec.plus.empty())
    fail(ErrorKind::config, "schur", "decomposition needs nonempty H0 and H+ (n_q >= 1, n_p >= 1)");
  const SparseMatrix e0 = detail::selection(n, dec.zero);
  const SparseMatrix ep = detail::selection(n, dec.plus);
  const SparseMatrix L = ops.L();
  dec.L_pp = SparseMatrix(ep.transpose() * L * ep);
  dec.S_pp = SparseMatrix(ep.transpose() * ops.S.matrix * ep);
  dec.R_pp = SparseMatrix(ep.transpose() * ops.R.matrix * ep);
  dec.A_pp = SparseMatrix(ep.transpose() * ops.A.matrix * ep);
  dec.A_p0 = Eigen::MatrixXd(SparseMatrix(ep.transpose() * ops.A.matrix * e0));
  dec.AtA = dec.A_p0.transpose() * dec.A_p0;

  const Eigen::VectorXd sv = singular_values(dec.A_p0);
  dec.sigma_max_A10 = sv(0);
  dec.a = sv(sv.size() - 1);
  if (!(dec.a > opt.rank_tol * dec.sigma_max_A10))
    fail(ErrorKind::numerical, "schur", "macroscopic coercivity failure: A_{+0} is not injective");

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(dec.A_p0);
  qr.setThreshold(opt.rank_tol);
  if (qr.rank() != dec.dim0())
    fail(ErrorKind::numerical, "schur", "macroscopic coercivity failure: rank of A_{+0} below dim H0");
  const Eigen::Index np = static_cast<Eigen::Index>(dec.plus.size());
  dec.has_blocks = n <= opt.dense_limit;
  if (dec.has_blocks) {
    const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(np, np);
    dec.P1 = q.leftCols(dec.dim0());
    dec.P2 = q.rightCols(np - dec.dim0());
  } else {
    dec.P1 = qr.householderQ() * Eigen::MatrixXd::Identity(np, dec.dim0());
  }

  dec.lu_pp = std::make_shared<Eigen::SparseLU<SparseMatrix>>();
  dec.lu_pp->compute(dec.L_pp);
  if (dec.lu_pp->info() != Eigen::Success) fail(ErrorKind::numerical, "schur", "L_{++} is singular");

  if (dec.has_blocks) {
    const Eigen::MatrixXd lpp(dec.L_pp), spp(dec.S_pp), rpp(dec.R_pp);
    dec.A10 = dec.P1.transpose() * dec.A_p0;
    dec.L11 = dec.P1.transpose() * lpp * dec.P1;
    dec.L12 = dec.P1.transpose() * lpp * dec.P2;
    dec.L21 = dec.P2.transpose() * lpp * dec.P1;
    dec.L22 = dec.P2.transpose() * lpp * dec.P2;
    dec.S11 = dec.P1.transpose() * spp * dec.P1;
    dec.R22 = dec.P2.transpose() * rpp * dec.P2;
  }
  return dec;
}

struct DecompositionChecks {
  double pi1_idempotent = 0.0;  // |Pi1^2 - Pi1| on H+
  double pi1_symmetric = 0.0;
  double pi1_fixes_A = 0.0;     // |Pi1 A_{+0} - A_{+0}|
  double l11_symmetric = 0.0;   // only meaningful when R reverses A
  double a10_inverse = 0.0;     // |sigma_max(A10^{-1}) sigma_min(A10) - 1|
};

/// Pi1 built from its defining formula A (A^T A)^{-1} A^T, compared with P1.
inline DecompositionChecks check_decomposition(const Decomposition& dec) {
  DecompositionChecks c;
  const Eigen::MatrixXd pi1 = dec.A_p0 * dec.AtA.ldlt().solve(dec.A_p0.transpose());
  c.pi1_idempotent = (pi1 * pi1 - pi1).cwiseAbs().maxCoeff();
  c.pi1_symmetric = (pi1 - pi1.transpose()).cwiseAbs().maxCoeff();
  c.pi1_fixes_A = (pi1 * dec.A_p0 - dec.A_p0).cwiseAbs().maxCoeff();
  c.pi1_idempotent = std::max(c.pi1_idempotent, (pi1 - dec.P1 * dec.P1.transpose()).cwiseAbs().maxCoeff());
  const Eigen::MatrixXd l11 = dec.P1.transpose() * (dec.L_pp * dec.P1);
  c.l11_symmetric = (l11 - l11.transpose()).cwiseAbs().maxCoeff();
  const Eigen::MatrixXd a10 = dec.P1.transpose() * dec.A_p0;
  c.a10_inverse = std::abs(spectral_norm(a10.inverse()) * smallest_singular_value(a10) - 1.0);
  return c;
}

struct CoercivityReport {
  double a = 0.0;
  double a_analytic = 0.0;  // K_nu sqrt(lambda_min(M)/beta), or the adaptive Langevin formula
};

/// Macroscopic coercivity: ||A_{+0} phi|| >= a ||phi||, with a = sigma_min(A_10).
inline CoercivityReport macroscopic_coercivity(const Decomposition& dec, const ModelSpec& model, double k_nu2,
                                               double tol = 1e-10) {
  CoercivityReport r;
  r.a = dec.a;
  const double lambda_min_m = 1.0 / model.mass;
  double a2 = k_nu2 * lambda_min_m / model.beta;
  if (model.model == Model::adaptive_langevin) a2 = std::min(2.0 * model.d / (model.epsilon * model.epsilon), k_nu2 / model.mass) / model.beta;
  r.a_analytic = std::sqrt(a2);
  if (!(r.a >= r.a_analytic - tol * std::max(1.0, r.a_analytic)))
    fail(ErrorKind::invariant, "schur",
         "macroscopic coercivity below analytic bound (" + std::to_string(r.a) + " < " + std::to_string(r.a_analytic) + ")");
  return r;
}

struct SchurResult {
  Eigen::MatrixXd direct;        // A_{+0}^T L_{++}^{-1} A_{+0}
  Eigen::MatrixXd second;        // A_10^T S1^{-1} A_10 (empty without dense blocks)
  double route_discrepancy = 0;  // relative, max-entry
  double symmetry_residual = 0;  // relative, max-entry
  double max_eigenvalue = 0;     // of the symmetric part
};

inline SchurResult schur_complement(const Decomposition& dec) {
  SchurResult r;
  r.direct = dec.A_p0.transpose() * dec.solve_pp(dec.A_p0);
  const double scale = r.direct.cwiseAbs().maxCoeff();
  if (dec.has_blocks && dec.dim2() > 0) {
    Eigen::PartialPivLU<Eigen::MatrixXd> lu22(dec.L22);
    if (!(lu22.rcond() > 1e-14)) fail(ErrorKind::numerical, "schur", "dissipation failure on H2");
    const Eigen::MatrixXd s1 = dec.L11 - dec.L12 * lu22.solve(dec.L21);
    r.second = dec.A10.transpose() * s1.partialPivLu().solve(dec.A10);
  } else if (dec.has_blocks) {
    r.second = dec.A10.transpose() * dec.L11.partialPivLu().solve(dec.A10);
  }
  if (r.second.size()) r.route_discrepancy = (r.direct - r.second).cwiseAbs().maxCoeff() / scale;
  r.symmetry_residual = (r.direct - r.direct.transpose()).cwiseAbs().maxCoeff() / scale;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (r.direct + r.direct.transpose()), Eigen::EigenvaluesOnly);
  r.max_eigenvalue = eig.eigenvalues().maxCoeff();
  return r;
}

/// Solution of L u = phi, phi = (phi0, phi+) in the coordinates of H0 and H+:
///   u0 = S0^{-1} (phi0 + A_{+0}^T L_{++}^{-1} phi+),  u+ = L_{++}^{-1} (phi+ - A_{+0} u0)
/// with S0 = A_{+0}^T L_{++}^{-1} A_{+0} and A_{0+} = -A_{+0}^T.
struct BlockSolution {
  Eigen::VectorXd u0;
  Eigen::VectorXd u_plus;
};

class BlockResolvent {
 public:
  explicit BlockResolvent(const Decomposition& dec) : dec_(dec) {
    const Eigen::MatrixXd s0 = dec.A_p0.transpose() * dec.solve_pp(dec.A_p0);
    lu_s0_ = s0.partialPivLu();
    if (!(lu_s0_.rcond() > 1e-14)) fail(ErrorKind::numerical, "schur", "Schur singular");
  }

  BlockSolution solve(const Eigen::VectorXd& phi0, const Eigen::VectorXd& phi_plus) const {
    if (phi0.size() != dec_.dim0() || phi_plus.size() != static_cast<Eigen::Index>(dec_.plus.size()))
      fail(ErrorKind::config, "schur", "right-hand side has wrong block sizes");
    BlockSolution out;
    const Eigen::VectorXd w = dec_.solve_pp(phi_plus);
    out.u0 = lu_s0_.solve(phi0 + dec_.A_p0.transpose() * w);
    out.u_plus = dec_.solve_pp(phi_plus - dec_.A_p0 * out.u0);
    return out;
  }

  /// Full-space convenience wrapper: scatter/gather through the index lists.
  Eigen::VectorXd solve(const Eigen::VectorXd& phi) const {
    Eigen::VectorXd phi0(dec_.dim0()), phip(static_cast<Eigen::Index>(dec_.plus.size()));
    for (std::size_t i = 0; i < dec_.zero.size(); ++i) phi0(i) = phi(dec_.zero[i]);
    for (std::size_t i = 0; i < dec_.plus.size(); ++i) phip(i) = phi(dec_.plus[i]);
    const BlockSolution s = solve(phi0, phip);
    Eigen::VectorXd u(phi.size());
    for (std::size_t i = 0; i < dec_.zero.size(); ++i) u(dec_.zero[i]) = s.u0(i);
    for (std::size_t i = 0; i < dec_.plus.size(); ++i) u(dec_.plus[i]) = s.u_plus(i);
    return u;
  }

 private:
  const Decomposition& dec_;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_s0_;
};

inline Eigen::VectorXd block_resolvent(const Decomposition& dec, const Eigen::VectorXd& phi) {
  return BlockResolvent(dec).solve(phi);
}

struct ResolventNorm {
  double value = 0.0;  // ||L^{-1}|| = 1 / sigma_min(L)
  std::string method;
};

inline ResolventNorm exact_resolvent_norm(const SparseMatrix& L, Eigen::Index dense_limit = kDenseLimit) {
  const SigmaMin s = smallest_singular_value(L, dense_limit);
  return {1.0 / s.value, s.method};
}

/// ||L^{-1}|| <= 2(||S11||/a^2 + ||R22|| ||L21 A10 (A^T A)^{-1}||^2 / s) + 3/s.
inline double theorem_bound(double s, double a, double norm_s11, double norm_r22, double norm_x21) {
  if (!(s > 0.0) || !(a > 0.0)) fail(ErrorKind::config, "schur", "assumption constants invalid: s and a must be positive");
  if (norm_s11 < 0.0 || norm_r22 < 0.0 || norm_x21 < 0.0)
    fail(ErrorKind::config, "schur", "assumption constants invalid: norms must be nonnegative");
  return 2.0 * (norm_s11 / (a * a) + norm_r22 * norm_x21 * norm_x21 / s) + 3.0 / s;
}

struct IntermediateNorms {
  double norm_S11 = 0.0;
  double norm_S21 = 0.0;
  double norm_R22 = 0.0;
  double norm_L21A10inv = 0.0;
  double norm_Q = -1.0;         // ||[-L_{++}^{-1}]_s^{1/2} A_{+0}||, dense only
  double t3_identity = -1.0;    // relative residual of T3^T T3 = -S_{++}^{-1}, dense only
  double q_factorization = -1.0;  // relative residual of sym(S0) = -Q^T Q, dense only
};

inline IntermediateNorms intermediate_norms(const Decomposition& dec) {
  IntermediateNorms r;
  const Eigen::MatrixXd sp1 = dec.S_pp * dec.P1;
  r.norm_S11 = spectral_norm(dec.P1.transpose() * sp1);
  r.norm_S21 = spectral_norm(dec.project_h2(sp1));
  // L21 A10 (A^T A)^{-1} = P2^T L_{++} A_{+0} (A^T A)^{-1}, since Pi1 A_{+0} = A_{+0}.
  const Eigen::MatrixXd x = dec.L_pp * dec.AtA.ldlt().solve(dec.A_p0.transpose()).transpose();
  r.norm_L21A10inv = spectral_norm(dec.project_h2(x));
  if (dec.dim2() == 0) {
    r.norm_R22 = 0.0;
  } else if (dec.has_blocks) {
    r.norm_R22 = spectral_norm(dec.R22);
  } else {
    auto apply = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
      Eigen::VectorXd w = dec.project_h2(dec.R_pp * dec.project_h2(v));
      return dec.project_h2(dec.R_pp * w);
    };
    r.norm_R22 = std::sqrt(lanczos_largest(apply, static_cast<Eigen::Index>(dec.plus.size()), 1e-12).value);
  }
  if (dec.has_blocks) {
    const Eigen::MatrixXd lpp(dec.L_pp), spp(dec.S_pp);
    const Eigen::MatrixXd linv = lpp.inverse();
    const Eigen::MatrixXd neg_sym = -0.5 * (linv + linv.transpose());
    const Eigen::MatrixXd half = symmetric_function(neg_sym, [](double v) { return std::sqrt(std::max(v, 0.0)); });
    const Eigen::MatrixXd inv_half = symmetric_function(neg_sym, [](double v) { return 1.0 / std::sqrt(v); });
    const Eigen::MatrixXd q = half * dec.A_p0;
    r.norm_Q = spectral_norm(q);
    const Eigen::MatrixXd t3 = inv_half * linv;
    const Eigen::MatrixXd sinv = -spp.inverse();
    r.t3_identity = (t3.transpose() * t3 - sinv).cwiseAbs().maxCoeff() / sinv.cwiseAbs().maxCoeff();
    const Eigen::MatrixXd s0 = dec.A_p0.transpose() * linv * dec.A_p0;
    const Eigen::MatrixXd s0_sym = 0.5 * (s0 + s0.transpose());
    r.q_factorization = (s0_sym + q.transpose() * q).cwiseAbs().maxCoeff() / s0_sym.cwiseAbs().maxCoeff();
  }
  return r;
}

struct BoundReport {
  double s = 0.0;
  double a = 0.0;
  double norm_S11 = 0.0;
  double norm_R22 = 0.0;
  double norm_L21A10inv = 0.0;
  double bound = 0.0;
  double exact = 0.0;
  double margin = 0.0;
  bool converged = false;
};

}  // namespace hypoco
