#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "hypoco/basis.hpp"
#include "hypoco/error.hpp"

namespace hypoco {

using SparseMatrix = Eigen::SparseMatrix<double>;

enum class Symmetry { symmetric, antisymmetric, general };

inline const char* to_string(Symmetry s) {
  switch (s) {
    case Symmetry::symmetric: return "symmetric";
    case Symmetry::antisymmetric: return "antisymmetric";
    default: return "general";
  }
}

/// Max-entry residual of M^T - M (symmetric) or M^T + M (antisymmetric).
inline double symmetry_residual(const SparseMatrix& m, Symmetry tag) {
  if (tag == Symmetry::general) return 0.0;
  const SparseMatrix t = m.transpose();
  const SparseMatrix diff = tag == Symmetry::symmetric ? SparseMatrix(t - m) : SparseMatrix(t + m);
  double r = 0.0;
  for (int k = 0; k < diff.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(diff, k); it; ++it) r = std::max(r, std::abs(it.value()));
  return r;
}

inline double max_abs(const SparseMatrix& m) {
  double r = 0.0;
  for (int k = 0; k < m.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(m, k); it; ++it) r = std::max(r, std::abs(it.value()));
  return r;
}

struct SparseOperator {
  std::string name;
  Symmetry tag = Symmetry::general;
  SparseMatrix matrix;

  Eigen::Index dimension() const { return matrix.rows(); }
  double residual() const { return symmetry_residual(matrix, tag); }
  void check(double tol) const {
    const double r = residual();
    if (!(r < tol))
      fail(ErrorKind::invariant, "operators",
           name + " is not " + to_string(tag) + " (residual " + std::to_string(r) + ")");
  }
};

enum class Model { langevin, boltzmann_rhmc, adaptive_langevin };

inline const char* to_string(Model m) {
  switch (m) {
    case Model::langevin: return "langevin";
    case Model::boltzmann_rhmc: return "boltzmann_rhmc";
    default: return "adaptive_langevin";
  }
}

inline Model parse_model(const std::string& s) {
  if (s == "langevin") return Model::langevin;
  if (s == "boltzmann_rhmc" || s == "rhmc") return Model::boltzmann_rhmc;
  if (s == "adaptive_langevin" || s == "adl") return Model::adaptive_langevin;
  fail(ErrorKind::config, "operators", "unknown model '" + s + "'");
}

struct ModelSpec {
  Model model = Model::langevin;
  double gamma = 1.0;
  double epsilon = 1.0;
  double beta = 1.0;
  double mass = 1.0;
  int d = 1;
  Potential potential{1};

  void validate() const {
    if (!(gamma > 0.0)) fail(ErrorKind::config, "operators", "gamma must be positive");
    if (model == Model::adaptive_langevin && !(epsilon > 0.0))
      fail(ErrorKind::config, "operators", "epsilon must be positive");
    if (!(beta > 0.0) || !(mass > 0.0)) fail(ErrorKind::config, "operators", "beta and mass must be positive");
  }

  /// The microscopic coercivity constant s predicted analytically: gamma K_kappa^2 / beta
  /// with K_kappa^2 = beta/m for the Gaussian momenta, or gamma for RHMC.
  double analytic_s() const { return model == Model::boltzmann_rhmc ? gamma : gamma / mass; }
};

namespace detail {

inline Eigen::Index extended(const BasisSet& b, int a, int m, int l) {
  return (static_cast<Eigen::Index>(a) * b.momentum_count() + m) * b.xi_count() + l;
}

/// Collects entries in extended indices and drops the excluded constant.
class TripletSink {
 public:
  explicit TripletSink(const BasisSet& b) : basis_(b) {}
  void add(Eigen::Index row_ext, Eigen::Index col_ext, double v) {
    if (row_ext == 0 || col_ext == 0 || v == 0.0) return;
    triplets_.emplace_back(row_ext - 1, col_ext - 1, v);
  }
  SparseMatrix finish() {
    SparseMatrix m(basis_.dimension(), basis_.dimension());
    m.setFromTriplets(triplets_.begin(), triplets_.end());
    m.makeCompressed();
    return m;
  }

 private:
  const BasisSet& basis_;
  std::vector<Eigen::Triplet<double>> triplets_;
};

inline SparseMatrix diagonal(const BasisSet& b, const std::function<double(Eigen::Index)>& entry) {
  std::vector<Eigen::Triplet<double>> t;
  for (Eigen::Index i = 0; i < b.dimension(); ++i) {
    const double v = entry(i);
    if (v != 0.0) t.emplace_back(i, i, v);
  }
  SparseMatrix m(b.dimension(), b.dimension());
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

}  // namespace detail

/// L_ham = (1/beta)(d_p^* d_q - d_q^* d_p) = sum_i K_i - K_i^T with
/// K_i = (mbeta)^{-1/2} D_i (x) a_i^dagger; D_i is exact on the position span.
inline SparseOperator assemble_hamiltonian(const BasisSet& b) {
  if (b.potential().bandwidth() > 64) fail(ErrorKind::config, "operators", "potential not truncated");
  const auto& spec = b.spec();
  const double c = 1.0 / std::sqrt(spec.mass * spec.beta);
  detail::TripletSink sink(b);
  const int pq = b.position_count();
  for (int i = 0; i < spec.d; ++i) {
    const Eigen::MatrixXd& dq = b.position().derivative(i);
    for (int m = 0; m < b.momentum_count(); ++m) {
      auto n = b.momentum_multi(m);
      if (n[i] == spec.n_p) continue;
      const double ladder = c * std::sqrt(n[i] + 1.0);
      n[i] += 1;
      const int up = b.momentum_flat(n);
      for (int l = 0; l < b.xi_count(); ++l)
        for (int col = 0; col < pq; ++col)
          for (int row = 0; row < pq; ++row) {
            const double v = dq(row, col) * ladder;
            if (v == 0.0) continue;
            sink.add(detail::extended(b, row, up, l), detail::extended(b, col, m, l), v);
            sink.add(detail::extended(b, col, m, l), detail::extended(b, row, up, l), -v);
          }
    }
  }
  return {"L_ham", Symmetry::antisymmetric, sink.finish()};
}

/// L_FD = -(1/beta) grad_p^* grad_p: number operator, eigenvalue -|n|/m.
inline SparseOperator assemble_fd(const BasisSet& b) {
  const double inv_m = 1.0 / b.spec().mass;
  return {"L_FD", Symmetry::symmetric,
          detail::diagonal(b, [&](Eigen::Index i) { return -inv_m * b.momentum_degree(i); })};
}

/// S = gamma (Pi0 - 1) of the linear Boltzmann / randomized HMC dynamics.
inline SparseOperator assemble_boltzmann_collision(const BasisSet& b, double gamma) {
  if (!(gamma > 0.0)) fail(ErrorKind::config, "operators", "gamma must be positive");
  return {"S_collision", Symmetry::symmetric,
          detail::diagonal(b, [&](Eigen::Index i) { return b.momentum_degree(i) > 0 ? -gamma : 0.0; })};
}

/// epsilon^{-1} L_NH with L_NH = (|p|^2/m - d/beta) d_xi - xi p.grad_p.
/// In ladder form L_NH = J - J^T, J = beta^{-1/2} sum_i (a_i^dagger^2 + N_i) (x) b.
inline SparseOperator assemble_nosehoover(const BasisSet& b, double epsilon) {
  const auto& spec = b.spec();
  if (!spec.has_xi) fail(ErrorKind::config, "operators", "model/basis mismatch: basis has no xi variable");
  if (!(epsilon > 0.0)) fail(ErrorKind::config, "operators", "epsilon must be positive");
  const double c = 1.0 / (std::sqrt(spec.beta) * epsilon);
  detail::TripletSink sink(b);
  for (int a = 0; a < b.position_count(); ++a)
    for (int m = 0; m < b.momentum_count(); ++m) {
      const auto n = b.momentum_multi(m);
      for (int l = 1; l < b.xi_count(); ++l) {
        const double lower = c * std::sqrt(static_cast<double>(l));
        auto emit = [&](int row_m, double v) {
          sink.add(detail::extended(b, a, row_m, l - 1), detail::extended(b, a, m, l), v);
          sink.add(detail::extended(b, a, m, l), detail::extended(b, a, row_m, l - 1), -v);
        };
        double number = 0.0;
        for (int i = 0; i < spec.d; ++i) {
          number += n[i];
          if (n[i] + 2 <= spec.n_p) {
            auto up = n;
            up[i] += 2;
            emit(b.momentum_flat(up), lower * std::sqrt((n[i] + 1.0) * (n[i] + 2.0)));
          }
        }
        if (number > 0.0) emit(m, lower * number);
      }
    }
  return {"L_NH", Symmetry::antisymmetric, sink.finish()};
}

/// Pi0: average over momenta (xi is kept), i.e. selects Hermite degree 0 in p.
inline SparseOperator assemble_pi0(const BasisSet& b) {
  return {"Pi0", Symmetry::symmetric,
          detail::diagonal(b, [&](Eigen::Index i) { return b.momentum_degree(i) == 0 ? 1.0 : 0.0; })};
}

/// R f(q,p,xi) = f(q,-p,-xi): Hermite parity (-1)^{|n| + n_xi}.
inline SparseOperator assemble_reversal(const BasisSet& b) {
  return {"R", Symmetry::symmetric, detail::diagonal(b, [&](Eigen::Index i) {
            const int parity = b.momentum_degree(i) + b.index(i).xi;
            return parity % 2 == 0 ? 1.0 : -1.0;
          })};
}

struct OperatorBundle {
  ModelSpec model;
  std::shared_ptr<const BasisSet> basis;
  SparseOperator A;
  SparseOperator S;
  SparseOperator Pi0;
  SparseOperator R;
  SparseOperator L_ham;
  SparseOperator L_FD;  // empty for RHMC

  SparseMatrix L() const { return A.matrix + S.matrix; }
};

inline void check_model_basis(const ModelSpec& model, const BasisSet& b) {
  const auto& spec = b.spec();
  const bool want_xi = model.model == Model::adaptive_langevin;
  if (want_xi != spec.has_xi)
    fail(ErrorKind::config, "operators",
         want_xi ? "model/basis mismatch: adaptive Langevin needs a xi basis"
                 : "model/basis mismatch: basis has a xi variable the model does not use");
  if (model.d != spec.d || model.beta != spec.beta || model.mass != spec.mass ||
      model.potential.to_string() != b.potential().to_string())
    fail(ErrorKind::config, "operators", "model/basis mismatch: d, beta, mass or potential differ");
}

inline OperatorBundle assemble_model(const ModelSpec& model, std::shared_ptr<const BasisSet> basis) {
  model.validate();
  check_model_basis(model, *basis);
  const BasisSet& b = *basis;
  OperatorBundle out;
  out.model = model;
  out.basis = basis;
  out.L_ham = assemble_hamiltonian(b);
  out.Pi0 = assemble_pi0(b);
  out.R = assemble_reversal(b);
  switch (model.model) {
    case Model::langevin:
      out.L_FD = assemble_fd(b);
      out.A = {"A", Symmetry::antisymmetric, out.L_ham.matrix};
      out.S = {"S", Symmetry::symmetric, model.gamma * out.L_FD.matrix};
      break;
    case Model::boltzmann_rhmc:
      out.A = {"A", Symmetry::antisymmetric, -out.L_ham.matrix};
      out.S = {"S", Symmetry::symmetric, assemble_boltzmann_collision(b, model.gamma).matrix};
      break;
    case Model::adaptive_langevin:
      out.L_FD = assemble_fd(b);
      out.A = {"A", Symmetry::antisymmetric, out.L_ham.matrix + assemble_nosehoover(b, model.epsilon).matrix};
      out.S = {"S", Symmetry::symmetric, model.gamma * out.L_FD.matrix};
      break;
  }
  return out;
}

struct ResidualEntry {
  std::string identity;
  double value = 0.0;
  bool enforced = true;
};

struct StructuralReport {
  std::vector<ResidualEntry> residuals;
  double s_numeric = 0.0;
  double s_analytic = 0.0;

  double max_enforced() const {
    double r = 0.0;
    for (const auto& e : residuals)
      if (e.enforced) r = std::max(r, e.value);
    return r;
  }
};

/// Smallest eigenvalue of -S on H+ (S is diagonal for all supported models;
/// a dense symmetric eigensolve covers the general case).
inline double dissipation_gap(const SparseMatrix& S, const SparseMatrix& pi0) {
  std::vector<Eigen::Index> plus;
  for (Eigen::Index i = 0; i < pi0.rows(); ++i)
    if (pi0.coeff(i, i) == 0.0) plus.push_back(i);
  if (plus.empty()) return std::numeric_limits<double>::infinity();
  bool diagonal = true;
  for (int k = 0; k < S.outerSize() && diagonal; ++k)
    for (SparseMatrix::InnerIterator it(S, k); it; ++it)
      if (it.row() != it.col() && it.value() != 0.0) diagonal = false;
  if (diagonal) {
    double s = std::numeric_limits<double>::infinity();
    for (auto i : plus) s = std::min(s, -S.coeff(i, i));
    return s;
  }
  Eigen::MatrixXd block(plus.size(), plus.size());
  for (std::size_t r = 0; r < plus.size(); ++r)
    for (std::size_t c = 0; c < plus.size(); ++c) block(r, c) = -S.coeff(plus[r], plus[c]);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(block, Eigen::EigenvaluesOnly);
  return eig.eigenvalues()(0);
}

/// Projector, dissipation and reversal identities at the matrix level. R Pi0 = Pi0 is not required
/// of the adaptive Langevin reversal (xi-odd functions live in H0) and is
/// reported without being enforced there.
inline StructuralReport verify_structural_assumptions(const OperatorBundle& ops, double tol = 1e-10) {
  const SparseMatrix& A = ops.A.matrix;
  const SparseMatrix& S = ops.S.matrix;
  const SparseMatrix& P = ops.Pi0.matrix;
  const SparseMatrix& R = ops.R.matrix;
  const Eigen::Index n = A.rows();
  SparseMatrix id(n, n);
  id.setIdentity();
  StructuralReport rep;
  auto add = [&](const std::string& name, const SparseMatrix& m, bool enforced = true) {
    rep.residuals.push_back({name, max_abs(m), enforced});
  };
  add("A antisymmetric", SparseMatrix(SparseMatrix(A.transpose()) + A));
  add("S symmetric", SparseMatrix(SparseMatrix(S.transpose()) - S));
  add("Pi0^2 = Pi0", SparseMatrix(P * P - P));
  add("Pi0 A Pi0 = 0", SparseMatrix(P * A * P));
  add("S Pi0 = 0", SparseMatrix(S * P));
  add("Pi0 S = 0", SparseMatrix(P * S));
  add("R^2 = I", SparseMatrix(R * R - id));
  add("R S R = S", SparseMatrix(R * S * R - S));
  add("R A R = -A", SparseMatrix(R * A * R + A));
  add("R Pi0 = Pi0", SparseMatrix(R * P - P), ops.model.model != Model::adaptive_langevin);
  rep.s_numeric = dissipation_gap(S, P);
  rep.s_analytic = ops.model.analytic_s();
  rep.residuals.push_back({"s numeric - analytic", std::abs(rep.s_numeric - rep.s_analytic), true});
  for (const auto& e : rep.residuals)
    if (e.enforced && !(e.value < tol))
      fail(ErrorKind::invariant, "operators",
           "assumption violated: " + e.identity + " (residual " + std::to_string(e.value) + ")");
  if (!(rep.s_numeric > 0.0)) fail(ErrorKind::invariant, "operators", "assumption violated: S not coercive on H+");
  return rep;
}

}  // namespace hypoco
