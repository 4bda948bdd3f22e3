#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <numbers>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hypoco/error.hpp"
#include "hypoco/potential.hpp"
#include "hypoco/quadrature.hpp"

namespace hypoco {

struct BasisSpec {
  int d = 1;
  int n_q = 1;
  int n_p = 0;
  double beta = 1.0;
  double mass = 1.0;
  double torus_length = 2.0 * std::numbers::pi;
  bool has_xi = false;
  int n_xi = 0;

  long long expected_dimension() const {
    long long pos = 1, mom = 1;
    for (int i = 0; i < d; ++i) {
      pos *= 2LL * n_q + 1;
      mom *= n_p + 1LL;
    }
    return pos * mom * (has_xi ? n_xi + 1LL : 1LL) - 1;
  }

  void validate() const {
    if (d < 1) fail(ErrorKind::config, "basis", "dimension d must be positive");
    if (n_q < 0 || n_p < 0 || n_xi < 0) fail(ErrorKind::config, "basis", "cutoffs must be nonnegative");
    if (!(beta > 0.0)) fail(ErrorKind::config, "basis", "beta must be positive");
    if (!(mass > 0.0)) fail(ErrorKind::config, "basis", "mass must be positive");
    if (!(torus_length > 0.0)) fail(ErrorKind::config, "basis", "torus_length must be positive");
  }

  std::string canonical() const {
    std::ostringstream os;
    os.precision(17);
    os << "d=" << d << ";n_q=" << n_q << ";n_p=" << n_p << ";beta=" << beta << ";mass=" << mass
       << ";L=" << torus_length << ";xi=" << has_xi << ";n_xi=" << n_xi;
    return os.str();
  }
};

struct BuildOptions {
  long long max_dim = 20000;
  double tol_identity = 1e-10;

  /// HYPOCO_MAX_DIM in the environment overrides the dimension guard.
  static BuildOptions from_environment() {
    BuildOptions o;
    if (const char* env = std::getenv("HYPOCO_MAX_DIM")) {
      try {
        o.max_dim = std::stoll(env);
      } catch (const std::exception&) {
        fail(ErrorKind::config, "basis", "HYPOCO_MAX_DIM is not an integer");
      }
    }
    return o;
  }
};

struct CoefficientVector {
  std::uint64_t basis_id = 0;
  Eigen::VectorXd values;
};

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

/// Trigonometric polynomials of degree <= n_q per coordinate, orthonormalized
/// in L^2(nu), nu ~ exp(-beta V). Raw functions are ordered by shell max|k|
/// so the Cholesky (Gram-Schmidt) orthonormalization is nested in n_q; the
/// first function is the constant.
class PositionBasis {
 public:
  PositionBasis() = default;

  PositionBasis(const BasisSpec& spec, const Potential& potential) : d_(spec.d), n_q_(spec.n_q) {
    scale_ = 2.0 * std::numbers::pi / spec.torus_length;
    length_ = spec.torus_length;
    enumerate_codes();
    const int count = size();

    // Grid large enough for the Gram integrands; doubled until the raw Gram
    // matrix is stable, since exp(-beta V) is not band-limited.
    int points = std::max(4 * n_q_ + 4, 4 * n_q_ + 4 * potential.bandwidth() + 16);
    Eigen::MatrixXd gram = raw_gram(points, spec.beta, potential);
    bool settled = false;
    for (int attempt = 0; attempt < 5 && !settled; ++attempt) {
      Eigen::MatrixXd finer = raw_gram(2 * points, spec.beta, potential);
      settled = (finer - gram).cwiseAbs().maxCoeff() < 1e-14;
      points *= 2;
      gram = std::move(finer);
    }
    if (!settled) fail(ErrorKind::numerical, "basis", "quadrature failure: position Gram matrix not resolved");
    points_ = points;
    build_grid(points_, spec.beta, potential, nodes_, weights_);

    Eigen::LLT<Eigen::MatrixXd> llt(gram);
    if (llt.info() != Eigen::Success)
      fail(ErrorKind::numerical, "basis", "quadrature failure: position Gram matrix not positive definite");
    lower_ = llt.matrixL();
    transform_ = lower_.transpose().triangularView<Eigen::Upper>().solve(
        Eigen::MatrixXd::Identity(count, count));  // L^{-T}

    values_ = raw_values(nodes_) * transform_;
    for (int i = 0; i < d_; ++i) {
      Eigen::MatrixXd raw_d = raw_derivative(i);
      derivatives_.push_back(lower_.transpose() * raw_d * transform_);
    }
  }

  int dim() const noexcept { return d_; }
  int size() const noexcept { return static_cast<int>(codes_.size()); }
  int grid_points_per_axis() const noexcept { return points_; }
  /// Grid nodes, one row per point.
  const Eigen::MatrixXd& nodes() const noexcept { return nodes_; }
  /// nu-weights of the grid (sum to 1).
  const Eigen::VectorXd& weights() const noexcept { return weights_; }
  /// Orthonormal functions on the grid, one column per function.
  const Eigen::MatrixXd& values() const noexcept { return values_; }
  /// Columns: raw coefficients of each orthonormal function (L^{-T}).
  const Eigen::MatrixXd& transform() const noexcept { return transform_; }
  /// Galerkin matrix of d/dq_i on the span; exact since d/dq_i preserves it.
  const Eigen::MatrixXd& derivative(int i) const { return derivatives_.at(i); }
  /// Per-coordinate codes: 0 constant, 2k-1 cos(k q), 2k sin(k q).
  const std::vector<int>& code(int a) const { return codes_.at(a); }

  /// Galerkin matrix of grad^* grad = sum_i D_i^T D_i on the whole span.
  Eigen::MatrixXd laplacian_form() const {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(size(), size());
    for (const auto& dmat : derivatives_) m += dmat.transpose() * dmat;
    return m;
  }

  /// Value, gradient and Hessian at q of the function with orthonormal
  /// coefficients `c` (size() entries, constant included).
  struct Jet {
    double value = 0.0;
    Eigen::VectorXd gradient;
    Eigen::MatrixXd hessian;
  };

  Jet jet(const Eigen::VectorXd& c, const double* q) const {
    const Eigen::VectorXd raw = transform_ * c;
    Jet out;
    out.gradient = Eigen::VectorXd::Zero(d_);
    out.hessian = Eigen::MatrixXd::Zero(d_, d_);
    std::vector<std::array<double, 3>> f(d_);
    for (int a = 0; a < size(); ++a) {
      if (raw(a) == 0.0) continue;
      for (int i = 0; i < d_; ++i) f[i] = factor_jet(codes_[a][i], q[i]);
      double prod = 1.0;
      for (int i = 0; i < d_; ++i) prod *= f[i][0];
      out.value += raw(a) * prod;
      for (int i = 0; i < d_; ++i) {
        double gi = f[i][1];
        for (int j = 0; j < d_; ++j)
          if (j != i) gi *= f[j][0];
        out.gradient(i) += raw(a) * gi;
        for (int k = 0; k < d_; ++k) {
          double hik = 1.0;
          for (int j = 0; j < d_; ++j) {
            int order = (j == i) + (j == k);
            hik *= f[j][order];
          }
          out.hessian(i, k) += raw(a) * hik;
        }
      }
    }
    return out;
  }

  /// Raw (unnormalized) trigonometric functions at the given points.
  Eigen::MatrixXd raw_values(const Eigen::MatrixXd& points) const {
    Eigen::MatrixXd r(points.rows(), size());
    for (Eigen::Index j = 0; j < points.rows(); ++j)
      for (int a = 0; a < size(); ++a) {
        double prod = 1.0;
        for (int i = 0; i < d_; ++i) prod *= factor_jet(codes_[a][i], points(j, i))[0];
        r(j, a) = prod;
      }
    return r;
  }

  /// Tensor grid with `points` per axis and nu-weights.
  void build_grid(int points, double beta, const Potential& potential, Eigen::MatrixXd& nodes,
                  Eigen::VectorXd& weights) const {
    const Rule1D axis = trapezoid(points, length_);
    long long total = 1;
    for (int i = 0; i < d_; ++i) total *= points;
    nodes.resize(total, d_);
    weights.resize(total);
    std::vector<double> energy(total);
    double vmin = std::numeric_limits<double>::infinity();
    for (long long j = 0; j < total; ++j) {
      long long rest = j;
      for (int i = d_ - 1; i >= 0; --i) {
        nodes(j, i) = axis.nodes[rest % points];
        rest /= points;
      }
      std::vector<double> q(d_);
      for (int i = 0; i < d_; ++i) q[i] = nodes(j, i);
      energy[j] = potential.value(q.data());
      vmin = std::min(vmin, energy[j]);
    }
    for (long long j = 0; j < total; ++j) weights(j) = std::exp(-beta * (energy[j] - vmin));
    weights /= weights.sum();
  }

 private:
  static int wavenumber(int code) { return (code + 1) / 2; }

  std::array<double, 3> factor_jet(int code, double x) const {
    if (code == 0) return {1.0, 0.0, 0.0};
    const double w = scale_ * wavenumber(code);
    const double c = std::cos(w * x), s = std::sin(w * x);
    if (code % 2 == 1) return {c, -w * s, -w * w * c};
    return {s, w * c, -w * w * s};
  }

  void enumerate_codes() {
    const int per_axis = 2 * n_q_ + 1;
    long long total = 1;
    for (int i = 0; i < d_; ++i) total *= per_axis;
    for (long long j = 0; j < total; ++j) {
      std::vector<int> c(d_);
      long long rest = j;
      for (int i = d_ - 1; i >= 0; --i) {
        c[i] = static_cast<int>(rest % per_axis);
        rest /= per_axis;
      }
      codes_.push_back(c);
    }
    auto shell = [](const std::vector<int>& c) {
      int s = 0;
      for (int x : c) s = std::max(s, wavenumber(x));
      return s;
    };
    std::stable_sort(codes_.begin(), codes_.end(), [&](const auto& a, const auto& b) {
      const int sa = shell(a), sb = shell(b);
      if (sa != sb) return sa < sb;
      return a < b;
    });
  }

  Eigen::MatrixXd raw_gram(int points, double beta, const Potential& potential) const {
    Eigen::MatrixXd nodes;
    Eigen::VectorXd weights;
    build_grid(points, beta, potential, nodes, weights);
    const Eigen::MatrixXd r = raw_values(nodes);
    return r.transpose() * weights.asDiagonal() * r;
  }

  Eigen::MatrixXd raw_derivative(int axis) const {
    const int count = size();
    Eigen::MatrixXd dm = Eigen::MatrixXd::Zero(count, count);
    for (int b = 0; b < count; ++b) {
      const int code = codes_[b][axis];
      if (code == 0) continue;
      const double w = scale_ * wavenumber(code);
      std::vector<int> target = codes_[b];
      target[axis] = (code % 2 == 1) ? code + 1 : code - 1;  // cos <-> sin
      const double coeff = (code % 2 == 1) ? -w : w;
      const auto it = std::find(codes_.begin(), codes_.end(), target);
      dm(static_cast<int>(it - codes_.begin()), b) = coeff;
    }
    return dm;
  }

  int d_ = 1;
  int n_q_ = 0;
  double scale_ = 1.0;
  double length_ = 2.0 * std::numbers::pi;
  int points_ = 0;
  std::vector<std::vector<int>> codes_;
  Eigen::MatrixXd nodes_;
  Eigen::VectorXd weights_;
  Eigen::MatrixXd lower_;
  Eigen::MatrixXd transform_;
  Eigen::MatrixXd values_;
  std::vector<Eigen::MatrixXd> derivatives_;
};

/// Tensor basis of L^2(mu) restricted to mean-zero functions:
///   phi_a(q) h_{n_1}(p_1)...h_{n_d}(p_d) g_l(xi)
/// with the constant (a = 0, n = 0, l = 0) removed. Flat layout is
/// ((a * n_momentum + n) * n_xi_functions + l) - 1.
class BasisSet {
 public:
  struct Index {
    int position = 0;
    std::vector<int> momentum;
    int xi = 0;
  };

  BasisSet() = default;

  const BasisSpec& spec() const noexcept { return spec_; }
  const Potential& potential() const noexcept { return potential_; }
  const PositionBasis& position() const noexcept { return position_; }
  Eigen::Index dimension() const noexcept { return dimension_; }
  std::uint64_t fingerprint() const noexcept { return fingerprint_; }
  double momentum_scale() const noexcept { return std::sqrt(spec_.mass / spec_.beta); }
  double xi_scale() const noexcept { return std::sqrt(1.0 / spec_.beta); }

  int position_count() const noexcept { return position_.size(); }
  int momentum_count() const noexcept { return momentum_count_; }
  int xi_count() const noexcept { return xi_count_; }
  const Rule1D& momentum_rule() const noexcept { return momentum_rule_; }
  const Rule1D& xi_rule() const noexcept { return xi_rule_; }
  double gram_residual() const noexcept { return gram_residual_; }

  Eigen::Index index_of(int position, const std::vector<int>& momentum, int xi) const {
    Eigen::Index flat = position;
    flat = flat * momentum_count_ + momentum_flat(momentum);
    flat = flat * xi_count_ + xi;
    if (flat == 0) fail(ErrorKind::config, "basis", "the constant function is not in the mean-zero space");
    return flat - 1;
  }

  Index index(Eigen::Index i) const {
    Eigen::Index flat = i + 1;
    Index out;
    out.xi = static_cast<int>(flat % xi_count_);
    flat /= xi_count_;
    out.momentum = momentum_multi(static_cast<int>(flat % momentum_count_));
    out.position = static_cast<int>(flat / momentum_count_);
    return out;
  }

  int momentum_degree(Eigen::Index i) const {
    const auto idx = index(i);
    int s = 0;
    for (int n : idx.momentum) s += n;
    return s;
  }

  std::vector<int> momentum_multi(int flat) const {
    std::vector<int> n(spec_.d);
    for (int i = spec_.d - 1; i >= 0; --i) {
      n[i] = flat % (spec_.n_p + 1);
      flat /= spec_.n_p + 1;
    }
    return n;
  }

  int momentum_flat(const std::vector<int>& n) const {
    if (static_cast<int>(n.size()) != spec_.d) fail(ErrorKind::config, "basis", "momentum multi-index size");
    int flat = 0;
    for (int x : n) {
      if (x < 0 || x > spec_.n_p) fail(ErrorKind::config, "basis", "momentum degree out of range");
      flat = flat * (spec_.n_p + 1) + x;
    }
    return flat;
  }

  CoefficientVector make_vector(Eigen::VectorXd values) const {
    if (values.size() != dimension_) fail(ErrorKind::config, "basis", "coefficient vector has wrong size");
    return {fingerprint_, std::move(values)};
  }

  CoefficientVector zero_vector() const { return {fingerprint_, Eigen::VectorXd::Zero(dimension_)}; }

  /// <f, g>_{L^2(mu)}; the basis is orthonormal so this is the Euclidean product.
  double inner_product(const CoefficientVector& f, const CoefficientVector& g) const {
    if (f.basis_id != fingerprint_ || g.basis_id != fingerprint_ || f.values.size() != dimension_ ||
        g.values.size() != dimension_)
      fail(ErrorKind::config, "basis", "basis mismatch");
    return f.values.dot(g.values);
  }

  /// Point evaluation of a coefficient vector (mean-zero function).
  double evaluate(const CoefficientVector& f, std::span<const double> q, std::span<const double> p,
                  double xi = 0.0) const {
    if (f.basis_id != fingerprint_) fail(ErrorKind::config, "basis", "basis mismatch");
    const Eigen::MatrixXd qrow = Eigen::Map<const Eigen::RowVectorXd>(q.data(), spec_.d);
    const Eigen::RowVectorXd pos = position_.raw_values(qrow) * position_.transform();
    std::vector<std::vector<double>> h(spec_.d, std::vector<double>(spec_.n_p + 1));
    for (int i = 0; i < spec_.d; ++i) hermite_values(p[i], momentum_scale(), spec_.n_p, h[i].data());
    std::vector<double> g(xi_count_);
    hermite_values(xi, xi_scale(), xi_count_ - 1, g.data());
    double acc = 0.0;
    for (Eigen::Index i = 0; i < dimension_; ++i) {
      const Index idx = index(i);
      double v = pos(idx.position) * g[idx.xi];
      for (int k = 0; k < spec_.d; ++k) v *= h[k][idx.momentum[k]];
      acc += f.values(i) * v;
    }
    return acc;
  }

  using Function = std::function<double(std::span<const double> q, std::span<const double> p, double xi)>;

  struct Expansion {
    CoefficientVector coefficients;
    double mean = 0.0;      // projection on the excluded constant
    double residual = 0.0;  // || f - mean - P f ||_{L^2(mu)} by quadrature
  };

  /// Quadrature projection of f onto the basis.
  Expansion expand_function(const Function& f) const {
    const Eigen::MatrixXd samples = sample(f);
    const Eigen::MatrixXd weighted_mom = momentum_xi_values().array().colwise() * momentum_xi_weights().array();
    const Eigen::MatrixXd full =
        position_.values().transpose() * position_.weights().asDiagonal() * samples * weighted_mom;
    Expansion out;
    out.mean = full(0, 0);
    Eigen::VectorXd c(dimension_);
    for (int a = 0; a < position_count(); ++a)
      for (int m = 0; m < momentum_count_ * xi_count_; ++m) {
        const Eigen::Index flat = static_cast<Eigen::Index>(a) * momentum_count_ * xi_count_ + m;
        if (flat > 0) c(flat - 1) = full(a, m);
      }
    const double norm2 = (position_.weights().asDiagonal() * samples.cwiseAbs2() * momentum_xi_weights()).sum();
    out.residual = std::sqrt(std::max(0.0, norm2 - out.mean * out.mean - c.squaredNorm()));
    out.coefficients = make_vector(std::move(c));
    return out;
  }

  /// mu-expectation of f by tensor quadrature.
  double integrate(const Function& f) const {
    const Eigen::MatrixXd samples = sample(f);
    return position_.weights().dot(samples * momentum_xi_weights());
  }

  friend BasisSet build_basis(const BasisSpec& spec, const Potential& potential, const BuildOptions& options);

 private:
  // Rows: tensor grid in (p, xi) with xi fastest; columns: (n, l) functions.
  Eigen::MatrixXd momentum_xi_values() const {
    const int np = static_cast<int>(momentum_rule_.nodes.size());
    const int nx = static_cast<int>(xi_rule_.nodes.size());
    long long rows = nx;
    for (int i = 0; i < spec_.d; ++i) rows *= np;
    Eigen::MatrixXd out(rows, momentum_count_ * xi_count_);
    std::vector<double> h(spec_.n_p + 1), g(xi_count_);
    for (long long r = 0; r < rows; ++r) {
      const int xi_node = static_cast<int>(r % nx);
      long long rest = r / nx;
      std::vector<int> p_node(spec_.d);
      for (int i = spec_.d - 1; i >= 0; --i) {
        p_node[i] = static_cast<int>(rest % np);
        rest /= np;
      }
      hermite_values(xi_rule_.nodes[xi_node], xi_scale(), xi_count_ - 1, g.data());
      std::vector<std::vector<double>> hv(spec_.d, std::vector<double>(spec_.n_p + 1));
      for (int i = 0; i < spec_.d; ++i)
        hermite_values(momentum_rule_.nodes[p_node[i]], momentum_scale(), spec_.n_p, hv[i].data());
      for (int m = 0; m < momentum_count_; ++m) {
        const auto n = momentum_multi(m);
        double v = 1.0;
        for (int i = 0; i < spec_.d; ++i) v *= hv[i][n[i]];
        for (int l = 0; l < xi_count_; ++l) out(r, m * xi_count_ + l) = v * g[l];
      }
    }
    return out;
  }

  Eigen::VectorXd momentum_xi_weights() const {
    const int np = static_cast<int>(momentum_rule_.nodes.size());
    const int nx = static_cast<int>(xi_rule_.nodes.size());
    long long rows = nx;
    for (int i = 0; i < spec_.d; ++i) rows *= np;
    Eigen::VectorXd w(rows);
    for (long long r = 0; r < rows; ++r) {
      double v = xi_rule_.weights[r % nx];
      long long rest = r / nx;
      for (int i = 0; i < spec_.d; ++i) {
        v *= momentum_rule_.weights[rest % np];
        rest /= np;
      }
      w(r) = v;
    }
    return w;
  }

  Eigen::MatrixXd sample(const Function& f) const {
    const int np = static_cast<int>(momentum_rule_.nodes.size());
    const int nx = static_cast<int>(xi_rule_.nodes.size());
    long long cols = nx;
    for (int i = 0; i < spec_.d; ++i) cols *= np;
    const Eigen::MatrixXd& qn = position_.nodes();
    Eigen::MatrixXd out(qn.rows(), cols);
    std::vector<double> q(spec_.d), p(spec_.d);
    for (Eigen::Index j = 0; j < qn.rows(); ++j) {
      for (int i = 0; i < spec_.d; ++i) q[i] = qn(j, i);
      for (long long c = 0; c < cols; ++c) {
        const double xi = xi_rule_.nodes[c % nx];
        long long rest = c / nx;
        for (int i = spec_.d - 1; i >= 0; --i) {
          p[i] = momentum_rule_.nodes[rest % np];
          rest /= np;
        }
        out(j, c) = f(q, p, xi);
      }
    }
    return out;
  }

  BasisSpec spec_;
  Potential potential_;
  PositionBasis position_;
  Rule1D momentum_rule_;
  Rule1D xi_rule_;
  int momentum_count_ = 1;
  int xi_count_ = 1;
  Eigen::Index dimension_ = 0;
  std::uint64_t fingerprint_ = 0;
  double gram_residual_ = 0.0;
};

inline BasisSet build_basis(const BasisSpec& spec, const Potential& potential,
                            const BuildOptions& options = BuildOptions::from_environment()) {
  spec.validate();
  if (potential.dim() != spec.d) fail(ErrorKind::config, "basis", "potential dimension does not match d");
  if (std::abs(potential.torus_length() - spec.torus_length) > 1e-12 * spec.torus_length)
    fail(ErrorKind::config, "basis", "potential torus length does not match the basis");
  for (const auto& [k, v] : potential.coefficients())
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
      fail(ErrorKind::config, "basis", "potential coefficients must be finite");
  if (spec.expected_dimension() > options.max_dim)
    fail(ErrorKind::config, "basis",
         "problem too large (dimension " + std::to_string(spec.expected_dimension()) + " > max_dim " +
             std::to_string(options.max_dim) + ")");
  if (spec.expected_dimension() < 1) fail(ErrorKind::config, "basis", "basis is empty");

  BasisSet b;
  b.spec_ = spec;
  b.potential_ = potential;
  b.position_ = PositionBasis(spec, potential);
  b.momentum_count_ = 1;
  for (int i = 0; i < spec.d; ++i) b.momentum_count_ *= spec.n_p + 1;
  b.xi_count_ = spec.has_xi ? spec.n_xi + 1 : 1;
  b.momentum_rule_ = gauss_hermite(2 * spec.n_p + 4, b.momentum_scale());
  b.xi_rule_ = spec.has_xi ? gauss_hermite(2 * spec.n_xi + 4, b.xi_scale()) : Rule1D{{0.0}, {1.0}};
  b.dimension_ = static_cast<Eigen::Index>(spec.expected_dimension());
  b.fingerprint_ = fnv1a(spec.canonical() + "|" + potential.to_string());

  // Orthonormality check on a grid twice as fine as the one used to build
  // the position functions, plus the Hermite Gram matrices.
  Eigen::MatrixXd fine_nodes;
  Eigen::VectorXd fine_weights;
  b.position_.build_grid(2 * b.position_.grid_points_per_axis(), spec.beta, potential, fine_nodes, fine_weights);
  const Eigen::MatrixXd fine = b.position_.raw_values(fine_nodes) * b.position_.transform();
  double residual = (fine.transpose() * fine_weights.asDiagonal() * fine -
                     Eigen::MatrixXd::Identity(b.position_count(), b.position_count()))
                        .cwiseAbs()
                        .maxCoeff();
  auto hermite_gram = [&](const Rule1D& rule, double scale, int degree) {
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(degree + 1, degree + 1);
    std::vector<double> h(degree + 1);
    for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
      hermite_values(rule.nodes[j], scale, degree, h.data());
      for (int m = 0; m <= degree; ++m)
        for (int n = 0; n <= degree; ++n) g(m, n) += rule.weights[j] * h[m] * h[n];
    }
    return (g - Eigen::MatrixXd::Identity(degree + 1, degree + 1)).cwiseAbs().maxCoeff();
  };
  residual = std::max(residual, hermite_gram(b.momentum_rule_, b.momentum_scale(), spec.n_p));
  if (spec.has_xi) residual = std::max(residual, hermite_gram(b.xi_rule_, b.xi_scale(), spec.n_xi));
  b.gram_residual_ = residual;
  if (!(residual < options.tol_identity))
    fail(ErrorKind::numerical, "basis", "quadrature failure: Gram residual " + std::to_string(residual));
  return b;
}

}  // namespace hypoco
