#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "hypoco/basis.hpp"

using namespace hypoco;

namespace {

BasisSpec spec_of(int d, int n_q, int n_p, double beta = 1.0, double mass = 1.0) {
  BasisSpec s;
  s.d = d;
  s.n_q = n_q;
  s.n_p = n_p;
  s.beta = beta;
  s.mass = mass;
  return s;
}

Potential cosine() { return Potential::parse("1:0.5,0", 1); }

}  // namespace

TEST(Basis, DimensionCounting) {
  EXPECT_EQ(build_basis(spec_of(1, 3, 2), Potential(1)).dimension(), 20);
  EXPECT_EQ(build_basis(spec_of(1, 1, 0), Potential(1)).dimension(), 2);
  EXPECT_EQ(build_basis(spec_of(2, 2, 1), Potential(2)).dimension(), 99);
  BasisSpec xi = spec_of(1, 2, 2);
  xi.has_xi = true;
  xi.n_xi = 3;
  EXPECT_EQ(build_basis(xi, Potential(1)).dimension(), 5 * 3 * 4 - 1);
}

TEST(Basis, TooLargeIsRejected) {
  BuildOptions opt;
  opt.max_dim = 50;
  try {
    build_basis(spec_of(2, 2, 1), Potential(2), opt);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::config);
    EXPECT_NE(std::string(e.what()).find("problem too large"), std::string::npos);
  }
}

TEST(Basis, InvalidSpecIsRejected) {
  EXPECT_THROW(build_basis(spec_of(1, 2, 2, -1.0), Potential(1)), Error);
  EXPECT_THROW(build_basis(spec_of(1, 2, 2, 1.0, 0.0), Potential(1)), Error);
  EXPECT_THROW(build_basis(spec_of(1, -1, 2), Potential(1)), Error);
  EXPECT_THROW(build_basis(spec_of(2, 2, 2), Potential(1)), Error);
}

TEST(Basis, GramIsIdentityForSeveralPotentials) {
  for (const char* text : {"", "1:0.5,0", "1:0.5,0;2:0.25,0", "1:1.5,0.3;3:0.2,0"}) {
    const BasisSet b = build_basis(spec_of(1, 6, 4, 2.0, 1.5), Potential::parse(text, 1));
    EXPECT_LT(b.gram_residual(), 1e-10) << text;
  }
  const BasisSet b2 = build_basis(spec_of(2, 3, 2), Potential::separable_cosine(2, 1.0));
  EXPECT_LT(b2.gram_residual(), 1e-10);
}

TEST(Basis, ConstantIsFirstPositionFunction) {
  const BasisSet b = build_basis(spec_of(1, 4, 1), cosine());
  const Eigen::VectorXd col0 = b.position().values().col(0);
  EXPECT_LT((col0.array() - 1.0).abs().maxCoeff(), 1e-13);
}

TEST(Basis, InnerProductExamples) {
  const BasisSet flat = build_basis(spec_of(1, 2, 3, 2.0, 3.0), Potential(1));
  // cos q has nu-norm^2 1/2 on the flat torus.
  auto cosq = flat.expand_function([](auto q, auto, double) { return std::cos(q[0]); });
  EXPECT_NEAR(flat.inner_product(cosq.coefficients, cosq.coefficients), 0.5, 1e-13);
  EXPECT_NEAR(cosq.residual, 0.0, 1e-7);
  // the degree-one Hermite function has unit norm
  auto h1 = flat.expand_function([&](auto, auto p, double) { return p[0] / flat.momentum_scale(); });
  EXPECT_NEAR(flat.inner_product(h1.coefficients, h1.coefficients), 1.0, 1e-13);
  // <p^2, 1>_kappa = m/beta
  EXPECT_NEAR(flat.integrate([](auto, auto p, double) { return p[0] * p[0]; }), 3.0 / 2.0, 1e-13);
}

TEST(Basis, BasisMismatchIsRejected) {
  const BasisSet a = build_basis(spec_of(1, 2, 2), Potential(1));
  const BasisSet b = build_basis(spec_of(1, 2, 3), Potential(1));
  const auto fa = a.zero_vector();
  const auto fb = b.zero_vector();
  try {
    a.inner_product(fa, fb);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("basis mismatch"), std::string::npos);
  }
}

TEST(Basis, ExpandConstantGivesZeroVector) {
  const BasisSet b = build_basis(spec_of(1, 3, 2), cosine());
  const auto e = b.expand_function([](auto, auto, double) { return 1.0; });
  EXPECT_LT(e.coefficients.values.cwiseAbs().maxCoeff(), 1e-13);
  EXPECT_NEAR(e.mean, 1.0, 1e-13);
}

TEST(Basis, ExpandCosineIsOnePositionFunctionAtHermiteZero) {
  const BasisSet b = build_basis(spec_of(1, 3, 2), Potential(1));
  const auto e = b.expand_function([](auto q, auto, double) { return std::cos(q[0]); });
  int nonzero = 0;
  for (Eigen::Index i = 0; i < b.dimension(); ++i) {
    if (std::abs(e.coefficients.values(i)) < 1e-12) continue;
    ++nonzero;
    EXPECT_EQ(b.momentum_degree(i), 0);
    EXPECT_EQ(b.position().code(b.index(i).position), std::vector<int>{1});  // cos(1 q)
  }
  EXPECT_EQ(nonzero, 1);
}

TEST(Basis, ExpandPCubedMatchesHermiteExpansion) {
  // p^3 = sigma^3 He_3(y) + 3 sigma^3 He_1(y) with He_3 = sqrt(6) h_3: oracle coefficients
  // sqrt(6) sigma^3 on h_3 and 3 sigma^3 on h_1.
  const double beta = 2.0, mass = 0.5;
  const BasisSet b = build_basis(spec_of(1, 1, 5, beta, mass), cosine());
  const double sigma = std::sqrt(mass / beta);
  const auto e = b.expand_function([](auto, auto p, double) { return p[0] * p[0] * p[0]; });
  for (Eigen::Index i = 0; i < b.dimension(); ++i) {
    const auto idx = b.index(i);
    double expect = 0.0;
    if (idx.position == 0 && idx.momentum[0] == 3) expect = std::sqrt(6.0) * std::pow(sigma, 3);
    if (idx.position == 0 && idx.momentum[0] == 1) expect = 3.0 * std::pow(sigma, 3);
    EXPECT_NEAR(e.coefficients.values(i), expect, 1e-12) << i;
  }
}

TEST(Basis, ParsevalForRandomBandLimitedFunctions) {
  const BasisSet b = build_basis(spec_of(1, 4, 3, 1.0, 1.0), cosine());
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::VectorXd c(b.dimension());
    for (auto& x : c) x = g(rng);
    const auto f = b.make_vector(c);
    const double quad = b.integrate([&](auto q, auto p, double xi) {
      const double v = b.evaluate(f, q, p, xi);
      return v * v;
    });
    EXPECT_NEAR(quad / c.squaredNorm(), 1.0, 1e-8);
  }
}

TEST(Basis, NestedPositionFunctions) {
  const Potential v = Potential::parse("1:0.5,0;2:0.25,0", 1);
  const BasisSet small = build_basis(spec_of(1, 3, 1), v);
  const BasisSet large = build_basis(spec_of(1, 6, 1), v);
  const int n = small.position_count();
  const Eigen::MatrixXd ts = small.position().transform();
  const Eigen::MatrixXd tl = large.position().transform().topLeftCorner(n, n);
  EXPECT_LT((ts - tl).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((small.position().derivative(0) - large.position().derivative(0).topLeftCorner(n, n)).cwiseAbs().maxCoeff(),
            1e-12);
}

TEST(Basis, DerivativeMatchesQuadrature) {
  // Galerkin d/dq by matrix versus <phi_a, phi_b'>_nu by quadrature of the jets.
  const BasisSet b = build_basis(spec_of(1, 4, 0), Potential::parse("1:0.7,0.2", 1));
  const auto& pos = b.position();
  const int n = pos.size();
  Eigen::MatrixXd quad = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index j = 0; j < pos.nodes().rows(); ++j) {
    const double q = pos.nodes()(j, 0);
    for (int c = 0; c < n; ++c) {
      const auto jet = pos.jet(Eigen::VectorXd::Unit(n, c), &q);
      for (int r = 0; r < n; ++r) quad(r, c) += pos.weights()(j) * pos.values()(j, r) * jet.gradient(0);
    }
  }
  EXPECT_LT((quad - pos.derivative(0)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Basis, DoublingQuadratureKeepsInnerProducts) {
  const BasisSet b = build_basis(spec_of(1, 4, 3), cosine());
  const auto& pos = b.position();
  Eigen::MatrixXd nodes;
  Eigen::VectorXd weights;
  pos.build_grid(2 * pos.grid_points_per_axis(), 1.0, cosine(), nodes, weights);
  const Eigen::MatrixXd vals = pos.raw_values(nodes) * pos.transform();
  const Eigen::MatrixXd g2 = vals.transpose() * weights.asDiagonal() * vals;
  const Eigen::MatrixXd g1 = pos.values().transpose() * pos.weights().asDiagonal() * pos.values();
  EXPECT_LT((g2 - g1).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Potential, ParseAndSymmetry) {
  const Potential v = Potential::parse("1:0.5,0", 1);
  const double q = 0.3;
  EXPECT_NEAR(v.value(&q), std::cos(q), 1e-15);
  EXPECT_THROW(Potential::parse("1:0.5,0;-1:0.4,0", 1), Error);
  EXPECT_THROW(Potential::parse("0:0,1", 1), Error);
  EXPECT_THROW(Potential::parse("1,1:0.5", 1), Error);
  EXPECT_THROW(Potential::parse("1:abc", 1), Error);
  const Potential w = Potential::parse("1:0.3,0.4", 1);
  double g = 0.0;
  w.gradient(&q, &g);
  const double h = 1e-6, qp = q + h, qm = q - h;
  EXPECT_NEAR(g, (w.value(&qp) - w.value(&qm)) / (2 * h), 1e-8);
}

TEST(Potential, SeparableHessian) {
  const Potential v = Potential::separable_cosine(2, 1.0);
  const double q[2] = {0.4, 1.1};
  const Eigen::MatrixXd h = v.hessian(q);
  EXPECT_NEAR(h(0, 0), -std::cos(0.4), 1e-14);
  EXPECT_NEAR(h(1, 1), -std::cos(1.1), 1e-14);
  EXPECT_NEAR(h(0, 1), 0.0, 1e-14);
}

TEST(Quadrature, GaussHermiteMoments) {
  const double sigma = 0.7;
  const Rule1D r = gauss_hermite(10, sigma);
  double m2 = 0, m4 = 0, m0 = 0;
  for (std::size_t i = 0; i < r.nodes.size(); ++i) {
    m0 += r.weights[i];
    m2 += r.weights[i] * std::pow(r.nodes[i], 2);
    m4 += r.weights[i] * std::pow(r.nodes[i], 4);
  }
  EXPECT_NEAR(m0, 1.0, 1e-14);
  EXPECT_NEAR(m2, sigma * sigma, 1e-14);
  EXPECT_NEAR(m4, 3 * std::pow(sigma, 4), 1e-14);
}
