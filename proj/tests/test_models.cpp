#include <cmath>
#include <memory>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "hypoco/models.hpp"

using namespace hypoco;

namespace {

struct Problem {
  std::shared_ptr<const BasisSet> basis;
  OperatorBundle ops;
};

Problem make(Model m, const Potential& v, int n_q, int n_p, double gamma = 1.0, double eps = 1.0, int n_xi = 4,
             double mass = 1.0) {
  BasisSpec s;
  s.d = v.dim();
  s.n_q = n_q;
  s.n_p = n_p;
  s.mass = mass;
  s.has_xi = m == Model::adaptive_langevin;
  s.n_xi = s.has_xi ? n_xi : 0;
  auto b = std::make_shared<const BasisSet>(build_basis(s, v));
  ModelSpec ms;
  ms.model = m;
  ms.gamma = gamma;
  ms.epsilon = eps;
  ms.mass = mass;
  ms.d = v.dim();
  ms.potential = v;
  return {b, assemble_model(ms, b)};
}

Potential cosine() { return Potential::parse("1:0.5,0", 1); }

Eigen::VectorXd random_vector(Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Eigen::VectorXd v(n);
  for (auto& x : v) x = g(rng);
  return v;
}

}  // namespace

TEST(Proposition, CaseConstants) {
  PropositionCase convex;
  EXPECT_EQ(prop_CCprime(convex), std::make_pair(1.0, 0.0));

  PropositionCase lower;
  lower.kind = CaseKind::hessian_lower_bound;
  lower.K = 2.5;
  EXPECT_EQ(prop_CCprime(lower), std::make_pair(1.0, 2.5));

  PropositionCase general;
  general.kind = CaseKind::general;
  general.c1 = 1.0;
  general.c2 = 0.0;
  general.c3 = 1.0;
  general.beta = 1.0;
  general.d = 1;
  EXPECT_EQ(prop_CCprime(general), std::make_pair(2.0, 34.0));

  PropositionCase lsi;
  lsi.kind = CaseKind::lsi;
  lsi.c3 = 1.0;
  lsi.C_LSI = 1.0;
  lsi.d = 1;
  lsi.exp_moments = {std::numbers::e};
  const auto cc = prop_CCprime(lsi);
  EXPECT_EQ(cc.first, 2.0);
  EXPECT_NEAR(cc.second, 3.0, 1e-15);
}

TEST(Proposition, MissingParametersAreNamed) {
  PropositionCase pc;
  pc.kind = CaseKind::hessian_lower_bound;
  try {
    prop_CCprime(pc);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("case parameters incomplete"), std::string::npos);
  }
  pc.kind = CaseKind::lsi;
  pc.c3 = 1.0;
  pc.C_LSI = 1.0;
  pc.d = 2;
  pc.exp_moments = {1.0};
  EXPECT_THROW(prop_CCprime(pc), Error);
  EXPECT_THROW(parse_case("concave"), Error);
}

TEST(Proposition, KineticMomentGram) {
  const double m = 1.5, beta = 0.8;
  const Eigen::MatrixXd g = kinetic_moment_gram(2, m, beta);
  const double unit = 1.0 / (m * m * beta * beta);
  EXPECT_NEAR(g(0, 0), 2.0 * unit, 1e-12);  // U_11
  EXPECT_NEAR(g(1, 1), unit, 1e-12);        // U_12
  EXPECT_NEAR(g(3, 3), 2.0 * unit, 1e-12);  // U_22
  EXPECT_NEAR(g(1, 2), unit, 1e-12);        // U_12 = U_21
  EXPECT_NEAR(g(0, 3), 0.0, 1e-12);         // U_11 orthogonal to U_22
  EXPECT_NEAR(g(0, 1), 0.0, 1e-12);
}

TEST(Proposition, FlatTorusIsConvexCase) {
  const Problem p = make(Model::langevin, Potential(1), 6, 6);
  const Decomposition dec = build_decomposition(p.ops);
  const double x = norm_X(dec);
  // equality on the flat torus: X^2 = 2
  EXPECT_NEAR(check_proposition(x * x, prop_CCprime({}), 1.0), 1.0, 1e-10);
}

TEST(Proposition, CosineHessianLowerBound) {
  const Potential v = cosine();
  const Problem p = make(Model::langevin, v, 10, 10);
  const Decomposition dec = build_decomposition(p.ops);
  const double k2 = poincare_constant_position(*p.basis).k2;
  const double x = norm_X(dec);
  PropositionCase pc;
  pc.kind = CaseKind::hessian_lower_bound;
  pc.K = 1.0;
  EXPECT_LE(check_proposition(x * x, prop_CCprime(pc), k2), 1.0);
  // X^2 independently: dense product of the full matrices, restricted by masks.
  const Eigen::MatrixXd A(p.ops.A.matrix);
  const Eigen::MatrixXd pi0(p.ops.Pi0.matrix);
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(A.rows(), A.cols());
  const Eigen::MatrixXd ap0 = (id - pi0) * A * pi0;
  const Eigen::MatrixXd ata = ap0.transpose() * ap0 + (id - pi0);
  const Eigen::MatrixXd y = (id - pi0) * A * (id - pi0) * ap0 * ata.inverse() * pi0;
  EXPECT_NEAR(x, spectral_norm(y), 1e-8);
}

TEST(Proposition, GeneralAndLsiCases) {
  const Potential v = Potential::parse("1:0.5,0;2:0.25,0", 1);
  const Problem p = make(Model::langevin, v, 10, 10);
  const Decomposition dec = build_decomposition(p.ops);
  const double k2 = poincare_constant_position(*p.basis).k2;
  const double x = norm_X(dec);
  const GrowthConstants g = estimate_growth_constants(v, 1.0);
  PropositionCase gen;
  gen.kind = CaseKind::general;
  gen.c1 = g.c1;
  gen.c2 = g.c2;
  gen.c3 = g.c3;
  gen.beta = 1.0;
  gen.d = 1;
  EXPECT_LE(check_proposition(x * x, prop_CCprime(gen), k2), 1.0);
  PropositionCase lsi;
  lsi.kind = CaseKind::lsi;
  lsi.c3 = g.c3;
  lsi.C_LSI = 1.0 / k2;
  lsi.d = 1;
  lsi.exp_moments = lsi_exp_moments(*p.basis, g.c3, *lsi.C_LSI);
  EXPECT_GT(lsi.exp_moments[0], 1.0);
  EXPECT_LE(check_proposition(x * x, prop_CCprime(lsi), k2), 1.0);
}

TEST(Proposition, ViolationIsReported) {
  EXPECT_THROW(check_proposition(10.0, {1.0, 0.0}, 1.0), Error);
}

TEST(LangevinBound, FormulaExamples) {
  EXPECT_DOUBLE_EQ(corollary_formula(1, 1, 1, 1, 0), 5.0);
  EXPECT_DOUBLE_EQ(rhmc_formula(1, 1, 1, 1, 0), 5.0);
  // general formula with ||Pi1 L_FD Pi1|| = 1/m, K_kappa^2 = beta/m, Y = 0, lambda_min = 1/m
  for (double m : {0.5, 2.0}) {
    const double beta = 1.3, gamma = 0.7, k2 = 0.9, x = 0.4;
    EXPECT_NEAR(langevin_general_formula(beta, gamma, 1.0 / m, 1.0 / m, k2, beta / m, x, 0.0),
                corollary_formula(beta, gamma, m, k2, x), 1e-12);
  }
}

TEST(LangevinBound, QuadraticKineticEnergyReduces) {
  const Problem p = make(Model::langevin, cosine(), 8, 8, 1.3, 1.0, 4, 1.5);
  const Decomposition dec = build_decomposition(p.ops);
  const double k2 = poincare_constant_position(*p.basis).k2;
  const LangevinBounds b = langevin_bounds(p.ops, dec, k2);
  EXPECT_NEAR(b.norm_Pi1LFDPi1, 1.0 / 1.5, 1e-12);
  EXPECT_LT(b.Y, 1e-10);
  EXPECT_NEAR(b.general, b.corollary, 1e-9 * b.corollary);
}

TEST(LangevinBound, SoundAgainstExactNorm) {
  for (double gamma : {0.1, 1.0, 10.0}) {
    const Problem p = make(Model::langevin, cosine(), 8, 8, gamma);
    const Decomposition dec = build_decomposition(p.ops);
    const double k2 = poincare_constant_position(*p.basis).k2;
    const LangevinBounds b = langevin_bounds(p.ops, dec, k2);
    const double exact = exact_resolvent_norm(p.ops.L()).value;
    EXPECT_GE(b.corollary / exact, 1.0) << gamma;
  }
}

TEST(RhmcBound, StructureAndSoundness) {
  for (double gamma : {0.2, 1.0, 5.0}) {
    const Problem p = make(Model::boltzmann_rhmc, cosine(), 8, 8, gamma);
    const Decomposition dec = build_decomposition(p.ops);
    const double k2 = poincare_constant_position(*p.basis).k2;
    const RhmcBound r = rhmc_bound(p.ops, dec, k2);
    EXPECT_LT(r.norm_S21, 1e-10);
    EXPECT_NEAR(r.norm_S11, gamma, 1e-10);
    EXPECT_GE(r.value / exact_resolvent_norm(p.ops.L()).value, 1.0) << gamma;
  }
}

TEST(RhmcBound, WrongModelIsRejected) {
  const Problem p = make(Model::langevin, cosine(), 3, 3);
  const Decomposition dec = build_decomposition(p.ops);
  EXPECT_THROW(rhmc_bound(p.ops, dec, 1.0), Error);
}

TEST(AdaptiveLangevin, CoercivityFormula) {
  ModelSpec m;
  m.model = Model::adaptive_langevin;
  m.epsilon = 1.0;
  EXPECT_DOUBLE_EQ(adl_a2(m, 1.0), 1.0);
  m.epsilon = 2.0;
  EXPECT_DOUBLE_EQ(adl_a2(m, 1.0), 0.5);
  EXPECT_DOUBLE_EQ(adl_envelope(1.0, 1.0), 1.0);
  EXPECT_DOUBLE_EQ(adl_envelope(4.0, 0.25), 4.0);
  EXPECT_DOUBLE_EQ(adl_envelope(0.25, 0.25), 64.0);
}

TEST(AdaptiveLangevin, DualAssemblyOfAtA) {
  for (double eps : {0.5, 2.0}) {
    const Problem p = make(Model::adaptive_langevin, cosine(), 4, 4, 1.0, eps, 4);
    const Decomposition dec = build_decomposition(p.ops);
    EXPECT_LT(adl_ata_residual(p.ops, dec), 1e-10);
  }
}

TEST(AdaptiveLangevin, EnvelopeFitRecoversConstant) {
  std::vector<double> g, e, exact;
  for (double gamma : {0.25, 1.0, 4.0})
    for (double eps : {0.25, 1.0, 4.0}) {
      g.push_back(gamma);
      e.push_back(eps);
      exact.push_back(2.5 * adl_envelope(gamma, eps));
    }
  const EnvelopeFit f = fit_adl_envelope(g, e, exact);
  EXPECT_NEAR(f.C_fit, 2.5, 1e-12);
  EXPECT_NEAR(f.min_ratio, 1.0, 1e-12);
  EXPECT_NEAR(f.max_ratio, 1.0, 1e-12);
}

TEST(StaticPoincare, ConstantsAndInequality) {
  const Problem p = make(Model::langevin, cosine(), 6, 6, 0.8);
  const Decomposition dec = build_decomposition(p.ops);
  const StaticPoincare c = static_poincare_constants(dec);
  EXPECT_NEAR(c.C1, 1.0 + norm_X(dec), 1e-14);
  std::mt19937_64 rng(41);
  for (int t = 0; t < 100; ++t) EXPECT_LE(static_inequality_ratio(p.ops, c, random_vector(p.basis->dimension(), rng)), 1.0);
}

TEST(StaticPoincare, DefinitionBelowProductBound) {
  const Problem p = make(Model::langevin, Potential(1), 5, 5, 2.0);
  const Decomposition dec = build_decomposition(p.ops);
  const StaticPoincare c = static_poincare_constants(dec);
  // ||(1 - S)^{1/2} Pi1|| = sqrt(1 + gamma/m) since S = -gamma/m on H1
  const Eigen::MatrixXd ainv = dec.A_p0 * dec.AtA.inverse();
  const double product = std::sqrt(1.0 + 2.0) * spectral_norm(ainv);
  EXPECT_LE(c.C2, product * (1.0 + 1e-12));
  EXPECT_NEAR(c.C2, product, 1e-10);  // A_{+0} maps into H1, so the two agree here
}

TEST(Rate, AlphaExamples) {
  EXPECT_NEAR(alpha_T(1, 1, 1, 1, 1), 2.0 / 3.0, 1e-15);
  EXPECT_GT(alpha_T(1, 1, 1e-12, 1, 1), 1.0 - 1e-11);
  double prev = 1.0;
  for (double T : {0.1, 1.0, 10.0, 100.0}) {
    const double a = alpha_T(0.7, 1.2, T, 1.5, 0.8);
    EXPECT_GT(a, 0.0);
    EXPECT_LT(a, prev);
    prev = a;
  }
  EXPECT_THROW(alpha_T(0, 1, 1, 1, 1), Error);
  EXPECT_THROW(alpha_T(1, 1, -1, 1, 1), Error);
}

TEST(Rate, FrictionAsymptotics) {
  const double s = 1.0, T = 1.0, c1 = 1.0, c2 = 1.0;
  double g = 1e-3;
  EXPECT_NEAR(-std::log(alpha_T(g, s, T, c1, c2)) / (g * s * T / (c1 * c1)), 1.0, 0.01);
  g = 1e3;
  EXPECT_NEAR(-std::log(alpha_T(g, s, T, c1, c2)) / (T / (g * c2 * c2)), 1.0, 0.01);
}

TEST(Scaling, LogLogSlope) {
  EXPECT_NEAR(loglog_slope({1, 10, 100}, {3, 0.3, 0.03}), -1.0, 1e-12);
  std::vector<double> g, bound;
  for (double gamma : {10.0, 30.0, 100.0}) {
    g.push_back(gamma);
    bound.push_back(corollary_formula(1.0, gamma, 1.0, 0.8, 1.3));
  }
  EXPECT_NEAR(loglog_slope(g, bound), 1.0, 0.1);
}
