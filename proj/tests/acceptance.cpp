// Acceptance suite: one PASS/FAIL line per criterion, details indented below.
// Exit status is nonzero when any criterion fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "hypoco/pipeline.hpp"

using namespace hypoco;

namespace {

struct Outcome {
  bool ok = true;
  std::vector<std::string> details;

  void check(bool cond, const std::string& what) {
    details.push_back((cond ? "ok    " : "FAIL  ") + what);
    ok = ok && cond;
  }
  void note(const std::string& what) { details.push_back("      " + what); }
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

const Potential& cosine() {
  static const Potential v = Potential::parse("1:0.5,0", 1);
  return v;
}

BasisSpec spec_of(Model m, int n_q, int n_p, int n_xi = 0, int d = 1) {
  BasisSpec s;
  s.d = d;
  s.n_q = n_q;
  s.n_p = n_p;
  s.has_xi = m == Model::adaptive_langevin;
  s.n_xi = s.has_xi ? n_xi : 0;
  return s;
}

ModelSpec model_of(Model m, const Potential& v, double gamma, double epsilon = 1.0) {
  ModelSpec ms;
  ms.model = m;
  ms.gamma = gamma;
  ms.epsilon = epsilon;
  ms.d = v.dim();
  ms.potential = v;
  return ms;
}

BuildOptions big() {
  BuildOptions o;
  o.max_dim = 100000;
  return o;
}

const std::vector<Model> kModels = {Model::langevin, Model::boltzmann_rhmc, Model::adaptive_langevin};

// 1. Structural identities at n_q = n_p = 12 for all three models.
Outcome structural() {
  Outcome o;
  for (Model m : kModels) {
    const OperatorBundle ops = assemble_point(model_of(m, cosine(), 1.0), spec_of(m, 12, 12, 12), big());
    const StructuralReport st = verify_structural_assumptions(ops);
    std::map<std::string, double> r;
    for (const auto& e : st.residuals) r[e.identity] = e.value;
    double worst = 0.0;
    for (const char* id : {"Pi0 A Pi0 = 0", "S Pi0 = 0", "Pi0 S = 0", "R^2 = I", "R S R = S", "R A R = -A"})
      worst = std::max(worst, r.at(id));
    o.check(worst < 1e-10, std::string(to_string(m)) + ": dimension " + std::to_string(ops.basis->dimension()) +
                               ", max residual " + num(worst));
  }
  return o;
}

// 2. Block resolvent against dense LU on 20 random right-hand sides.
Outcome block_resolvent_check() {
  Outcome o;
  for (Model m : kModels) {
    const OperatorBundle ops = assemble_point(model_of(m, cosine(), 0.8, 1.3), spec_of(m, 8, 8, 8), big());
    const Decomposition dec = build_decomposition(ops);
    const Eigen::MatrixXd L(ops.L());
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(L);
    const BlockResolvent br(dec);
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> g;
    double worst = 0.0;
    for (int t = 0; t < 20; ++t) {
      Eigen::VectorXd phi(L.rows());
      for (auto& x : phi) x = g(rng);
      const Eigen::VectorXd ref = lu.solve(phi);
      worst = std::max(worst, (br.solve(phi) - ref).norm() / ref.norm());
    }
    o.check(worst < 1e-8, std::string(to_string(m)) + ": max relative discrepancy " + num(worst));
  }
  return o;
}

struct SweepPoint {
  std::string potential;
  double gamma = 0.0;
  BoundReport report;
  double corollary = 0.0;
};

std::vector<SweepPoint> g_sweep;  // shared by criteria 3 and 4

const std::vector<double> kGammas = {0.01, 0.1, 0.5, 1.0, 2.0, 10.0, 100.0};

// 3. Resolvent bound margin >= 1 on every converged point.
Outcome theorem_soundness() {
  Outcome o;
  const std::vector<std::pair<std::string, std::string>> potentials = {
      {"V=0", ""}, {"V=cos q", "1:0.5,0"}, {"V=cos q + cos 2q/2", "1:0.5,0;2:0.25,0"}};
  const BuildOptions opt = big();
  for (const auto& [label, text] : potentials) {
    const Potential v = Potential::parse(text, 1);
    const BasisSpec spec = spec_of(Model::langevin, 6, 24);
    int converged = 0;
    double min_margin = std::numeric_limits<double>::infinity();
    for (double gamma : kGammas) {
      const ModelSpec model = model_of(Model::langevin, v, gamma);
      const OperatorBundle ops = assemble_point(model, spec, opt);
      SweepPoint p{label, gamma, evaluate_bound(ops, 1e-10, 1e-12), 0.0};
      const ConvergenceCheck cc = check_convergence(model, spec, p.report, opt, 0.01, 1e-12);
      p.report.converged = cc.converged;
      const Decomposition dec = build_decomposition(ops);
      p.corollary = langevin_bounds(ops, dec, poincare_constant_position(*ops.basis).k2).corollary;
      if (p.report.converged) {
        ++converged;
        min_margin = std::min(min_margin, p.report.margin);
      } else {
        o.note(label + ", gamma " + num(gamma) + ": unconverged (changes " + num(cc.change_q) + ", " +
               num(cc.change_p) + ")");
      }
      g_sweep.push_back(p);
    }
    o.check(converged > 0 && min_margin >= 1.0, label + ": " + std::to_string(converged) + "/" +
                                                    std::to_string(kGammas.size()) + " converged, min margin " +
                                                    num(min_margin));
  }
  return o;
}

// 4. Slopes of the Corollary bound and of the exact norm at both ends.
Outcome friction_scaling() {
  Outcome o;
  if (g_sweep.empty()) {
    o.check(false, "criterion 3 sweep unavailable");
    return o;
  }
  std::map<std::string, std::map<double, SweepPoint>> by;
  for (const auto& p : g_sweep) by[p.potential][p.gamma] = p;
  for (const auto& [label, pts] : by) {
    auto slope = [&](double g1, double g2, bool exact) {
      const auto& a = pts.at(g1);
      const auto& b = pts.at(g2);
      return loglog_slope({g1, g2}, {exact ? a.report.exact : a.corollary, exact ? b.report.exact : b.corollary});
    };
    const double cs = slope(0.01, 0.1, false), cl = slope(10, 100, false);
    const double es = slope(0.01, 0.1, true), el = slope(10, 100, true);
    const bool ok = std::abs(cs + 1) <= 0.1 && std::abs(cl - 1) <= 0.1 && std::abs(es + 1) <= 0.1 && std::abs(el - 1) <= 0.1;
    o.check(ok, label + ": corollary slopes " + num(cs) + ", " + num(cl) + "; exact slopes " + num(es) + ", " + num(el));
  }
  return o;
}

// 5. X^2 <= 2 (C + C'/K_nu^2) for the three cases.
Outcome proposition() {
  Outcome o;
  auto run = [&](const std::string& label, const Potential& v, PropositionCase pc) {
    const OperatorBundle ops = assemble_point(model_of(Model::langevin, v, 1.0), spec_of(Model::langevin, 10, 10), big());
    const Decomposition dec = build_decomposition(ops);
    const double k2 = poincare_constant_position(*ops.basis).k2;
    const double x = norm_X(dec);
    const auto cc = prop_CCprime(pc);
    const double rhs = 2.0 * (cc.first + cc.second / k2);
    o.check(x * x <= rhs + 1e-6, label + ": X^2 " + num(x * x) + " <= " + num(rhs));
  };
  run("(i) V=0", Potential(1), PropositionCase{});
  PropositionCase ii;
  ii.kind = CaseKind::hessian_lower_bound;
  ii.K = 1.0;
  run("(ii) V=cos q, K=1", cosine(), ii);
  const GrowthConstants g = estimate_growth_constants(cosine(), 1.0);
  PropositionCase iii;
  iii.kind = CaseKind::general;
  iii.c1 = g.c1;
  iii.c2 = g.c2;
  iii.c3 = g.c3;
  iii.beta = 1.0;
  iii.d = 1;
  run("(iii) V=cos q, estimated c1=" + num(g.c1) + " c2=" + num(g.c2) + " c3=" + num(g.c3), cosine(), iii);
  return o;
}

// 6. Randomized lemma suite on position functions, V = cos q, beta = 1.
Outcome lemmas() {
  Outcome o;
  const BasisSet b = build_basis(spec_of(Model::langevin, 8, 0), cosine());
  const LemmaGrid grid = make_lemma_grid(b);
  const GrowthConstants g = estimate_growth_constants(cosine(), 1.0);
  std::mt19937_64 rng(7);
  double bochner = 0.0, villani = 0.0, h2_general = 0.0, h2_lower = 0.0;
  for (int t = 0; t < 50; ++t) bochner = std::max(bochner, check_bochner(b, grid, random_position_function(b, rng)).residual);
  for (int t = 0; t < 100; ++t) villani = std::max(villani, check_villani_lemma(b, grid, random_position_function(b, rng), g.c1));
  for (int t = 0; t < 100; ++t) {
    const Eigen::VectorXd u = random_position_function(b, rng);
    h2_general = std::max(h2_general, check_controlH2(b, grid, u, 2.0, g.cprime_general));
    h2_lower = std::max(h2_lower, check_controlH2(b, grid, u, 1.0, g.K_hessian));
  }
  o.check(bochner < 1e-8, "Bochner identity, 50 functions: max residual " + num(bochner));
  o.check(villani <= 1.0, "Villani lemma, 100 functions: max ratio " + num(villani));
  o.check(h2_general <= 1.0 && h2_lower <= 1.0,
          "H2 control, 100 functions: max ratio " + num(h2_general) + " (general case), " + num(h2_lower) +
              " (Hessian lower bound)");
  return o;
}

// 7. RHMC structure and bound across the friction sweep.
Outcome rhmc() {
  Outcome o;
  double worst_s21 = 0.0, worst_s11 = 0.0, min_ratio = std::numeric_limits<double>::infinity();
  for (double gamma : kGammas) {
    const OperatorBundle ops =
        assemble_point(model_of(Model::boltzmann_rhmc, cosine(), gamma), spec_of(Model::boltzmann_rhmc, 6, 24), big());
    const Decomposition dec = build_decomposition(ops);
    const RhmcBound r = rhmc_bound(ops, dec, poincare_constant_position(*ops.basis).k2, 1.0);
    worst_s21 = std::max(worst_s21, r.norm_S21);
    worst_s11 = std::max(worst_s11, std::abs(r.norm_S11 - gamma));
    const double exact = exact_resolvent_norm(ops.L()).value;
    min_ratio = std::min(min_ratio, r.value / exact);
    o.note("gamma " + num(gamma) + ": bound " + num(r.value) + ", exact " + num(exact));
  }
  o.check(worst_s21 < 1e-10, "max ||S21|| " + num(worst_s21));
  o.check(worst_s11 < 1e-10, "max | ||S11|| - gamma | " + num(worst_s11));
  o.check(min_ratio >= 1.0, "min bound/exact " + num(min_ratio));
  return o;
}

// 8. Adaptive Langevin: A*A identity and the scaling envelope.
Outcome adaptive_langevin() {
  Outcome o;
  std::vector<double> gs, es, exact;
  double worst_ata = 0.0;
  for (double gamma : {0.25, 1.0, 4.0})
    for (double eps : {0.25, 1.0, 4.0}) {
      const OperatorBundle ops = assemble_point(model_of(Model::adaptive_langevin, cosine(), gamma, eps),
                                                spec_of(Model::adaptive_langevin, 8, 8, 8), big());
      const Decomposition dec = build_decomposition(ops);
      worst_ata = std::max(worst_ata, adl_ata_residual(ops, dec, 1.0));
      gs.push_back(gamma);
      es.push_back(eps);
      exact.push_back(exact_resolvent_norm(ops.L()).value);
      o.note("gamma " + num(gamma) + ", epsilon " + num(eps) + ": exact " + num(exact.back()) + ", envelope " +
             num(adl_envelope(gamma, eps)));
    }
  const EnvelopeFit fit = fit_adl_envelope(gs, es, exact);
  o.check(worst_ata < 1e-10, "A*A dual assembly: max residual " + num(worst_ata));
  o.check(fit.min_ratio >= 1.0 / 3.0 && fit.max_ratio <= 3.0,
          "C_fit " + num(fit.C_fit) + ", exact/(C_fit envelope) in [" + num(fit.min_ratio) + ", " + num(fit.max_ratio) + "]");
  return o;
}

// 9. Static Poincare inequality and the alpha_T asymptotics.
Outcome appendix() {
  Outcome o;
  const OperatorBundle ops = assemble_point(model_of(Model::langevin, cosine(), 1.0), spec_of(Model::langevin, 8, 8), big());
  const Decomposition dec = build_decomposition(ops);
  const StaticPoincare c = static_poincare_constants(dec);
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g;
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    Eigen::VectorXd f(ops.basis->dimension());
    for (auto& x : f) x = g(rng);
    worst = std::max(worst, static_inequality_ratio(ops, c, f));
  }
  o.check(worst <= 1.0, "static inequality, 100 functions: max ratio " + num(worst) + " (C1 " + num(c.C1) + ", C2 " +
                            num(c.C2) + ")");
  const double s = 1.0, T = 1.0;
  const double small = -std::log(alpha_T(1e-3, s, T, c.C1, c.C2)) / (1e-3 * s * T / (c.C1 * c.C1));
  const double large = -std::log(alpha_T(1e3, s, T, c.C1, c.C2)) / (T / (1e3 * c.C2 * c.C2));
  o.check(std::abs(small - 1.0) <= 0.01 && std::abs(large - 1.0) <= 0.01,
          "alpha_T asymptotic ratios " + num(small) + " (gamma 1e-3), " + num(large) + " (gamma 1e3)");
  return o;
}

// 10. d = 2 separable potential against d = 1.
Outcome dimension_robustness() {
  Outcome o;
  struct Values {
    double k2, x2, corollary;
  };
  auto run = [](int d) {
    const Potential v = d == 1 ? cosine() : Potential::separable_cosine(2, 1.0);
    const OperatorBundle ops = assemble_point(model_of(Model::langevin, v, 1.0), spec_of(Model::langevin, 6, 6, 0, d), big());
    const Decomposition dec = build_decomposition(ops);
    const double k2 = poincare_constant_position(*ops.basis).k2;
    const LangevinBounds lb = langevin_bounds(ops, dec, k2);
    return Values{k2, lb.X * lb.X, lb.corollary};
  };
  const Values one = run(1), two = run(2);
  auto close = [&](const std::string& what, double a, double b) {
    o.check(relative_difference(a, b) <= 0.05, what + ": d=1 " + num(a) + ", d=2 " + num(b));
  };
  close("K_nu^2", one.k2, two.k2);
  close("X^2", one.x2, two.x2);
  close("Corollary bound", one.corollary, two.corollary);
  return o;
}

/// Every machine-readable report the suite emits, concatenated.
std::string reports(std::uint64_t seed) {
  RunConfig c = parse_config_text(
      "model = langevin\nd = 1\nbeta = 1\ngamma = 1\nmass = 1\npotential = 1:0.5,0\nn_q = 4\nn_p = 8\nsuite = 20\n");
  std::string out = full_report(c, seed).dump(2);
  out += lemma_json(run_lemma_suite(c, seed, 20)).dump(2);
  out += constants_json(compute_constants(c)).dump(2);
  c.gammas = parse_range("0.1:10:log5", "gamma");
  out += sweep_csv(sweep(c, 2));
  c.model = Model::boltzmann_rhmc;
  out += sweep_csv(sweep(c, 1));
  return out;
}

// 11. Two runs with the same seed give byte-identical reports.
Outcome reproducibility() {
  Outcome o;
  const std::string a = reports(7), b = reports(7);
  o.check(a == b, "two runs, " + std::to_string(a.size()) + " bytes each: " + (a == b ? "identical" : "different"));
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* title;
    double budget_s;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "structural identities", 10, structural},
      {2, "block resolvent matches dense LU", 30, block_resolvent_check},
      {3, "resolvent bound soundness over friction and potential", 300, theorem_soundness},
      {4, "friction scaling slopes", 300, friction_scaling},
      {5, "proposition on C, C'", 60, proposition},
      {6, "lemma suite", 60, lemmas},
      {7, "RHMC structure and bound", 120, rhmc},
      {8, "adaptive Langevin identity and envelope", 300, adaptive_langevin},
      {9, "static Poincare inequality and alpha_T", 60, appendix},
      {10, "dimension robustness", 180, dimension_robustness},
      {11, "reproducibility", 300, reproducibility},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.check(false, std::string("exception: ") + e.what());
    }
    const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    // criterion 4 reuses the sweep of criterion 3, so its time is counted there
    if (dt > c.budget_s) o.check(false, "runtime " + num(dt) + " s exceeds " + num(c.budget_s) + " s");
    std::printf("%s criterion %d: %s (%.1f s)\n", o.ok ? "PASS" : "FAIL", c.id, c.title, dt);
    for (const auto& d : o.details) std::printf("    %s\n", d.c_str());
    std::fflush(stdout);
    failures += o.ok ? 0 : 1;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
