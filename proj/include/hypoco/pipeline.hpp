#pragma once

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "hypoco/config.hpp"
#include "hypoco/constants.hpp"
#include "hypoco/models.hpp"
#include "hypoco/operators.hpp"
#include "hypoco/schur.hpp"
#include "hypoco/serialize.hpp"

namespace hypoco {

/// Decimal rendering with 17 significant digits (round-trips every double).
inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline OperatorBundle assemble_point(const ModelSpec& model, const BasisSpec& spec, const BuildOptions& opt) {
  auto basis = std::make_shared<const BasisSet>(build_basis(spec, model.potential, opt));
  return assemble_model(model, basis);
}

/// The resolvent bound evaluated on an assembled bundle, without the convergence check.
inline BoundReport evaluate_bound(const OperatorBundle& ops, double tol_identity, double rank_tol) {
  const StructuralReport st = verify_structural_assumptions(ops, tol_identity);
  DecompositionOptions dopt;
  dopt.rank_tol = rank_tol;
  dopt.tol_identity = tol_identity;
  const Decomposition dec = build_decomposition(ops, dopt);
  const IntermediateNorms in = intermediate_norms(dec);
  BoundReport r;
  r.s = st.s_numeric;
  r.a = dec.a;
  r.norm_S11 = in.norm_S11;
  r.norm_R22 = in.norm_R22;
  r.norm_L21A10inv = in.norm_L21A10inv;
  r.bound = theorem_bound(r.s, r.a, r.norm_S11, r.norm_R22, r.norm_L21A10inv);
  r.exact = exact_resolvent_norm(ops.L()).value;
  r.margin = r.bound / r.exact;
  return r;
}

struct ConvergenceCheck {
  bool converged = false;
  bool skipped = false;  // a refined basis would exceed max_dim
  double change_q = 0.0;  // max relative change of (bound, exact) when n_q doubles
  double change_p = 0.0;  // same for n_p (and n_xi)
};

/// A value is converged when doubling n_q, and separately doubling n_p (with
/// n_xi), changes both the bound and the exact norm by less than conv_tol.
inline ConvergenceCheck check_convergence(const ModelSpec& model, const BasisSpec& spec, const BoundReport& base,
                                          const BuildOptions& opt, double conv_tol, double rank_tol) {
  ConvergenceCheck c;
  BasisSpec q2 = spec, p2 = spec;
  q2.n_q *= 2;
  p2.n_p *= 2;
  p2.n_xi *= 2;
  if (q2.expected_dimension() > opt.max_dim || p2.expected_dimension() > opt.max_dim) {
    c.skipped = true;
    return c;
  }
  auto change = [&](const BasisSpec& s) {
    const BoundReport r = evaluate_bound(assemble_point(model, s, opt), opt.tol_identity, rank_tol);
    return std::max(relative_difference(r.bound, base.bound), relative_difference(r.exact, base.exact));
  };
  c.change_q = change(q2);
  c.change_p = change(p2);
  c.converged = c.change_q < conv_tol && c.change_p < conv_tol;
  return c;
}

struct PointResult {
  ModelSpec model;
  BasisSpec spec;
  BoundReport report;
  ConvergenceCheck convergence;
};

inline PointResult evaluate_point(const ModelSpec& model, const BasisSpec& spec, const BuildOptions& opt,
                                  double conv_tol, double rank_tol) {
  PointResult p{model, spec, {}, {}};
  p.report = evaluate_bound(assemble_point(model, spec, opt), opt.tol_identity, rank_tol);
  p.convergence = check_convergence(model, spec, p.report, opt, conv_tol, rank_tol);
  p.report.converged = p.convergence.converged;
  return p;
}

inline nlohmann::ordered_json bound_json(const BoundReport& r) {
  nlohmann::ordered_json j;
  j["s"] = r.s;
  j["a"] = r.a;
  j["norm_S11"] = r.norm_S11;
  j["norm_R22"] = r.norm_R22;
  j["norm_L21A10inv"] = r.norm_L21A10inv;
  j["bound"] = r.bound;
  j["exact"] = r.exact;
  j["margin"] = r.margin;
  j["converged"] = r.converged;
  return j;
}

/// Runs `count` independent jobs on `jobs` worker threads; results land at
/// their own index so the output order never depends on scheduling.
template <class Result, class Fn>
std::vector<Result> run_pool(std::size_t count, int jobs, Fn fn) {
  std::vector<Result> out(count);
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        out[i] = fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int n = std::max(1, std::min<int>(jobs, static_cast<int>(count)));
  std::vector<std::thread> pool;
  for (int t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

inline std::vector<PointResult> sweep(const RunConfig& cfg, int jobs) {
  std::vector<std::pair<double, double>> grid;
  const std::vector<double> eps = cfg.model == Model::adaptive_langevin ? cfg.epsilons : std::vector<double>{cfg.epsilon()};
  for (double g : cfg.gammas)
    for (double e : eps) grid.emplace_back(g, e);
  const BasisSpec spec = cfg.basis_spec();
  const BuildOptions opt = cfg.build_options();
  return run_pool<PointResult>(grid.size(), jobs, [&](std::size_t i) {
    return evaluate_point(cfg.model_spec(grid[i].first, grid[i].second), spec, opt, cfg.conv_tol, cfg.rank_tol);
  });
}

inline std::string sweep_csv(const std::vector<PointResult>& rows) {
  std::ostringstream os;
  os << "model,gamma,epsilon,d,n_q,n_p,s,a,bound,exact,margin,converged\n";
  for (const auto& p : rows) {
    const BoundReport& r = p.report;
    os << to_string(p.model.model) << ',' << fmt(p.model.gamma) << ',' << fmt(p.model.epsilon) << ',' << p.spec.d << ','
       << p.spec.n_q << ',' << p.spec.n_p << ',' << fmt(r.s) << ',' << fmt(r.a) << ',' << fmt(r.bound) << ','
       << fmt(r.exact) << ',' << fmt(r.margin) << ',' << (r.converged ? "true" : "false") << '\n';
  }
  return os.str();
}

struct ConstantsReport {
  PoincareResult K_nu2;
  double K_kappa2 = 0.0;
  MassMatrixResult lambda_min_M;
  GrowthConstants growth;
};

inline ConstantsReport compute_constants(const RunConfig& cfg) {
  BasisSpec s = cfg.basis_spec();
  s.n_p = 0;
  s.has_xi = false;
  s.n_xi = 0;
  const BasisSet b = build_basis(s, cfg.potential, cfg.build_options());
  ConstantsReport r;
  r.K_nu2 = poincare_constant_position(b);
  r.K_kappa2 = poincare_constant_momentum(cfg.basis_spec()).k2;
  r.lambda_min_M = lambda_min_M(cfg.mass, cfg.beta);
  r.growth = estimate_growth_constants(cfg.potential, cfg.beta, 0, cfg.c2);
  return r;
}

inline nlohmann::ordered_json constants_json(const ConstantsReport& c) {
  nlohmann::ordered_json j;
  j["K_nu2"] = c.K_nu2.k2;
  j["K_kappa2"] = c.K_kappa2;
  j["lambda_min_M"] = c.lambda_min_M.value;
  j["c1"] = c.growth.c1;
  j["c2"] = c.growth.c2;
  j["c3"] = c.growth.c3;
  j["K_hessian"] = c.growth.K_hessian;
  return j;
}

/// (C, C') for the configured case, filling case parameters from the
/// estimated growth constants.
inline std::pair<double, double> configured_cc(const RunConfig& cfg, const BasisSet& position_basis,
                                               const GrowthConstants& g) {
  PropositionCase pc;
  pc.kind = cfg.prop_case;
  pc.K = cfg.K;
  pc.c1 = g.c1;
  pc.c2 = g.c2;
  pc.c3 = g.c3;
  pc.beta = cfg.beta;
  pc.d = cfg.d;
  pc.C_LSI = cfg.C_LSI;
  if (pc.kind == CaseKind::lsi && cfg.C_LSI) pc.exp_moments = lsi_exp_moments(position_basis, g.c3, *cfg.C_LSI);
  return prop_CCprime(pc);
}

struct LemmaSuiteReport {
  std::uint64_t seed = 0;
  int suite = 0;
  double max_villani = 0.0;
  double max_bochner_residual = 0.0;
  double max_controlH2 = 0.0;
  double C = 0.0, C_prime = 0.0;
};

/// Randomized Villani, Bochner and H^2-control checks on position functions.
inline LemmaSuiteReport run_lemma_suite(const RunConfig& cfg, std::uint64_t seed, int suite) {
  BasisSpec s = cfg.basis_spec();
  s.n_p = 0;
  s.has_xi = false;
  s.n_xi = 0;
  const BasisSet b = build_basis(s, cfg.potential, cfg.build_options());
  const LemmaGrid grid = make_lemma_grid(b);
  const GrowthConstants g = estimate_growth_constants(cfg.potential, cfg.beta, 0, cfg.c2);
  LemmaSuiteReport r;
  r.seed = seed;
  r.suite = suite;
  std::tie(r.C, r.C_prime) = configured_cc(cfg, b, g);
  std::mt19937_64 rng(seed);
  for (int t = 0; t < suite; ++t) {
    r.max_villani = std::max(r.max_villani, check_villani_lemma(b, grid, random_position_function(b, rng), g.c1));
    r.max_bochner_residual = std::max(r.max_bochner_residual, check_bochner(b, grid, random_position_function(b, rng)).residual);
    r.max_controlH2 = std::max(r.max_controlH2, check_controlH2(b, grid, random_position_function(b, rng), r.C, r.C_prime));
  }
  return r;
}

inline nlohmann::ordered_json lemma_json(const LemmaSuiteReport& r) {
  nlohmann::ordered_json j;
  j["seed"] = r.seed;
  j["suite"] = r.suite;
  j["C"] = r.C;
  j["C_prime"] = r.C_prime;
  j["max_villani_ratio"] = r.max_villani;
  j["max_bochner_residual"] = r.max_bochner_residual;
  j["max_controlH2_ratio"] = r.max_controlH2;
  return j;
}

/// The full chain assemble -> structural checks -> decomposition -> constants
/// -> model bound -> exact norm, as one JSON document.
inline nlohmann::ordered_json full_report(const RunConfig& cfg, std::uint64_t seed) {
  const ModelSpec model = cfg.model_spec(cfg.gamma(), cfg.epsilon());
  const BasisSpec spec = cfg.basis_spec();
  const BuildOptions opt = cfg.build_options();
  const OperatorBundle ops = assemble_point(model, spec, opt);

  nlohmann::ordered_json j;
  j["seed"] = seed;
  j["model"] = to_string(cfg.model);
  j["gamma"] = model.gamma;
  j["epsilon"] = model.epsilon;
  j["basis"] = basis_json(*ops.basis);

  const StructuralReport st = verify_structural_assumptions(ops, cfg.tol_identity);
  nlohmann::ordered_json res;
  for (const auto& e : st.residuals) res[e.identity] = e.value;
  j["residuals"] = res;

  DecompositionOptions dopt;
  dopt.rank_tol = cfg.rank_tol;
  dopt.tol_identity = cfg.tol_identity;
  const Decomposition dec = build_decomposition(ops, dopt);
  j["dims"] = {dec.dim0(), dec.dim1(), dec.dim2()};

  const ConstantsReport c = compute_constants(cfg);
  j["constants"] = constants_json(c);
  const CoercivityReport coer = macroscopic_coercivity(dec, model, c.K_nu2.k2);
  j["a_analytic"] = coer.a_analytic;

  const PointResult p = evaluate_point(model, spec, opt, cfg.conv_tol, cfg.rank_tol);
  j["bound"] = bound_json(p.report);

  const double x = norm_X(dec);
  j["X"] = x;
  if (cfg.model == Model::langevin) {
    const LangevinBounds lb = langevin_bounds(ops, dec, c.K_nu2.k2);
    j["langevin_general"] = lb.general;
    j["corollary"] = lb.corollary;
  } else if (cfg.model == Model::boltzmann_rhmc) {
    j["rhmc_bound"] = rhmc_bound(ops, dec, c.K_nu2.k2).value;
  } else {
    j["ata_residual"] = adl_ata_residual(ops, dec);
    j["envelope"] = adl_envelope(model.gamma, model.epsilon);
  }
  if (cfg.model != Model::adaptive_langevin) {
    BasisSpec ps = spec;
    ps.n_p = 0;
    const BasisSet pb = build_basis(ps, cfg.potential, opt);
    j["proposition_ratio"] = check_proposition(x * x, configured_cc(cfg, pb, c.growth), c.K_nu2.k2);
  }

  const StaticPoincare sp = static_poincare_constants(dec);
  j["C1"] = sp.C1;
  j["C2"] = sp.C2;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  double worst = 0.0;
  for (int t = 0; t < cfg.suite; ++t) {
    Eigen::VectorXd f(ops.basis->dimension());
    for (auto& v : f) v = normal(rng);
    worst = std::max(worst, static_inequality_ratio(ops, sp, f));
  }
  j["static_poincare_max_ratio"] = worst;
  return j;
}

}  // namespace hypoco
