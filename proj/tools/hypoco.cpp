// hypoco: command-line driver for assembling generators, checking the
// structural identities and evaluating resolvent bounds.
//
// Exit codes: 0 all checks pass, 1 invariant violation, 2 configuration
// error, 3 numerical failure or unconverged report.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "hypoco/pipeline.hpp"

using namespace hypoco;

namespace {

struct Flags {
  std::string config, out, json, csv, ops, gamma, epsilon_range;
  int jobs = 1;
  long long seed = -1;
  int suite = 0;
  long long max_dim = 0;
};

RunConfig load(const Flags& f) {
  if (f.config.empty()) fail(ErrorKind::config, "cli", "--config is required");
  RunConfig c = parse_config(f.config);
  if (std::getenv("HYPOCO_MAX_DIM")) c.max_dim = BuildOptions::from_environment().max_dim;
  if (f.max_dim > 0) c.max_dim = f.max_dim;
  if (!f.gamma.empty()) c.gammas = parse_range(f.gamma, "--gamma");
  if (!f.epsilon_range.empty()) c.epsilons = parse_range(f.epsilon_range, "--epsilon-range");
  for (double g : c.gammas)
    if (!(g > 0.0)) fail(ErrorKind::config, "cli", "gamma must be positive");
  for (double e : c.epsilons)
    if (!(e > 0.0)) fail(ErrorKind::config, "cli", "epsilon must be positive");
  if (f.seed >= 0) c.seed = static_cast<std::uint64_t>(f.seed);
  if (f.suite > 0) c.suite = f.suite;
  return c;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::config, "cli", "cannot write '" + path + "'");
  out << text;
}

void emit_json(const std::string& path, const nlohmann::ordered_json& j) {
  const std::string text = j.dump(2) + "\n";
  if (path.empty())
    std::cout << text;
  else
    write_text(path, text);
}

std::string pick(const std::string& flag, const std::string& from_config) { return flag.empty() ? from_config : flag; }

/// Exit status of a bound report: soundness is only asserted where the
/// structural assumptions are all enforced (not for adaptive Langevin).
int report_status(const Model m, const BoundReport& r) {
  if (r.converged && m != Model::adaptive_langevin && r.margin < 1.0) {
    std::cerr << "invariant violation: bound/exact = " << fmt(r.margin) << " < 1\n";
    return 1;
  }
  return r.converged ? 0 : 3;
}

int cmd_assemble(const Flags& f) {
  const RunConfig c = load(f);
  const OperatorBundle ops = assemble_point(c.model_spec(c.gamma(), c.epsilon()), c.basis_spec(), c.build_options());
  const std::string out = pick(f.out, c.out);
  if (out.empty()) fail(ErrorKind::config, "cli", "assemble needs --out");
  save_bundle(out, ops);
  std::cout << "wrote " << out << " (" << to_string(c.model) << ", dimension " << ops.basis->dimension() << ")\n";
  const std::string json = pick(f.json, c.json);
  if (!json.empty()) {
    nlohmann::ordered_json j;
    j["model"] = to_string(c.model);
    j["gamma"] = ops.model.gamma;
    j["epsilon"] = ops.model.epsilon;
    j["basis"] = basis_json(*ops.basis);
    for (const SparseOperator* op : {&ops.A, &ops.S, &ops.Pi0, &ops.R}) j["nnz"][op->name] = op->matrix.nonZeros();
    emit_json(json, j);
  }
  return 0;
}

int cmd_verify(const Flags& f) {
  const RunConfig c = load(f);
  const ModelSpec model = c.model_spec(c.gamma(), c.epsilon());
  const OperatorBundle ops = assemble_point(model, c.basis_spec(), c.build_options());
  const StructuralReport st = verify_structural_assumptions(ops, c.tol_identity);
  std::printf("%-24s %-24s %s\n", "identity", "residual", "enforced");
  for (const auto& e : st.residuals)
    std::printf("%-24s %-24s %s\n", e.identity.c_str(), fmt(e.value).c_str(), e.enforced ? "yes" : "no");
  std::printf("s numeric %s, analytic %s\n", fmt(st.s_numeric).c_str(), fmt(st.s_analytic).c_str());

  DecompositionOptions dopt;
  dopt.rank_tol = c.rank_tol;
  dopt.tol_identity = c.tol_identity;
  const Decomposition dec = build_decomposition(ops, dopt);
  std::printf("dim H0 %lld, H1 %lld, H2 %lld\n", (long long)dec.dim0(), (long long)dec.dim1(), (long long)dec.dim2());
  const PoincareResult k = poincare_constant_position(*ops.basis);
  const CoercivityReport coer = macroscopic_coercivity(dec, model, k.k2, c.tol_identity);
  std::printf("a %s (analytic lower bound %s)\n", fmt(coer.a).c_str(), fmt(coer.a_analytic).c_str());
  if (dec.has_blocks) {
    const DecompositionChecks dc = check_decomposition(dec);
    const double worst = std::max({dc.pi1_idempotent, dc.pi1_symmetric, dc.pi1_fixes_A, dc.l11_symmetric});
    std::printf("projector residual %s\n", fmt(worst).c_str());
    if (!(worst < c.tol_identity)) fail(ErrorKind::invariant, "schur", "projector identities fail");
  }
  const std::string json = pick(f.json, c.json);
  if (!json.empty()) {
    nlohmann::ordered_json j;
    for (const auto& e : st.residuals) j["residuals"][e.identity] = e.value;
    j["s_numeric"] = st.s_numeric;
    j["s_analytic"] = st.s_analytic;
    j["a"] = coer.a;
    j["a_analytic"] = coer.a_analytic;
    emit_json(json, j);
  }
  return 0;
}

int cmd_bound(const Flags& f) {
  PointResult p;
  if (!f.ops.empty()) {
    RunConfig c;
    if (!f.config.empty()) c = load(f);
    BuildOptions opt = BuildOptions::from_environment();
    if (f.max_dim > 0) opt.max_dim = f.max_dim;
    const OperatorBundle ops = load_bundle(f.ops, opt);
    p.model = ops.model;
    p.spec = ops.basis->spec();
    p.report = evaluate_bound(ops, c.tol_identity, c.rank_tol);
    p.convergence = check_convergence(p.model, p.spec, p.report, opt, c.conv_tol, c.rank_tol);
    p.report.converged = p.convergence.converged;
  } else {
    const RunConfig c = load(f);
    p = evaluate_point(c.model_spec(c.gamma(), c.epsilon()), c.basis_spec(), c.build_options(), c.conv_tol, c.rank_tol);
  }
  emit_json(f.json, bound_json(p.report));
  return report_status(p.model.model, p.report);
}

int cmd_constants(const Flags& f) {
  const RunConfig c = load(f);
  emit_json(pick(f.json, c.json), constants_json(compute_constants(c)));
  return 0;
}

int cmd_lemmas(const Flags& f) {
  const RunConfig c = load(f);
  const LemmaSuiteReport r = run_lemma_suite(c, c.seed, c.suite);
  emit_json(pick(f.json, c.json), lemma_json(r));
  std::printf("max ratios: Villani %s, H2 control %s; max Bochner residual %s\n", fmt(r.max_villani).c_str(),
              fmt(r.max_controlH2).c_str(), fmt(r.max_bochner_residual).c_str());
  return 0;
}

int cmd_sweep(const Flags& f) {
  const RunConfig c = load(f);
  const std::vector<PointResult> rows = sweep(c, f.jobs);
  const std::string csv = sweep_csv(rows);
  const std::string path = pick(f.csv, c.csv);
  if (path.empty())
    std::cout << csv;
  else
    write_text(path, csv);
  int status = 0;
  for (const auto& p : rows) {
    const int s = report_status(p.model.model, p.report);
    if (s == 1 || (s == 3 && status == 0)) status = s;
  }
  return status;
}

int cmd_report(const Flags& f) {
  const RunConfig c = load(f);
  emit_json(pick(f.json, c.json), full_report(c, c.seed));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hypocoercive resolvent bounds in a Fourier-Hermite Galerkin basis"};
  app.require_subcommand(1);
  Flags f;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", f.config, "key=value configuration file");
    sub->add_option("--max-dim", f.max_dim, "override the basis dimension guard");
  };
  auto* assemble = app.add_subcommand("assemble", "assemble operators and write a HYPO1 bundle");
  add_common(assemble);
  assemble->add_option("--out", f.out, "bundle path");
  assemble->add_option("--json", f.json, "metadata JSON path");

  auto* verify = app.add_subcommand("verify", "check the structural identities and the decomposition");
  add_common(verify);
  verify->add_option("--json", f.json, "residual JSON path");

  auto* bound = app.add_subcommand("bound", "evaluate the resolvent bound against the exact norm");
  add_common(bound);
  bound->add_option("--ops", f.ops, "HYPO1 operator bundle");
  bound->add_option("--json", f.json, "report path (stdout if omitted)");

  auto* constants = app.add_subcommand("constants", "Poincare and growth constants");
  add_common(constants);
  constants->add_option("--json", f.json, "report path");

  auto* lemmas = app.add_subcommand("lemmas", "randomized lemma suite on position functions");
  add_common(lemmas);
  lemmas->add_option("--json", f.json, "report path");
  lemmas->add_option("--seed", f.seed, "random seed");
  lemmas->add_option("--suite", f.suite, "random functions per lemma");

  auto* sweep = app.add_subcommand("sweep", "bound and exact norm over a friction (and epsilon) grid");
  add_common(sweep);
  sweep->add_option("--gamma", f.gamma, "value or a:b:logN / a:b:linN");
  sweep->add_option("--epsilon-range", f.epsilon_range, "value or range, adaptive Langevin only");
  sweep->add_option("--csv", f.csv, "CSV path (stdout if omitted)");
  sweep->add_option("--jobs", f.jobs, "worker threads")->check(CLI::PositiveNumber);

  auto* report = app.add_subcommand("report", "full pipeline report as JSON");
  add_common(report);
  report->add_option("--json", f.json, "report path");
  report->add_option("--seed", f.seed, "random seed");
  report->add_option("--suite", f.suite, "random functions for the static inequality");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*assemble) return cmd_assemble(f);
    if (*verify) return cmd_verify(f);
    if (*bound) return cmd_bound(f);
    if (*constants) return cmd_constants(f);
    if (*lemmas) return cmd_lemmas(f);
    if (*sweep) return cmd_sweep(f);
    if (*report) return cmd_report(f);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
