#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "hypoco/basis.hpp"
#include "hypoco/error.hpp"
#include "hypoco/models.hpp"
#include "hypoco/operators.hpp"
#include "hypoco/potential.hpp"

namespace hypoco {

/// Plain-text run configuration: one `key = value` per line, `#` starts a
/// comment. Mandatory keys: model, d, beta, gamma, mass.
struct RunConfig {
  Model model = Model::langevin;
  int d = 1;
  double beta = 1.0;
  std::vector<double> gammas{1.0};
  double mass = 1.0;
  std::vector<double> epsilons{1.0};
  std::string potential_text;
  Potential potential{1};
  int n_q = 8;
  int n_p = 8;
  int n_xi = 8;
  double tol_identity = 1e-10;
  double conv_tol = 0.01;
  double rank_tol = 1e-12;
  std::uint64_t seed = 0;
  long long max_dim = 20000;
  std::optional<double> c2;
  std::optional<double> C_LSI;
  std::optional<double> K;
  CaseKind prop_case = CaseKind::general;
  int suite = 100;
  std::string out, json, csv;

  double gamma() const { return gammas.front(); }
  double epsilon() const { return epsilons.front(); }

  BasisSpec basis_spec() const {
    BasisSpec s;
    s.d = d;
    s.n_q = n_q;
    s.n_p = n_p;
    s.beta = beta;
    s.mass = mass;
    s.has_xi = model == Model::adaptive_langevin;
    s.n_xi = s.has_xi ? n_xi : 0;
    return s;
  }

  ModelSpec model_spec(double gamma, double epsilon) const {
    ModelSpec m;
    m.model = model;
    m.gamma = gamma;
    m.epsilon = epsilon;
    m.beta = beta;
    m.mass = mass;
    m.d = d;
    m.potential = potential;
    return m;
  }

  BuildOptions build_options() const {
    BuildOptions o;
    o.max_dim = max_dim;
    o.tol_identity = tol_identity;
    return o;
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::optional<double> to_double(const std::string& s) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  const auto r = std::from_chars(s.data(), end, v);
  if (r.ec != std::errc() || r.ptr != end || !std::isfinite(v)) return std::nullopt;
  return v;
}

inline std::optional<long long> to_integer(const std::string& s) {
  long long v = 0;
  const auto* end = s.data() + s.size();
  const auto r = std::from_chars(s.data(), end, v);
  if (r.ec != std::errc() || r.ptr != end) return std::nullopt;
  return v;
}

}  // namespace detail

/// A single positive value, or "a:b:logN" / "a:b:linN" for N points from a to b.
inline std::vector<double> parse_range(const std::string& text, const std::string& key) {
  const std::string t = detail::trim(text);
  if (t.find(':') == std::string::npos) {
    const auto v = detail::to_double(t);
    if (!v) fail(ErrorKind::config, "config", key + ": '" + t + "' is not a number");
    return {*v};
  }
  std::vector<std::string> parts;
  std::stringstream ss(t);
  for (std::string p; std::getline(ss, p, ':');) parts.push_back(detail::trim(p));
  const bool log_spaced = parts.size() == 3 && parts[2].rfind("log", 0) == 0;
  const bool lin_spaced = parts.size() == 3 && parts[2].rfind("lin", 0) == 0;
  if (!log_spaced && !lin_spaced) fail(ErrorKind::config, "config", key + ": range must be a:b:logN or a:b:linN");
  const auto a = detail::to_double(parts[0]), b = detail::to_double(parts[1]);
  const auto n = detail::to_integer(parts[2].substr(3));
  if (!a || !b || !n || *n < 1) fail(ErrorKind::config, "config", key + ": malformed range '" + t + "'");
  if (log_spaced && (*a <= 0.0 || *b <= 0.0)) fail(ErrorKind::config, "config", key + ": log range needs positive ends");
  std::vector<double> out(*n);
  for (long long i = 0; i < *n; ++i) {
    const double f = *n == 1 ? 0.0 : double(i) / double(*n - 1);
    out[i] = log_spaced ? *a * std::pow(*b / *a, f) : *a + f * (*b - *a);
  }
  // pin the ends exactly so that a:b always contains a and b
  out.front() = *a;
  if (*n > 1) out.back() = *b;
  return out;
}

/// Parses key=value text; every problem is collected and reported together.
inline RunConfig parse_config_text(const std::string& text) {
  static const std::set<std::string> known = {
      "model", "d",      "beta",    "gamma",    "mass",   "epsilon", "potential", "n_q",  "n_p",
      "n_xi",  "tol_identity", "conv_tol", "rank_tol", "seed", "max_dim", "c2",        "C_LSI", "K",
      "case",  "suite",  "out",     "json",     "csv"};
  static const std::set<std::string> mandatory = {"model", "d", "beta", "gamma", "mass"};

  std::vector<std::string> errors;
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  int line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      errors.push_back("line " + std::to_string(line_no) + ": expected key = value");
      continue;
    }
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (!known.count(key)) {
      errors.push_back("line " + std::to_string(line_no) + ": unknown key '" + key + "'");
      continue;
    }
    if (kv.count(key)) errors.push_back("line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    kv[key] = value;
  }
  for (const auto& k : mandatory)
    if (!kv.count(k)) errors.push_back("missing mandatory key '" + k + "'");

  RunConfig c;
  auto number = [&](const std::string& key, double& dst, bool positive) {
    if (!kv.count(key)) return;
    const auto v = detail::to_double(kv[key]);
    if (!v) errors.push_back(key + ": '" + kv[key] + "' is not a number");
    else if (positive && !(*v > 0.0)) errors.push_back(key + " must be positive");
    else if (*v < 0.0) errors.push_back(key + " must be nonnegative");
    else dst = *v;
  };
  auto integer = [&](const std::string& key, auto& dst, long long lo) {
    if (!kv.count(key)) return;
    const auto v = detail::to_integer(kv[key]);
    if (!v) errors.push_back(key + ": '" + kv[key] + "' is not an integer");
    else if (*v < lo) errors.push_back(key + " must be at least " + std::to_string(lo));
    else dst = static_cast<std::remove_reference_t<decltype(dst)>>(*v);
  };
  auto optional_number = [&](const std::string& key, std::optional<double>& dst) {
    if (!kv.count(key)) return;
    double v = 0.0;
    const auto before = errors.size();
    number(key, v, false);
    if (errors.size() == before) dst = v;
  };
  auto range = [&](const std::string& key, std::vector<double>& dst) {
    if (!kv.count(key)) return;
    try {
      dst = parse_range(kv[key], key);
      for (double v : dst)
        if (!(v > 0.0)) {
          errors.push_back(key + " must be positive");
          break;
        }
    } catch (const Error& e) {
      errors.push_back(e.what());
    }
  };

  if (kv.count("model")) {
    try {
      c.model = parse_model(kv["model"]);
    } catch (const Error& e) {
      errors.push_back(e.what());
    }
  }
  integer("d", c.d, 1);
  number("beta", c.beta, true);
  range("gamma", c.gammas);
  number("mass", c.mass, true);
  range("epsilon", c.epsilons);
  integer("n_q", c.n_q, 1);
  integer("n_p", c.n_p, 1);
  integer("n_xi", c.n_xi, 1);
  number("tol_identity", c.tol_identity, true);
  number("conv_tol", c.conv_tol, true);
  number("rank_tol", c.rank_tol, true);
  integer("seed", c.seed, 0);
  integer("max_dim", c.max_dim, 1);
  integer("suite", c.suite, 1);
  optional_number("c2", c.c2);
  if (c.c2 && *c.c2 > 1.0) errors.push_back("c2 must lie in [0,1]");
  optional_number("C_LSI", c.C_LSI);
  if (c.C_LSI && !(*c.C_LSI > 0.0)) errors.push_back("C_LSI must be positive");
  optional_number("K", c.K);
  if (kv.count("case")) {
    try {
      c.prop_case = parse_case(kv["case"]);
    } catch (const Error& e) {
      errors.push_back(e.what());
    }
  }
  if (c.prop_case == CaseKind::hessian_lower_bound && !c.K) errors.push_back("case hessian_lower_bound needs K");
  if (c.prop_case == CaseKind::lsi && !c.C_LSI) errors.push_back("case lsi needs C_LSI");
  if (kv.count("out")) c.out = kv["out"];
  if (kv.count("json")) c.json = kv["json"];
  if (kv.count("csv")) c.csv = kv["csv"];
  c.potential = Potential(c.d);
  if (kv.count("potential")) {
    c.potential_text = kv["potential"];
    try {
      c.potential = Potential::parse(c.potential_text, c.d);
    } catch (const Error& e) {
      errors.push_back(e.what());
    }
  }

  if (!errors.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& e : errors) msg += "\n  " + e;
    fail(ErrorKind::config, "config", msg);
  }
  return c;
}

inline RunConfig parse_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) fail(ErrorKind::config, "config", "cannot open '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config_text(ss.str());
}

}  // namespace hypoco
