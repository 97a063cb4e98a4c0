#pragma once

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "json.hpp"

#include "aarc/libsvm.hpp"
#include "aarc/objective.hpp"
#include "aarc/solvers.hpp"

namespace aarc::bench {

namespace fs = std::filesystem;
using json = nlohmann::json;

inline constexpr const char *kTraceHeader =
    "phase,outer_index,successful,l,f,grad_norm,sigma,varsigma,wall_time_s,values,gradients,hvps,fd_gradients";

// Shortest text that reads back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc())
    throw Error("format_double: conversion failed");
  return std::string(buf, end);
}

inline double parse_double(std::string_view s, const std::string &what) {
  double v = 0.0;
  if (!s.empty() && s.front() == '+')
    s.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw Error("invalid number for " + what + ": '" + std::string(s) + "'");
  return v;
}

inline long parse_integer(std::string_view s, const std::string &what) {
  long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw Error("invalid integer for " + what + ": '" + std::string(s) + "'");
  return v;
}

inline bool parse_bool(const std::string &s, const std::string &what) {
  if (s == "1" || s == "true" || s == "on" || s == "yes")
    return true;
  if (s == "0" || s == "false" || s == "off" || s == "no")
    return false;
  throw Error("invalid boolean for " + what + ": '" + s + "'");
}

inline std::vector<std::string> split(const std::string &s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep))
    if (!cur.empty())
      out.push_back(cur);
  return out;
}

// ---------------------------------------------------------------------------
// Problems

/// Strongly convex quadratic with eigenvalues log-spaced in [1, cond] and a random basis.
inline SyntheticInstance make_conditioned_quadratic(int d, double cond, std::uint64_t seed) {
  if (d < 1 || !(cond >= 1.0))
    throw Error("conditioned quadratic: need d >= 1 and cond >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix G(d, d);
  for (int j = 0; j < d; ++j)
    for (int i = 0; i < d; ++i)
      G(i, j) = normal(rng);
  Eigen::HouseholderQR<Matrix> qr(G);
  Matrix Q = qr.householderQ();
  Vector eig(d);
  for (int i = 0; i < d; ++i)
    eig[i] = d == 1 ? 1.0 : std::pow(cond, double(i) / double(d - 1));
  SyntheticParams p;
  p.dimension = d;
  p.A = Q * eig.asDiagonal() * Q.transpose();
  p.A = 0.5 * (p.A + p.A.transpose()).eval();
  p.b.resize(d);
  for (int i = 0; i < d; ++i)
    p.b[i] = normal(rng);
  return make_synthetic(SyntheticKind::quadratic, p);
}

/// Classification data with uniform features and labels from a noisy random hyperplane.
inline Dataset make_surrogate_dataset(int n, int d, std::uint64_t seed) {
  if (n < 1 || d < 1)
    throw Error("surrogate dataset: need n >= 1 and d >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector w(d);
  for (int j = 0; j < d; ++j)
    w[j] = normal(rng);
  Dataset ds;
  ds.samples.resize(n, d);
  ds.labels.resize(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j)
      ds.samples(i, j) = unif(rng);
    const double m = ds.samples.row(i).dot(w) + 0.5 * normal(rng);
    ds.labels[i] = m >= 0.0 ? 1.0 : -1.0;
  }
  return ds;
}

struct Problem {
  std::shared_ptr<const Objective> oracle;
  std::optional<TestFunctionMeta> meta;
  Eigen::Index n_samples = 0;
};

/// `path` (LIBSVM text or gzip) or `synthetic:<kind>[:key=value,...]` with kinds
/// quadratic (d, cond, seed), log_sum_exp (d, seed), quartic (d, radius) and
/// logistic (n, d, seed).
inline Problem load_problem(const std::string &data, double lambda, NormalizeMode mode = NormalizeMode::none) {
  Problem out;
  const std::string prefix = "synthetic:";
  if (data.rfind(prefix, 0) != 0) {
    Dataset ds = normalize(read_libsvm_file(data), mode);
    out.n_samples = ds.n();
    out.oracle = make_logistic(std::move(ds), lambda);
    return out;
  }
  std::string rest = data.substr(prefix.size());
  const auto colon = rest.find(':');
  const std::string kind = rest.substr(0, colon);
  std::map<std::string, std::string> kv;
  if (colon != std::string::npos)
    for (const auto &item : split(rest.substr(colon + 1), ',')) {
      const auto eq = item.find('=');
      if (eq == std::string::npos)
        throw Error("synthetic spec: expected key=value, got '" + item + "'");
      kv[item.substr(0, eq)] = item.substr(eq + 1);
    }
  auto take = [&](const std::string &key, const std::string &fallback) {
    auto it = kv.find(key);
    if (it == kv.end())
      return fallback;
    std::string v = it->second;
    kv.erase(it);
    return v;
  };
  const int d = int(parse_integer(take("d", "10"), "d"));
  if (kind == "quadratic") {
    const double cond = parse_double(take("cond", "100"), "cond");
    const auto seed = std::uint64_t(parse_integer(take("seed", "0"), "seed"));
    auto inst = make_conditioned_quadratic(d, cond, seed);
    out.oracle = inst.oracle;
    out.meta = inst.meta;
  } else if (kind == "log_sum_exp") {
    const auto seed = std::uint64_t(parse_integer(take("seed", "0"), "seed"));
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    SyntheticParams p;
    p.dimension = d;
    p.center.resize(d);
    for (int i = 0; i < d; ++i)
      p.center[i] = normal(rng);
    auto inst = make_synthetic(SyntheticKind::log_sum_exp, p);
    out.oracle = inst.oracle;
    out.meta = inst.meta;
  } else if (kind == "quartic") {
    SyntheticParams p;
    p.dimension = d;
    p.box_radius = parse_double(take("radius", "1"), "radius");
    auto inst = make_synthetic(SyntheticKind::separable_convex_quartic, p);
    out.oracle = inst.oracle;
    out.meta = inst.meta;
  } else if (kind == "logistic") {
    const int n = int(parse_integer(take("n", "208"), "n"));
    const auto seed = std::uint64_t(parse_integer(take("seed", "0"), "seed"));
    Dataset ds = normalize(make_surrogate_dataset(n, d, seed), mode);
    out.n_samples = ds.n();
    out.oracle = make_logistic(std::move(ds), lambda);
  } else {
    throw Error("unknown synthetic kind '" + kind + "'");
  }
  if (!kv.empty())
    throw Error("synthetic spec: unknown key '" + kv.begin()->first + "' for kind " + kind);
  return out;
}

// ---------------------------------------------------------------------------
// Initial points

struct InitSpec {
  enum class Kind { far_normal, zeros, file } kind = Kind::far_normal;
  double variance = 5000.0;
  std::string path;
};

inline InitSpec parse_init(const std::string &s) {
  InitSpec out;
  if (s == "zeros") {
    out.kind = InitSpec::Kind::zeros;
  } else if (s.rfind("far_normal", 0) == 0) {
    out.kind = InitSpec::Kind::far_normal;
    if (s.size() > 10) {
      if (s[10] != ':')
        throw Error("init: expected far_normal:<variance>");
      out.variance = parse_double(s.substr(11), "init variance");
    }
    if (!(out.variance > 0.0))
      throw Error("init: variance must be positive");
  } else if (s.rfind("file:", 0) == 0) {
    out.kind = InitSpec::Kind::file;
    out.path = s.substr(5);
  } else {
    throw Error("init: expected far_normal[:variance], zeros or file:<path>, got '" + s + "'");
  }
  return out;
}

inline std::string to_string(const InitSpec &s) {
  switch (s.kind) {
  case InitSpec::Kind::far_normal: return "far_normal:" + format_double(s.variance);
  case InitSpec::Kind::zeros: return "zeros";
  case InitSpec::Kind::file: return "file:" + s.path;
  }
  return "?";
}

inline Vector make_initial_point(const InitSpec &s, Eigen::Index d, std::uint64_t seed) {
  switch (s.kind) {
  case InitSpec::Kind::zeros: return Vector::Zero(d);
  case InitSpec::Kind::far_normal: {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, std::sqrt(s.variance));
    Vector x(d);
    for (Eigen::Index i = 0; i < d; ++i)
      x[i] = normal(rng);
    return x;
  }
  case InitSpec::Kind::file: {
    std::ifstream in(s.path);
    if (!in)
      throw Error("init: cannot open " + s.path);
    std::vector<double> v;
    std::string tok;
    while (in >> tok)
      v.push_back(parse_double(tok, "init file entry"));
    if (Eigen::Index(v.size()) != d)
      throw DimensionError("init: file has " + std::to_string(v.size()) + " entries, problem dimension is " +
                           std::to_string(d));
    return Eigen::Map<Vector>(v.data(), d);
  }
  }
  return Vector::Zero(d);
}

// ---------------------------------------------------------------------------
// Configuration

struct RunOptions {
  SolverConfig cfg;
  int switch_window = 10;
  double switch_ratio = 0.1;
  double agd_step = 1.0;
};

namespace detail {

inline const char *to_string(OnSuccessSigma r) {
  switch (r) {
  case OnSuccessSigma::shrink_by_gamma1: return "shrink_by_gamma1";
  case OnSuccessSigma::keep: return "keep";
  case OnSuccessSigma::reset_to_min: return "reset_to_min";
  }
  return "?";
}

inline const char *to_string(SubsolverKind k) {
  return k == SubsolverKind::lanczos ? "lanczos" : "gradient_descent";
}

struct Field {
  std::function<void(RunOptions &, const std::string &)> set;
  std::function<json(const RunOptions &)> get;
};

inline Field real_field(double SolverConfig::*m) {
  return {[m](RunOptions &o, const std::string &v) { o.cfg.*m = parse_double(v, "override"); },
          [m](const RunOptions &o) { return json(o.cfg.*m); }};
}
inline Field int_field(int SolverConfig::*m) {
  return {[m](RunOptions &o, const std::string &v) { o.cfg.*m = int(parse_integer(v, "override")); },
          [m](const RunOptions &o) { return json(o.cfg.*m); }};
}
inline Field bool_field(bool SolverConfig::*m) {
  return {[m](RunOptions &o, const std::string &v) { o.cfg.*m = parse_bool(v, "override"); },
          [m](const RunOptions &o) { return json(o.cfg.*m); }};
}
inline Field fd_real(double FDHessianConfig::*m) {
  return {[m](RunOptions &o, const std::string &v) { o.cfg.fd.*m = parse_double(v, "override"); },
          [m](const RunOptions &o) { return json(o.cfg.fd.*m); }};
}

inline const std::map<std::string, Field> &fields() {
  static const std::map<std::string, Field> table = [] {
    std::map<std::string, Field> t;
    t["gamma1"] = real_field(&SolverConfig::gamma1);
    t["gamma2"] = real_field(&SolverConfig::gamma2);
    t["gamma3"] = real_field(&SolverConfig::gamma3);
    t["eta"] = real_field(&SolverConfig::eta);
    t["sigma_min"] = real_field(&SolverConfig::sigma_min);
    t["sigma0"] = real_field(&SolverConfig::sigma0);
    t["varsigma1"] = real_field(&SolverConfig::varsigma1);
    t["kappa_theta"] = real_field(&SolverConfig::kappa_theta);
    t["grad_tol"] = real_field(&SolverConfig::grad_tol);
    t["max_outer"] = int_field(&SolverConfig::max_outer);
    t["max_escalations_per_success"] = int_field(&SolverConfig::max_escalations_per_success);
    t["lanczos_max_dim"] = int_field(&SolverConfig::lanczos_max_dim);
    t["max_successes"] = int_field(&SolverConfig::max_successes);
    t["linear_term_at_previous_point"] = bool_field(&SolverConfig::linear_term_at_previous_point);
    t["enforce_stationarity"] = bool_field(&SolverConfig::enforce_stationarity);
    t["escalation_rounding"] = real_field(&SolverConfig::escalation_rounding);
    t["fd.kappa_c"] = fd_real(&FDHessianConfig::kappa_c);
    t["fd.kappa_hs"] = fd_real(&FDHessianConfig::kappa_hs);
    t["fd.gamma4"] = fd_real(&FDHessianConfig::gamma4);
    t["fd.h_init"] = fd_real(&FDHessianConfig::h_init);
    t["fd.psd_tol"] = fd_real(&FDHessianConfig::psd_tol);
    t["fd.max_shrinks"] = {
        [](RunOptions &o, const std::string &v) { o.cfg.fd.max_shrinks = int(parse_integer(v, "override")); },
        [](const RunOptions &o) { return json(o.cfg.fd.max_shrinks); }};
    t["on_success_sigma"] = {
        [](RunOptions &o, const std::string &v) {
          if (v == "shrink_by_gamma1")
            o.cfg.on_success_sigma = OnSuccessSigma::shrink_by_gamma1;
          else if (v == "keep")
            o.cfg.on_success_sigma = OnSuccessSigma::keep;
          else if (v == "reset_to_min")
            o.cfg.on_success_sigma = OnSuccessSigma::reset_to_min;
          else
            throw Error("on_success_sigma: expected shrink_by_gamma1, keep or reset_to_min");
        },
        [](const RunOptions &o) { return json(to_string(o.cfg.on_success_sigma)); }};
    t["subsolver"] = {
        [](RunOptions &o, const std::string &v) {
          if (v == "lanczos")
            o.cfg.subsolver = SubsolverKind::lanczos;
          else if (v == "gradient_descent")
            o.cfg.subsolver = SubsolverKind::gradient_descent;
          else
            throw Error("subsolver: expected lanczos or gradient_descent");
        },
        [](const RunOptions &o) { return json(to_string(o.cfg.subsolver)); }};
    t["switch_window"] = {
        [](RunOptions &o, const std::string &v) { o.switch_window = int(parse_integer(v, "switch_window")); },
        [](const RunOptions &o) { return json(o.switch_window); }};
    t["switch_ratio"] = {
        [](RunOptions &o, const std::string &v) { o.switch_ratio = parse_double(v, "switch_ratio"); },
        [](const RunOptions &o) { return json(o.switch_ratio); }};
    t["agd_step"] = {[](RunOptions &o, const std::string &v) { o.agd_step = parse_double(v, "agd_step"); },
                     [](const RunOptions &o) { return json(o.agd_step); }};
    return t;
  }();
  return table;
}

} // namespace detail

inline void apply_override(RunOptions &o, const std::string &key, const std::string &value) {
  const auto &t = detail::fields();
  auto it = t.find(key);
  if (it == t.end())
    throw Error("unknown config key '" + key + "'");
  it->second.set(o, value);
}

/// Applies `key=value` strings in order and validates the result.
inline RunOptions resolve_options(const std::vector<std::string> &overrides) {
  RunOptions o;
  for (const auto &kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0)
      throw Error("override must look like key=value, got '" + kv + "'");
    apply_override(o, kv.substr(0, eq), kv.substr(eq + 1));
  }
  o.cfg.validate();
  if (o.switch_window < 0 || !(o.switch_ratio >= 0.0) || !(o.agd_step > 0.0))
    throw Error("config: switch_window, switch_ratio and agd_step out of range");
  return o;
}

inline json options_to_json(const RunOptions &o) {
  json j = json::object();
  for (const auto &[key, field] : detail::fields())
    j[key] = field.get(o);
  return j;
}

// ---------------------------------------------------------------------------
// Solvers

using SolverFn = std::function<SolverRun(const Objective &, const Vector &, const RunOptions &)>;

inline const std::map<std::string, SolverFn> &solver_registry() {
  static const std::map<std::string, SolverFn> reg = {
      {"aarc_hybrid",
       [](const Objective &f, const Vector &x0, const RunOptions &o) {
         return solve_hybrid_aarc(f, x0, o.cfg, o.switch_window, o.switch_ratio);
       }},
      {"aarc", [](const Objective &f, const Vector &x0, const RunOptions &o) { return solve_aarc(f, x0, o.cfg); }},
      {"aarcq", [](const Objective &f, const Vector &x0, const RunOptions &o) { return solve_aarcq(f, x0, o.cfg); }},
      {"arc",
       [](const Objective &f, const Vector &x0, const RunOptions &o) { return solve_arc_baseline(f, x0, o.cfg); }},
      {"aagd", [](const Objective &f, const Vector &x0, const RunOptions &o) { return solve_aagd(f, x0, o.cfg); }},
      {"agd",
       [](const Objective &f, const Vector &x0, const RunOptions &o) {
         return solve_agd_baseline(f, x0, o.agd_step, o.cfg.max_outer, o.cfg.grad_tol);
       }},
  };
  return reg;
}

inline std::string canonical_solver(std::string name) {
  std::transform(name.begin(), name.end(), name.begin(), [](unsigned char c) { return char(std::tolower(c)); });
  std::replace(name.begin(), name.end(), '-', '_');
  if (name == "hybrid" || name == "hybrid_aarc")
    name = "aarc_hybrid";
  else if (name == "aarc_q")
    name = "aarcq";
  if (!solver_registry().count(name))
    throw Error("unknown solver '" + name + "' (known: aarc_hybrid, aarc, aarcq, arc, aagd, agd)");
  return name;
}

// ---------------------------------------------------------------------------
// Output

inline std::string trace_csv(const std::vector<TraceRecord> &trace, bool with_time = true) {
  std::string out = kTraceHeader;
  out += '\n';
  for (const auto &r : trace) {
    out += to_string(r.phase);
    out += ',' + std::to_string(r.outer_index);
    out += r.successful ? ",1" : ",0";
    out += ',' + std::to_string(r.l);
    out += ',' + format_double(r.f);
    out += ',' + format_double(r.grad_norm);
    out += ',' + format_double(r.sigma);
    out += ',';
    if (r.varsigma)
      out += format_double(*r.varsigma);
    out += ',' + format_double(with_time ? r.wall_time_s : 0.0);
    out += ',' + std::to_string(r.calls.values);
    out += ',' + std::to_string(r.calls.gradients);
    out += ',' + std::to_string(r.calls.hvps);
    out += ',' + std::to_string(r.calls.fd_gradients);
    out += '\n';
  }
  return out;
}

struct CsvRow {
  std::string phase;
  long outer_index = 0;
  bool successful = false;
  int l = 0;
  double f = 0.0, grad_norm = 0.0, sigma = 0.0;
  std::optional<double> varsigma;
  double wall_time_s = 0.0;
  OracleCalls calls;
};

inline std::vector<CsvRow> read_trace_csv(const fs::path &path) {
  std::ifstream in(path);
  if (!in)
    throw Error("cannot open trace " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kTraceHeader)
    throw Error("unexpected trace header in " + path.string());
  std::vector<CsvRow> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty())
      continue;
    std::vector<std::string> c;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ','))
      c.push_back(cell);
    if (line.back() == ',')
      c.emplace_back();
    if (c.size() != 13)
      throw ParseError("expected 13 columns", lineno, 1);
    CsvRow r;
    r.phase = c[0];
    r.outer_index = parse_integer(c[1], "outer_index");
    r.successful = c[2] == "1";
    r.l = int(parse_integer(c[3], "l"));
    r.f = parse_double(c[4], "f");
    r.grad_norm = parse_double(c[5], "grad_norm");
    r.sigma = parse_double(c[6], "sigma");
    if (!c[7].empty())
      r.varsigma = parse_double(c[7], "varsigma");
    r.wall_time_s = parse_double(c[8], "wall_time_s");
    r.calls.values = parse_integer(c[9], "values");
    r.calls.gradients = parse_integer(c[10], "gradients");
    r.calls.hvps = parse_integer(c[11], "hvps");
    r.calls.fd_gradients = parse_integer(c[12], "fd_gradients");
    rows.push_back(std::move(r));
  }
  return rows;
}

inline json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

struct BenchSpec {
  std::string data;
  double lambda = 1e-5;
  NormalizeMode normalize = NormalizeMode::none;
  std::vector<std::string> solvers;
  std::uint64_t seed = 1;
  InitSpec init;
  std::vector<std::string> overrides;
  fs::path output_dir = ".";
  bool record_wall_time = true;
  int threads = 0;  // 0: BENCH_THREADS, else hardware concurrency
};

inline json summary_json(const std::string &solver, const SolverRun &run, const BenchSpec &spec,
                         const RunOptions &opts, const Problem &problem) {
  json j;
  j["solver"] = solver;
  j["status"] = to_string(run.status);
  j["message"] = run.message;
  j["f_final"] = finite_or_null(run.f_final);
  j["grad_norm_final"] = finite_or_null(run.grad_norm_final);
  j["T1"] = run.T1;
  j["T2"] = run.T2;
  j["T3"] = run.T3;
  j["T4"] = run.T4;
  j["l"] = run.l;
  j["successes"] = run.successes;
  j["iterations"] = run.iterations;
  j["wall_time_s"] = spec.record_wall_time ? run.wall_time_s : 0.0;
  j["oracle_calls"] = {{"values", run.calls.values},
                       {"gradients", run.calls.gradients},
                       {"hvps", run.calls.hvps},
                       {"fd_gradients", run.calls.fd_gradients}};
  j["config"] = options_to_json(opts);
  j["seed"] = spec.seed;
  j["dataset"] = spec.data;
  j["lambda"] = spec.lambda;
  j["normalize"] = to_string(spec.normalize);
  j["init"] = to_string(spec.init);
  j["dimension"] = problem.oracle->dimension();
  j["n_samples"] = problem.n_samples;
  if (problem.meta && problem.meta->known_fstar)
    j["fstar"] = *problem.meta->known_fstar;
  j["trace"] = solver + ".csv";
  j["x_final"] = std::vector<double>(run.x_final.data(), run.x_final.data() + run.x_final.size());
  return j;
}

inline void write_file(const fs::path &path, const std::string &text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw Error("cannot write " + path.string());
  out << text;
  if (!out.flush())
    throw Error("write failed for " + path.string());
}

inline int worker_count(int requested, std::size_t jobs) {
  int n = requested;
  if (n <= 0)
    if (const char *env = std::getenv("BENCH_THREADS"))
      n = std::atoi(env);
  if (n <= 0)
    n = int(std::max(1u, std::thread::hardware_concurrency()));
  return std::max(1, std::min<int>(n, int(jobs)));
}

/// Runs every requested solver from a shared initial point; writes <solver>.csv and
/// <solver>.json per solver and returns the written paths.
inline std::vector<fs::path> run_bench(const BenchSpec &spec) {
  if (spec.solvers.empty())
    throw Error("bench: no solvers requested");
  std::vector<std::string> names;
  for (const auto &s : spec.solvers)
    names.push_back(canonical_solver(s));
  const RunOptions opts = resolve_options(spec.overrides);
  const Problem problem = load_problem(spec.data, spec.lambda, spec.normalize);
  const Vector x0 = make_initial_point(spec.init, problem.oracle->dimension(), spec.seed);

  std::error_code ec;
  fs::create_directories(spec.output_dir, ec);
  if (ec || !fs::is_directory(spec.output_dir))
    throw Error("cannot create output directory " + spec.output_dir.string());

  std::vector<fs::path> written(2 * names.size());
  std::vector<std::string> errors(names.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < names.size();) {
      try {
        const SolverRun run = solver_registry().at(names[i])(*problem.oracle, x0, opts);
        const fs::path csv = spec.output_dir / (names[i] + ".csv");
        const fs::path js = spec.output_dir / (names[i] + ".json");
        write_file(csv, trace_csv(run.trace, spec.record_wall_time));
        write_file(js, summary_json(names[i], run, spec, opts, problem).dump(2) + "\n");
        written[2 * i] = csv;
        written[2 * i + 1] = js;
      } catch (const std::exception &e) {
        errors[i] = names[i] + ": " + e.what();
      }
    }
  };
  const int workers = worker_count(spec.threads, names.size());
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w)
    pool.emplace_back(work);
  work();
  for (auto &t : pool)
    t.join();
  for (const auto &e : errors)
    if (!e.empty())
      throw Error("bench: " + e);
  return written;
}

// ---------------------------------------------------------------------------
// Rate report

struct RateFit {
  double slope = 0.0;
  std::size_t points = 0;
};

/// Least-squares slope of log(gap) against log(l) over the upper half of the log(l) range
/// covered by the points with positive gap.
inline RateFit tail_slope(const std::vector<std::pair<double, double>> &l_gap) {
  std::vector<std::pair<double, double>> pts;
  for (const auto &[l, gap] : l_gap)
    if (l > 0.0 && gap > 0.0)
      pts.emplace_back(std::log(l), std::log(gap));
  RateFit fit;
  if (pts.size() < 2)
    return fit;
  double lo = pts.front().first, hi = lo;
  for (const auto &p : pts) {
    lo = std::min(lo, p.first);
    hi = std::max(hi, p.first);
  }
  const double cut = 0.5 * (lo + hi);
  double mx = 0.0, my = 0.0;
  std::size_t m = 0;
  for (const auto &p : pts)
    if (p.first >= cut) {
      mx += p.first;
      my += p.second;
      ++m;
    }
  if (m < 2)
    return fit;
  mx /= double(m);
  my /= double(m);
  double sxx = 0.0, sxy = 0.0;
  for (const auto &p : pts)
    if (p.first >= cut) {
      sxx += (p.first - mx) * (p.first - mx);
      sxy += (p.first - mx) * (p.second - my);
    }
  fit.points = m;
  fit.slope = sxx > 0.0 ? sxy / sxx : 0.0;
  return fit;
}

/// (l, f) at every successful row; for accelerated runs f is f(x-bar_l).
inline std::vector<std::pair<double, double>> success_sequence(const std::vector<CsvRow> &rows) {
  std::vector<std::pair<double, double>> out;
  for (const auto &r : rows)
    if (r.successful && r.l >= 1)
      out.emplace_back(double(r.l), r.f);
  return out;
}

struct SolverRate {
  std::string solver;
  std::size_t successes = 0;
  double final_gap = 0.0;
  RateFit fit;
  double max_scaled_p2 = 0.0;  // running max of (f - f*) l^2 at the end of the trace
  double max_scaled_p3 = 0.0;
};

inline SolverRate rate_for(const std::string &solver, const std::vector<CsvRow> &rows, double fstar) {
  SolverRate r;
  r.solver = solver;
  std::vector<std::pair<double, double>> gaps;
  for (const auto &[l, f] : success_sequence(rows)) {
    const double gap = f - fstar;
    gaps.emplace_back(l, gap);
    r.max_scaled_p2 = std::max(r.max_scaled_p2, gap * l * l);
    r.max_scaled_p3 = std::max(r.max_scaled_p3, gap * l * l * l);
  }
  r.successes = gaps.size();
  r.final_gap = gaps.empty() ? 0.0 : gaps.back().second;
  r.fit = tail_slope(gaps);
  return r;
}

enum class FstarSource { reference_run, metadata };

/// Reads every summary in `dir`, determines f*, writes rate_report.json and returns it.
inline json emit_rate_report(const fs::path &dir, FstarSource source) {
  std::vector<json> summaries;
  for (const auto &entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() != ".json" || entry.path().filename() == "rate_report.json")
      continue;
    std::ifstream in(entry.path());
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.contains("solver") || !j.contains("trace"))
      continue;
    summaries.push_back(std::move(j));
  }
  if (summaries.empty())
    throw Error("report: no run summaries in " + dir.string());
  std::sort(summaries.begin(), summaries.end(),
            [](const json &a, const json &b) { return a["solver"].get<std::string>() < b["solver"].get<std::string>(); });
  const json &first = summaries.front();

  double fstar = 0.0;
  std::string fstar_origin;
  if (source == FstarSource::metadata) {
    if (!first.contains("fstar"))
      throw Error("report: the problem carries no known optimal value; use the reference run");
    fstar = first["fstar"].get<double>();
    fstar_origin = "metadata";
  } else {
    BenchSpec spec;
    spec.data = first["dataset"].get<std::string>();
    spec.lambda = first["lambda"].get<double>();
    const std::string norm = first.value("normalize", "none");
    spec.normalize = norm == "scale_to_unit_range" ? NormalizeMode::scale_to_unit_range
                     : norm == "standardize"       ? NormalizeMode::standardize
                                                   : NormalizeMode::none;
    const Problem problem = load_problem(spec.data, spec.lambda, spec.normalize);
    const Vector x0 = make_initial_point(parse_init(first["init"].get<std::string>()),
                                         problem.oracle->dimension(), first["seed"].get<std::uint64_t>());
    SolverConfig cfg;
    cfg.grad_tol = 1e-12;
    cfg.max_outer = 1000000;
    const SolverRun ref = solve_hybrid_aarc(*problem.oracle, x0, cfg);
    if (ref.status != RunStatus::converged)
      throw Error("report: reference run did not converge (" + std::string(to_string(ref.status)) +
                  "), f* is not bracketed");
    fstar = ref.f_final;
    fstar_origin = "reference_run";
  }

  json report;
  report["fstar"] = fstar;
  report["fstar_source"] = fstar_origin;
  report["dataset"] = first["dataset"];
  report["solvers"] = json::array();
  for (const auto &s : summaries) {
    const std::string solver = s["solver"].get<std::string>();
    const SolverRate r = rate_for(solver, read_trace_csv(dir / s["trace"].get<std::string>()), fstar);
    report["solvers"].push_back({{"solver", solver},
                                 {"successes", r.successes},
                                 {"final_gap", r.final_gap},
                                 {"tail_slope", r.fit.slope},
                                 {"tail_points", r.fit.points},
                                 {"max_gap_l2", r.max_scaled_p2},
                                 {"max_gap_l3", r.max_scaled_p3}});
  }
  write_file(dir / "rate_report.json", report.dump(2) + "\n");
  return report;
}

} // namespace aarc::bench
