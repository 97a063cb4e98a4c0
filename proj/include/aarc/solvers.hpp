#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "aarc/cubic_subproblem.hpp"
#include "aarc/estimate_sequence.hpp"
#include "aarc/fd_hessian.hpp"
#include "aarc/objective.hpp"

namespace aarc {

enum class HessianMode { exact, finite_difference };
enum class SubsolverKind { lanczos, gradient_descent };
enum class OnSuccessSigma { shrink_by_gamma1, keep, reset_to_min };
enum class Phase { SAS, AAS, ARC, AGD };
enum class RunStatus { converged, budget_exhausted, subsolver_failure };

inline const char *to_string(Phase p) {
  switch (p) {
  case Phase::SAS: return "SAS";
  case Phase::AAS: return "AAS";
  case Phase::ARC: return "ARC";
  case Phase::AGD: return "AGD";
  }
  return "?";
}

inline const char *to_string(RunStatus s) {
  switch (s) {
  case RunStatus::converged: return "converged";
  case RunStatus::budget_exhausted: return "budget_exhausted";
  case RunStatus::subsolver_failure: return "subsolver_failure";
  }
  return "?";
}

// What a cubic subproblem solve saw and returned; handed to SolverConfig::on_cubic_step.
struct CubicStepObservation {
  const Vector &centre;
  const Vector &gradient;
  double sigma;
  const SubproblemSolution &solution;
  double h;  // NaN with exact Hessians
};

struct SolverConfig {
  double gamma1 = 2.0;
  double gamma2 = 3.0;
  double gamma3 = 2.0;
  double eta = 1e-3;
  double sigma_min = 1e-8;
  double sigma0 = 1.0;
  double varsigma1 = 1.0;
  double kappa_theta = 0.5;
  double grad_tol = 1e-9;
  int max_outer = 10000;
  int max_escalations_per_success = 100;
  FDHessianConfig fd;
  OnSuccessSigma on_success_sigma = OnSuccessSigma::shrink_by_gamma1;
  bool linear_term_at_previous_point = false;
  SubsolverKind subsolver = SubsolverKind::lanczos;
  int lanczos_max_dim = 0;  // 0: full dimension
  bool enforce_stationarity = true;
  // Escalation compares psi(z) with the weighted objective up to this multiple of the
  // accumulated rounding magnitude.
  double escalation_rounding = 64.0 * std::numeric_limits<double>::epsilon();
  int max_successes = 0;  // 0: unlimited; used by restart rounds
  std::function<void(const CubicStepObservation &)> on_cubic_step;

  void validate() const {
    if (!(gamma1 > 1.0 && gamma2 > gamma1))
      throw Error("config: need gamma2 > gamma1 > 1");
    if (!(gamma3 > 1.0))
      throw Error("config: need gamma3 > 1");
    if (!(eta > 0.0) || !(sigma_min > 0.0) || !(varsigma1 > 0.0) || !(grad_tol > 0.0))
      throw Error("config: eta, sigma_min, varsigma1 and grad_tol must be positive");
    if (!(sigma0 >= sigma_min))
      throw Error("config: need sigma0 >= sigma_min");
    if (!(kappa_theta > 0.0 && kappa_theta < 1.0))
      throw Error("config: kappa_theta must lie in (0,1)");
    if (max_outer < 0 || max_escalations_per_success < 0)
      throw Error("config: budgets must be non-negative");
    fd.validate();
  }
};

struct TraceRecord {
  Phase phase = Phase::SAS;
  long outer_index = 0;
  bool successful = false;
  int l = 0;
  double f = 0.0;
  double grad_norm = 0.0;
  double sigma = 0.0;
  std::optional<double> varsigma;
  double wall_time_s = 0.0;
  OracleCalls calls;

  // Diagnostics for invariant checks; NaN where not applicable.
  double step_norm = std::numeric_limits<double>::quiet_NaN();
  double model_grad_norm = std::numeric_limits<double>::quiet_NaN();
  double step_grad_norm = std::numeric_limits<double>::quiet_NaN();  // |grad f| at the model centre
  bool condition1 = false;
  double h = std::numeric_limits<double>::quiet_NaN();
  double psi_min = std::numeric_limits<double>::quiet_NaN();
  double psi_target = std::numeric_limits<double>::quiet_NaN();  // weighted f at the new x-bar
  double psi_slack = 0.0;
  int escalations = 0;
  double inner_product = std::numeric_limits<double>::quiet_NaN();  // s^T grad f(y + s)
};

struct SolverRun {
  Vector x_final;
  double f_final = 0.0;
  double grad_norm_final = 0.0;
  long T1 = 0, T2 = 0, T3 = 0, T4 = 0;
  int l = 0;
  long successes = 0;
  long iterations = 0;
  std::vector<TraceRecord> trace;
  RunStatus status = RunStatus::converged;
  std::string message;
  OracleCalls calls;
  double wall_time_s = 0.0;
  std::vector<Vector> checkpoints;  // end point of every restart round
};

namespace detail {

struct Point {
  Vector x;
  double f = 0.0;
  Vector g;
  double gnorm = 0.0;
};

struct BudgetExhausted {};
struct SuccessCapReached {};

struct AcceptedStep {
  SubproblemSolution sol;
  double model_delta = 0.0;  // m(s) - f(x), computed without the f(x) offset
  double h = std::numeric_limits<double>::quiet_NaN();
};

class Engine {
public:
  Engine(const Objective &f, const SolverConfig &cfg, HessianMode mode)
      : oracle(f), cfg(cfg), mode(mode), h(cfg.fd.h_init), t0(std::chrono::steady_clock::now()) {
    cfg.validate();
  }

  CountingOracle oracle;
  const SolverConfig &cfg;
  HessianMode mode;
  double h;
  SolverRun run;
  long outer = 0;
  std::chrono::steady_clock::time_point t0;

  double elapsed() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }

  Point eval(Vector x) {
    Point p;
    p.f = oracle.value_gradient(x, p.g);
    p.gnorm = p.g.norm();
    p.x = std::move(x);
    return p;
  }

  void begin_iteration() {
    if (outer >= cfg.max_outer)
      throw BudgetExhausted{};
    ++outer;
  }

  double shrink(double sigma) const {
    switch (cfg.on_success_sigma) {
    case OnSuccessSigma::shrink_by_gamma1: return std::max(cfg.sigma_min, sigma / cfg.gamma1);
    case OnSuccessSigma::keep: return sigma;
    case OnSuccessSigma::reset_to_min: return cfg.sigma_min;
    }
    return sigma;
  }
  double inflate(double sigma) const { return cfg.gamma1 * sigma; }

  bool tiny_step(const Vector &s, const Vector &x) const {
    return s.norm() <= 1e-14 * (1.0 + x.norm());
  }

  SubproblemSolution subsolve(const LinearOperator &hvp, const Vector &g, double sigma) {
    const int max_dim = cfg.lanczos_max_dim > 0 ? cfg.lanczos_max_dim : int(g.size());
    if (cfg.subsolver == SubsolverKind::gradient_descent)
      return solve_gradient_descent(hvp, g, sigma, cfg.kappa_theta);
    return solve_lanczos(hvp, g, sigma, cfg.kappa_theta, max_dim);
  }

  AcceptedStep cubic_step(const Point &p, double sigma) {
    AcceptedStep out;
    if (mode == HessianMode::exact) {
      LinearOperator op;
      const Objective &f = oracle.objective();
      if (f.supports(kHessianVectorProduct)) {
        op = oracle.hessian_operator(p.x);
      } else if (f.supports(kHessian)) {
        Vector g;
        auto H = std::make_shared<Matrix>();
        f.value_gradient_hessian(p.x, g, *H);
        op = [H](const Vector &v) -> Vector { return *H * v; };
      } else {
        throw CapabilityError("exact Hessian mode needs Hessians or Hessian-vector products");
      }
      out.sol = subsolve(op, p.g, sigma);
    } else {
      GradientFn grad = [this](const Vector &x) { return oracle.fd_gradient(x); };
      CubicSubsolver sub = [this](const CubicModel &m) { return subsolve(m.hvp, m.g, m.sigma); };
      StepPair pair = search_step_pair(grad, p.x, p.f, p.g, sigma, cfg.fd, h, sub);
      run.T4 += pair.shrink_count;
      h = pair.h;
      out.h = pair.h;
      out.sol = std::move(pair.solution);
    }
    out.model_delta = out.sol.model_value;
    out.sol.model_value += p.f;
    if (cfg.on_cubic_step)
      cfg.on_cubic_step(CubicStepObservation{p.x, p.g, sigma, out.sol, out.h});
    if (!out.sol.satisfied_condition1)
      throw SubproblemFailure("subproblem returned without Condition 1", out.sol);
    if (cfg.enforce_stationarity && !out.sol.satisfied_stationarity)
      throw SubproblemFailure("subproblem returned without the stationarity identity", out.sol);
    return out;
  }

  void record(TraceRecord r) {
    r.outer_index = outer;
    r.wall_time_s = elapsed();
    r.calls = oracle.calls();
    run.trace.push_back(std::move(r));
  }

  void count_success() {
    ++run.successes;
  }

  void finish(const Point &p, RunStatus status, std::string message = {}) {
    run.x_final = p.x;
    run.f_final = p.f;
    run.grad_norm_final = p.gnorm;
    run.status = status;
    run.message = std::move(message);
    run.calls = oracle.calls();
    run.iterations = outer;
    run.wall_time_s = elapsed();
  }
};

inline TraceRecord step_record(Phase phase, bool ok, int l, const Point &cur, double sigma,
                               const AcceptedStep &st, double centre_gnorm) {
  TraceRecord r;
  r.phase = phase;
  r.successful = ok;
  r.l = l;
  r.f = cur.f;
  r.grad_norm = cur.gnorm;
  r.sigma = sigma;
  r.step_norm = st.sol.s.norm();
  r.model_grad_norm = st.sol.model_grad_norm;
  r.step_grad_norm = centre_gnorm;
  r.condition1 = st.sol.satisfied_condition1;
  r.h = st.h;
  return r;
}

// One Phase-I style iteration at p: success iff f(x + s) < m(s). Returns success.
inline bool cubic_simple_iteration(Engine &e, Point &p, double &sigma, Phase phase, int l) {
  e.begin_iteration();
  AcceptedStep st = e.cubic_step(p, sigma);
  const double centre_gnorm = p.gnorm;
  bool ok = false;
  if (!e.tiny_step(st.sol.s, p.x)) {
    Point q = e.eval(p.x + st.sol.s);
    ok = (q.f - p.f) - st.model_delta < 0.0;
    if (ok)
      p = std::move(q);
  }
  sigma = ok ? e.shrink(sigma) : e.inflate(sigma);
  if (phase == Phase::ARC) {
    l = int(e.run.successes) + (ok ? 1 : 0);
    e.run.l = l;
  }
  e.record(step_record(phase, ok, l, p, sigma, st, centre_gnorm));
  if (ok)
    e.count_success();
  return ok;
}

inline bool quadratic_simple_iteration(Engine &e, Point &p, double &sigma, Phase phase, int l) {
  e.begin_iteration();
  const Vector s = -p.g / sigma;
  const double delta = s.dot(p.g) + 0.5 * sigma * s.squaredNorm();
  bool ok = false;
  if (!e.tiny_step(s, p.x)) {
    Point q = e.eval(p.x + s);
    ok = (q.f - p.f) - delta < 0.0;
    if (ok)
      p = std::move(q);
  }
  sigma = ok ? e.shrink(sigma) : e.inflate(sigma);
  TraceRecord r;
  r.phase = phase;
  r.successful = ok;
  r.l = l;
  r.f = p.f;
  r.grad_norm = p.gnorm;
  r.sigma = sigma;
  r.step_norm = s.norm();
  r.condition1 = true;
  e.record(std::move(r));
  if (ok)
    e.count_success();
  return ok;
}

// Phase I: iterate until the first success. Returns false when already stationary.
inline bool phase_one(Engine &e, Point &p, double &sigma, Degree degree) {
  if (p.gnorm <= e.cfg.grad_tol)
    return false;
  long i = 0;
  for (;;) {
    ++i;
    const bool ok = degree == Degree::cubic ? cubic_simple_iteration(e, p, sigma, Phase::SAS, 1)
                                            : quadratic_simple_iteration(e, p, sigma, Phase::SAS, 1);
    if (ok) {
      e.run.T1 = i;
      return true;
    }
  }
}

// Repeated Phase-I style iterations until the gradient tolerance. After a hybrid switch
// these iterations continue the Phase-II count T2.
inline void adaptive_loop(Engine &e, Point &p, double &sigma, Phase phase, bool counts_as_phase_two = false) {
  while (p.gnorm > e.cfg.grad_tol) {
    if (counts_as_phase_two && e.outer < e.cfg.max_outer)
      ++e.run.T2;
    cubic_simple_iteration(e, p, sigma, phase, 0);
    if (e.cfg.max_successes > 0 && e.run.successes >= e.cfg.max_successes)
      throw SuccessCapReached{};
  }
}

struct HybridSwitch {
  int window = 10;
  double ratio = 0.1;
  bool switched = false;
};

// Phase II: estimate-sequence acceleration. xbar is updated in place; a stationary
// mixing point y is returned instead when one is met.
inline std::optional<Point> phase_two(Engine &e, Point &xbar, double &sigma, Degree degree,
                                      HybridSwitch *hybrid) {
  const SolverConfig &cfg = e.cfg;
  const bool cubic = degree == Degree::cubic;
  const double p_exp = cubic ? 3.0 : 2.0;
  const double mix = cubic ? 3.0 : 2.0;

  EstimateState est = init_estimate(degree, xbar.x, xbar.f, cfg.varsigma1);
  auto [z, psi] = minimize_estimate(est);
  int l = 1;
  Vector y = (double(l) * xbar.x + mix * z) / (double(l) + mix);
  Point py = y == xbar.x ? xbar : e.eval(y);
  long j = 0;

  for (;;) {
    if (cfg.max_successes > 0 && l >= cfg.max_successes)
      throw SuccessCapReached{};
    if (py.gnorm <= cfg.grad_tol)
      return py;
    e.begin_iteration();
    ++j;
    e.run.T2 = j;

    AcceptedStep st;
    Vector s;
    if (cubic) {
      st = e.cubic_step(py, sigma);
      s = st.sol.s;
    } else {
      s = -py.g / sigma;
      st.sol.s = s;
      st.sol.satisfied_condition1 = true;
    }
    const double ns = s.norm();
    TraceRecord r;
    if (e.tiny_step(s, py.x)) {
      sigma = e.inflate(sigma);
      r = step_record(Phase::AAS, false, l, xbar, sigma, st, py.gnorm);
      r.varsigma = est.varsigma;
      e.record(std::move(r));
      continue;
    }
    Point q = e.eval(py.x + s);
    const double inner = s.dot(q.g);
    const double rho = -inner / std::pow(ns, p_exp);
    if (!(rho >= cfg.eta)) {
      sigma = e.inflate(sigma);
      r = step_record(Phase::AAS, false, l, xbar, sigma, st, py.gnorm);
      r.varsigma = est.varsigma;
      r.inner_product = inner;
      e.record(std::move(r));
      continue;
    }

    sigma = e.shrink(sigma);
    ++l;
    const double weight = cubic ? 0.5 * l * (l + 1.0) : double(l);
    if (cfg.linear_term_at_previous_point)
      est = add_linear(std::move(est), weight, xbar.x, xbar.f, xbar.g);
    else
      est = add_linear(std::move(est), weight, q.x, q.f, q.g);
    std::tie(z, psi) = minimize_estimate(est);
    const double W = cubic ? l * (l + 1.0) * (l + 2.0) / 6.0 : 0.5 * l * (l + 1.0);
    const double target = W * q.f;
    auto slack = [&] { return cfg.escalation_rounding * (est.magnitude + std::abs(target)); };
    int esc = 0;
    while (psi < target - slack()) {
      if (esc >= cfg.max_escalations_per_success)
        throw SubproblemFailure("escalation budget exhausted", st.sol);
      est = raise_varsigma(std::move(est), cfg.gamma3 * est.varsigma);
      std::tie(z, psi) = minimize_estimate(est);
      ++esc;
      ++e.run.T3;
    }

    const double f_prev = xbar.f;
    xbar = std::move(q);
    e.run.l = l;
    y = (double(l) * xbar.x + mix * z) / (double(l) + mix);
    py = e.eval(y);

    r = step_record(Phase::AAS, true, l, xbar, sigma, st, 0.0);
    r.step_grad_norm = std::numeric_limits<double>::quiet_NaN();
    r.varsigma = est.varsigma;
    r.psi_min = psi;
    r.psi_target = target;
    r.psi_slack = slack();
    r.escalations = esc;
    r.inner_product = inner;
    e.record(std::move(r));
    e.count_success();

    if (xbar.gnorm <= cfg.grad_tol)
      return std::nullopt;
    if (hybrid && l > hybrid->window && std::abs(xbar.f - f_prev) <= hybrid->ratio * std::abs(f_prev)) {
      hybrid->switched = true;
      return std::nullopt;
    }
  }
}

template <class Body>
SolverRun guarded(Engine &e, Point &current, Body &&body) {
  try {
    body();
  } catch (const BudgetExhausted &) {
    e.finish(current, RunStatus::budget_exhausted, "outer iteration budget exhausted");
  } catch (const SuccessCapReached &) {
    e.finish(current, RunStatus::budget_exhausted, "success cap reached");
  } catch (const ShrinkBudgetError &err) {
    e.finish(current, RunStatus::subsolver_failure, err.what());
  } catch (const SubproblemFailure &err) {
    e.finish(current, RunStatus::subsolver_failure, err.what());
  } catch (const NonFiniteError &err) {
    e.finish(current, RunStatus::subsolver_failure, err.what());
  }
  return std::move(e.run);
}

inline SolverRun accelerated(const Objective &oracle, const Vector &x0, const SolverConfig &cfg,
                             HessianMode mode, Degree degree, HybridSwitch *hybrid) {
  Engine e(oracle, cfg, mode);
  require_dim(x0, oracle.dimension(), "solver x0");
  Point cur = e.eval(x0);
  double sigma = cfg.sigma0;
  return guarded(e, cur, [&] {
    if (!phase_one(e, cur, sigma, degree) || cur.gnorm <= cfg.grad_tol) {
      e.run.l = e.run.T1 > 0 ? 1 : 0;
      e.finish(cur, RunStatus::converged);
      return;
    }
    e.run.l = 1;
    if (cfg.max_successes == 1)
      throw SuccessCapReached{};
    if (auto stationary = phase_two(e, cur, sigma, degree, hybrid))
      cur = std::move(*stationary);
    else if (hybrid && hybrid->switched)
      adaptive_loop(e, cur, sigma, Phase::ARC, true);
    e.finish(cur, RunStatus::converged);
  });
}

} // namespace detail

struct SasResult {
  Vector x;
  double sigma = 0.0;
  long T1 = 0;
  std::vector<TraceRecord> trace;
  RunStatus status = RunStatus::converged;
};

/// Phase I alone: adaptive cubic steps until the first successful one.
inline SasResult sas_cubic(const Objective &oracle, const Vector &x0, double sigma0, const SolverConfig &cfg,
                           HessianMode mode) {
  SolverConfig c = cfg;
  c.sigma0 = sigma0;
  detail::Engine e(oracle, c, mode);
  require_dim(x0, oracle.dimension(), "sas_cubic x0");
  detail::Point cur = e.eval(x0);
  double sigma = sigma0;
  SolverRun run = detail::guarded(e, cur, [&] {
    detail::phase_one(e, cur, sigma, Degree::cubic);
    e.finish(cur, RunStatus::converged);
  });
  return {run.x_final, sigma, run.T1, std::move(run.trace), run.status};
}

/// Phase II alone, started from an accepted point.
inline SolverRun aas_cubic(const Objective &oracle, const Vector &xbar1, double sigma_in, const SolverConfig &cfg,
                           HessianMode mode) {
  detail::Engine e(oracle, cfg, mode);
  require_dim(xbar1, oracle.dimension(), "aas_cubic x-bar");
  detail::Point cur = e.eval(xbar1);
  double sigma = sigma_in;
  return detail::guarded(e, cur, [&] {
    e.run.l = 1;
    if (auto stationary = detail::phase_two(e, cur, sigma, Degree::cubic, nullptr))
      cur = std::move(*stationary);
    e.finish(cur, RunStatus::converged);
  });
}

inline SolverRun solve_aarc(const Objective &oracle, const Vector &x0, const SolverConfig &cfg = {}) {
  return detail::accelerated(oracle, x0, cfg, HessianMode::exact, Degree::cubic, nullptr);
}

inline SolverRun solve_aarcq(const Objective &oracle, const Vector &x0, const SolverConfig &cfg = {}) {
  return detail::accelerated(oracle, x0, cfg, HessianMode::finite_difference, Degree::cubic, nullptr);
}

inline SolverRun solve_aagd(const Objective &oracle, const Vector &x0, const SolverConfig &cfg = {}) {
  return detail::accelerated(oracle, x0, cfg, HessianMode::exact, Degree::quadratic, nullptr);
}

inline SolverRun solve_hybrid_aarc(const Objective &oracle, const Vector &x0, const SolverConfig &cfg = {},
                                   int switch_window = 10, double switch_ratio = 0.1) {
  detail::HybridSwitch sw{switch_window, switch_ratio, false};
  return detail::accelerated(oracle, x0, cfg, HessianMode::exact, Degree::cubic, &sw);
}

/// Non-accelerated adaptive cubic regularization: every iteration is a Phase-I style step.
inline SolverRun solve_arc_baseline(const Objective &oracle, const Vector &x0, const SolverConfig &cfg = {},
                                    HessianMode mode = HessianMode::exact) {
  detail::Engine e(oracle, cfg, mode);
  require_dim(x0, oracle.dimension(), "arc x0");
  detail::Point cur = e.eval(x0);
  double sigma = cfg.sigma0;
  return detail::guarded(e, cur, [&] {
    detail::adaptive_loop(e, cur, sigma, Phase::ARC);
    e.run.l = int(e.run.successes);
    e.finish(cur, RunStatus::converged);
  });
}

/// Nesterov's accelerated gradient with backtracking on the Lipschitz estimate.
inline SolverRun solve_agd_baseline(const Objective &oracle, const Vector &x0, double step_estimate = 1.0,
                                    int budget = 10000, double grad_tol = 1e-9) {
  if (!(step_estimate > 0.0))
    throw Error("agd: step estimate must be positive");
  SolverConfig cfg;
  cfg.max_outer = budget;
  cfg.grad_tol = grad_tol;
  detail::Engine e(oracle, cfg, HessianMode::exact);
  require_dim(x0, oracle.dimension(), "agd x0");
  detail::Point x = e.eval(x0);
  detail::Point y = x;
  double L = step_estimate;
  double t = 1.0;
  return detail::guarded(e, x, [&] {
    while (x.gnorm > grad_tol) {
      if (y.gnorm <= grad_tol) {
        x = y;
        break;
      }
      e.begin_iteration();
      detail::Point xn;
      for (;;) {
        xn = e.eval(y.x - y.g / L);
        if (xn.f - y.f <= -0.5 / L * y.g.squaredNorm())
          break;
        L *= 2.0;
      }
      const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      Vector ny = xn.x + ((t - 1.0) / tn) * (xn.x - x.x);
      x = std::move(xn);
      t = tn;
      if (x.gnorm > grad_tol)
        y = e.eval(std::move(ny));
      TraceRecord r;
      r.phase = Phase::AGD;
      r.successful = true;
      r.l = int(e.outer);
      e.run.l = r.l;
      r.f = x.f;
      r.grad_norm = x.gnorm;
      r.sigma = L;
      r.condition1 = true;
      e.record(std::move(r));
      e.count_success();
    }
    e.run.l = int(e.run.successes);
    e.finish(x, RunStatus::converged);
  });
}

using InnerSolver = std::function<SolverRun(const Objective &, const Vector &, const SolverConfig &)>;

/// k rounds of an inner solver, each stopped after m successful iterations and restarted
/// from the point it reached with a fresh estimate sequence.
inline SolverRun restart_wrapper(const InnerSolver &solver, const Objective &oracle, const Vector &x0,
                                 const SolverConfig &cfg, int m, int k) {
  if (m < 1 || k < 1)
    throw Error("restart_wrapper: need m >= 1 and k >= 1");
  SolverConfig inner = cfg;
  inner.max_successes = m;
  SolverRun total;
  Vector x = x0;
  long outer_offset = 0;
  double time_offset = 0.0;
  OracleCalls calls;
  for (int round = 0; round < k; ++round) {
    SolverRun r = solver(oracle, x, inner);
    for (auto rec : r.trace) {
      rec.outer_index += outer_offset;
      rec.wall_time_s += time_offset;
      rec.calls.values += calls.values;
      rec.calls.gradients += calls.gradients;
      rec.calls.hvps += calls.hvps;
      rec.calls.fd_gradients += calls.fd_gradients;
      total.trace.push_back(rec);
    }
    outer_offset += r.iterations;
    time_offset += r.wall_time_s;
    calls.values += r.calls.values;
    calls.gradients += r.calls.gradients;
    calls.hvps += r.calls.hvps;
    calls.fd_gradients += r.calls.fd_gradients;
    total.T1 += r.T1;
    total.T2 += r.T2;
    total.T3 += r.T3;
    total.T4 += r.T4;
    total.l += r.l;
    total.successes += r.successes;
    total.checkpoints.push_back(r.x_final);
    x = r.x_final;
    total.x_final = r.x_final;
    total.f_final = r.f_final;
    total.grad_norm_final = r.grad_norm_final;
    total.status = r.status;
    total.message = r.message;
    if (r.status == RunStatus::subsolver_failure)
      break;
  }
  total.iterations = outer_offset;
  total.wall_time_s = time_offset;
  total.calls = calls;
  return total;
}

} // namespace aarc
