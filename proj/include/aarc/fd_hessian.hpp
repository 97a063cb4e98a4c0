#pragma once

#include <functional>
#include <string>
#include <utility>

#include "aarc/cubic_subproblem.hpp"

namespace aarc {

struct FDHessianConfig {
  double kappa_c = 1.0;
  double kappa_hs = 1.0;
  double gamma4 = 0.5;
  double h_init = 1e-2;
  int max_shrinks = 200;
  double psd_tol = 1e-10;

  void validate() const {
    if (!(kappa_c > 0.0) || !(kappa_hs > 0.0))
      throw Error("fd config: kappa_c and kappa_hs must be positive");
    if (!(gamma4 > 0.0 && gamma4 < 1.0))
      throw Error("fd config: gamma4 must lie in (0,1)");
    if (!(h_init > 0.0 && h_init <= 1.0))
      throw Error("fd config: h_init must lie in (0,1]");
    if (max_shrinks < 0)
      throw Error("fd config: max_shrinks must be non-negative");
  }
};

using GradientFn = std::function<Vector(const Vector &)>;

/// Symmetrized forward-difference Hessian plus the kappa_c h I shift; d + 1 gradient calls.
inline Matrix fd_hessian(const GradientFn &gradient, const Vector &x, double h, double kappa_c) {
  if (!(h > 0.0))
    throw Error("fd_hessian: h must be positive");
  const Eigen::Index d = x.size();
  const Vector g0 = gradient(x);
  require_dim(g0, d, "fd_hessian gradient");
  Matrix A(d, d);
  Vector probe = x;
  for (Eigen::Index j = 0; j < d; ++j) {
    probe[j] = x[j] + h;
    const Vector gj = gradient(probe);
    probe[j] = x[j];
    if (!gj.allFinite())
      throw NonFiniteError("fd_hessian: non-finite gradient at probe " + std::to_string(j));
    A.col(j) = (gj - g0) / h;
  }
  Matrix H = 0.5 * (A + A.transpose());
  H.diagonal().array() += kappa_c * h;
  return H;
}

using CubicSubsolver = std::function<SubproblemSolution(const CubicModel &)>;

struct StepPair {
  double h = 0.0;
  SubproblemSolution solution;
  Matrix H;
  int shrink_count = 0;
};

struct ShrinkBudgetError : Error {
  using Error::Error;
};

/// Shrinks h by gamma4 until h <= kappa_hs |s| for the step s computed with the h-Hessian.
inline StepPair search_step_pair(const GradientFn &gradient, const Vector &x, double f0, const Vector &g,
                                 double sigma, const FDHessianConfig &cfg, double h_start,
                                 const CubicSubsolver &subsolver) {
  StepPair out;
  double h = h_start;
  for (;;) {
    Matrix H = fd_hessian(gradient, x, h, cfg.kappa_c);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(H, Eigen::EigenvaluesOnly);
    const bool psd = eig.eigenvalues().minCoeff() >= -cfg.psd_tol;
    if (psd) {
      CubicModel m = CubicModel::from_matrix(f0, g, std::move(H), sigma);
      SubproblemSolution sol = subsolver(m);
      if (h <= cfg.kappa_hs * sol.s.norm()) {
        out.h = h;
        out.solution = std::move(sol);
        out.H = *m.H;
        return out;
      }
    }
    if (out.shrink_count >= cfg.max_shrinks)
      throw ShrinkBudgetError("search_step_pair: shrink budget of " + std::to_string(cfg.max_shrinks) +
                              " exhausted at h = " + std::to_string(h));
    h *= cfg.gamma4;
    ++out.shrink_count;
  }
}

} // namespace aarc
